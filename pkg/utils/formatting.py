"""
Number and summary formatting helpers, shared across services and the CLI.
"""

from typing import Any


def format_number(value: Any) -> str:
    """Render a table cell; floats use 17 significant digits so they round-trip."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if value is None:
        return ""
    return str(value)


def summary_line(label: str, value: Any, width: int = 34) -> str:
    """One aligned `label ..... value` line of the terminal summary."""
    if isinstance(value, float):
        rendered = f"{value:.6g}"
    else:
        rendered = str(value)
    return f"{label:<{width}} {rendered}"
