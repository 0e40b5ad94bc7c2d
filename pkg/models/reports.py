"""
Domain model for experiment outputs, independent of the file format they are written in.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence


@dataclass
class ReportTable:
    """One plottable data product: a header and rows of scalar cells."""

    name: str
    header: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)


@dataclass
class InvariantCheck:
    """Outcome of a built-in check. Hard checks decide the exit status."""

    name: str
    passed: bool
    detail: str = ""
    hard: bool = True


@dataclass
class ExperimentResult:
    """Everything an experiment service hands to the report writer."""

    experiment: str
    tables: List[ReportTable] = field(default_factory=list)
    headline: Dict[str, Any] = field(default_factory=dict)
    checks: List[InvariantCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if check.hard)
