"""
Service Layer for ergodic-lab
One orchestration service per experiment plus the report writer
"""

from .concentration_service import run_concentration
from .qet_service import run_qet
from .measure_service import run_measure
from .schmidt_service import run_schmidt
from .report_service import write_reports, render_summary

__all__ = [
    'run_concentration',
    'run_qet',
    'run_measure',
    'run_schmidt',
    'write_reports',
    'render_summary',
]
