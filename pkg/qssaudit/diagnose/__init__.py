"""Comparison of complete and QSS runs and per-transition audits."""

from .audit import AuditRecord, per_event_audit
from .compare import Verdict, classify_outcome, compare_runs
from .report import DiagnosisReport, FastStabilityCheck, diagnose, qss_fast_stability
from .sep import find_long_term_sep

__all__ = [
    "AuditRecord",
    "DiagnosisReport",
    "FastStabilityCheck",
    "Verdict",
    "classify_outcome",
    "compare_runs",
    "diagnose",
    "find_long_term_sep",
    "per_event_audit",
    "qss_fast_stability",
]
