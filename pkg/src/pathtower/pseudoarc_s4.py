"""The decorated tower construction together with its certificate."""
from __future__ import annotations

from .certificate import CertificateReport, Check, Line, MutationResult, mutation_scan, plan, run_checks, verify_blacksquare
from .s4 import (
    DecoratedTower,
    TaskRecord,
    TaskSpec,
    build,
    parse_tasks,
    seed,
    step_4k,
    step_4k1,
    step_4k2,
    step_4k3,
)

__all__ = [
    "CertificateReport", "Check", "Line", "MutationResult", "mutation_scan", "plan", "run_checks",
    "verify_blacksquare", "DecoratedTower", "TaskRecord", "TaskSpec", "build", "parse_tasks", "seed",
    "step_4k", "step_4k1", "step_4k2", "step_4k3",
]
