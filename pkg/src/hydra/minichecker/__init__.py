"""Reference incremental checker for MiniLang.

MiniLang is a small block-scoped, statically typed statement language (see
docs/minilang.md). The checker streams input, reports progress at safe
statement boundaries, snapshots its state into resumable checkpoint
sessions, and stops at the first error. ``batch_check`` is an independent
whole-program oracle for the same language.
"""

from .batch import BatchResult, batch_check
from .session import (
    BOUNDARY_CATEGORIES,
    DEFAULT_INTERVAL,
    ERROR_CATEGORIES,
    ActiveSession,
    CheckerHost,
    CheckerState,
    Snapshot,
)

__all__ = [
    "ActiveSession",
    "BatchResult",
    "BOUNDARY_CATEGORIES",
    "CheckerHost",
    "CheckerState",
    "DEFAULT_INTERVAL",
    "ERROR_CATEGORIES",
    "Snapshot",
    "batch_check",
]
