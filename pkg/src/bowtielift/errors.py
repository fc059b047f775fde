"""Exception types carrying machine-readable diagnosis payloads."""

from __future__ import annotations

from typing import Any


class StructureError(Exception):
    """Base error; `payload` holds the certificate the CLI emits as JSON."""

    def __init__(self, message: str, **payload: Any):
        super().__init__(message)
        self.payload = payload


class BowtieFound(StructureError):
    """Input contains a bowtie; payload carries the monomorphism."""


class NotGood(StructureError):
    """A vertex lies in no chimney and no K4; payload names it."""


class DecompositionError(StructureError):
    """A triangle-edge component is neither a chimney nor a K4."""


class NotAdmissible(StructureError):
    """An ordering violates one of the admissibility conditions."""


class InconsistentStructure(StructureError):
    """Stored pair data conflicts with itself (bad reduction/completion input)."""


class BudgetExceeded(StructureError):
    """A bounded search ran out of budget; payload holds partial results."""
