"""Outcomes of a session: a measurement or a blame verdict."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum


class Evidence(str, Enum):
    EQUIVOCATION = "Equivocation"
    MISSING_MESSAGE = "MissingMessage"
    INVALID_PROOF = "InvalidProof"
    WRONG_STATEMENT = "WrongStatement"
    IDENTITY_FIRST_COMPONENT = "IdentityFirstComponent"
    BAD_KEY_SIGNATURE = "BadKeySignature"


@dataclass(frozen=True)
class BlameReport:
    phase: str
    accused: tuple  # sorted CP ids
    evidence: Evidence  # for the first accused id

    @classmethod
    def from_findings(cls, phase: str, findings: dict) -> "BlameReport":
        """``findings`` maps accused CP id to its evidence."""
        accused = tuple(sorted(findings))
        return cls(phase, accused, findings[accused[0]])

    def to_dict(self) -> dict:
        return {"outcome": "blame", "value": None, "accused": list(self.accused),
                "phase": self.phase, "evidence": self.evidence.value}


@dataclass(frozen=True)
class MeasurementResult:
    noisy_count: int
    n: int
    mode: str
    excluded: tuple = ()
    timings: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"outcome": "result", "value": self.noisy_count, "accused": [], "phase": None, "evidence": None}


@dataclass(frozen=True)
class DpOutcome:
    status: str  # "submitted" or "halted"
    reason: str = ""

    def to_dict(self) -> dict:
        return {"outcome": self.status, "value": None, "accused": [], "phase": None, "evidence": None}


def to_json(outcome) -> str:
    """Single-line JSON with a stable key order and no timing data."""
    return json.dumps(outcome.to_dict(), separators=(",", ":"))
