"""Protocol phase tags.  The numeric value is the phase byte on the wire."""

from __future__ import annotations

from enum import IntEnum


class Phase(IntEnum):
    KEYGEN = 1
    DATA_COLLECTION = 2
    NOISE = 3
    INPUT_SUBMISSION = 4
    SHUFFLE = 5
    RRD = 6
    OUTPUT = 7
    HANDSHAKE = 8

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "Phase":
        for p, name in _LABELS.items():
            if name.lower() == label.lower() or p.name.lower() == label.lower():
                return p
        raise ValueError(f"unknown phase {label!r}")


_LABELS = {
    Phase.KEYGEN: "KeyGen",
    Phase.DATA_COLLECTION: "DataCollection",
    Phase.NOISE: "NoiseGen",
    Phase.INPUT_SUBMISSION: "InputSubmission",
    Phase.SHUFFLE: "Shuffling",
    Phase.RRD: "RRD",
    Phase.OUTPUT: "Output",
    Phase.HANDSHAKE: "Handshake",
}
