"""Fiat-Shamir context binding and proof scheme tags."""

from __future__ import annotations

import struct

PROTOCOL_VERSION = b"PSC-v1"

TAG_DL = 0x01
TAG_RRD = 0x02
TAG_PAIR_SHUFFLE = 0x03
TAG_SHUFFLE = 0x04
TAG_RRD_BATCH = 0x05
TAG_DL_BATCH = 0x06


def fs_context(session: bytes, phase: str, prover: str, round_index: int, extra: bytes = b"") -> bytes:
    """Bytes mixed into every challenge so proofs cannot be replayed across
    sessions, phases, provers or rounds."""
    parts = [PROTOCOL_VERSION, session, phase.encode(), prover.encode(), struct.pack(">I", round_index), extra]
    return b"".join(struct.pack(">I", len(p)) + p for p in parts)
