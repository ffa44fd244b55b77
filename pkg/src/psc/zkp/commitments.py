"""Hash commitments: ``digest = SHA-256("COM" || nonce || value)``.

Hiding and binding in the random-oracle model.  The 32-byte nonce is part of
the opening.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from ..group import default_rng

NONCE_BYTES = 32


@dataclass(frozen=True)
class Opening:
    value: bytes
    nonce: bytes


@dataclass(frozen=True)
class Commitment:
    digest: bytes
    opening: Opening | None = None  # held only by the committer


def _digest(value: bytes, nonce: bytes) -> bytes:
    return hashlib.sha256(b"COM" + nonce + value).digest()


def commit(value: bytes, rng=None) -> Commitment:
    nonce = (rng or default_rng()).randbytes(NONCE_BYTES)
    return Commitment(_digest(value, nonce), Opening(value, nonce))


def open_commitment(c: Commitment) -> Opening:
    if c.opening is None:
        raise ValueError("no opening held for this commitment")
    return c.opening


def verify_opening(digest: bytes, opening: Opening) -> bool:
    if len(opening.nonce) != NONCE_BYTES:
        return False
    return hmac.compare_digest(digest, _digest(opening.value, opening.nonce))
