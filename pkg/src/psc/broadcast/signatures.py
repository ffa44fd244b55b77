"""Schnorr signatures over the protocol group.

Broadcast messages are signed over a digest of their context (session, phase,
round, sender) and the SHA-256 of the payload, so a relay that only holds the
payload digest can still check every signature on a chain.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Mapping

from ..group import DecodeError, Group

SIG_BYTES = 64


class UnknownSigner(KeyError):
    """The signer is not on the roster."""


@dataclass(frozen=True)
class SigningKey:
    secret: int
    public: object

    @classmethod
    def generate(cls, group: Group, rng=None) -> "SigningKey":
        x = group.random_nonzero_scalar(rng)
        return cls(x, group.base_exp(x))


def payload_digest(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()


def message_digest(session: bytes, phase: int, round: int, sender: str, digest: bytes) -> bytes:
    s = sender.encode()
    return hashlib.sha256(
        b"PSC-SIG" + struct.pack(">H", len(session)) + session + struct.pack(">BI", phase, round)
        + struct.pack(">H", len(s)) + s + digest
    ).digest()


def sign_message(group: Group, key: SigningKey, msg: bytes) -> bytes:
    sk = key.secret.to_bytes(32, "little")
    k = group.hash_to_scalar(b"SIG-NONCE", [sk, msg]) or 1
    R = group.base_exp(k)
    e = group.hash_to_scalar(b"SIG", [group.encode(R), group.encode(key.public), msg])
    z = (k + e * key.secret) % group.order
    return group.encode(R) + z.to_bytes(32, "little")


def verify_message(group: Group, public, msg: bytes, sig: bytes) -> bool:
    if len(sig) != SIG_BYTES:
        return False
    try:
        R = group.decode(sig[:32])
        z = group.decode_scalar(sig[32:])
    except DecodeError:
        return False
    e = group.hash_to_scalar(b"SIG", [sig[:32], group.encode(public), msg])
    return group.base_exp(z) == group.mul(R, group.exp(public, e))


def sign(group: Group, key: SigningKey, session: bytes, phase: int, round: int, sender: str,
         payload: bytes) -> bytes:
    return sign_message(group, key, message_digest(session, phase, round, sender, payload_digest(payload)))


def verify_sig(group: Group, roster: Mapping[str, object], signer: str, sig: bytes, session: bytes,
               phase: int, round: int, sender: str, payload: bytes | None = None,
               digest: bytes | None = None) -> bool:
    """Check ``signer``'s signature on a message given either its payload or
    the payload's SHA-256."""
    if signer not in roster:
        raise UnknownSigner(signer)
    if digest is None:
        digest = payload_digest(payload or b"")
    return verify_message(group, roster[signer], message_digest(session, phase, round, sender, digest), sig)
