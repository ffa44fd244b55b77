"""Schnorr proof of knowledge of a discrete logarithm."""

from __future__ import annotations

from dataclasses import dataclass

from ..codec import Reader, Writer
from ..group import DecodeError, Group
from .context import TAG_DL

DOMAIN = b"DL"


@dataclass(frozen=True)
class DlProof:
    commitment: object  # T = g^t
    challenge: int
    response: int  # z = t + c x

    def encode(self, group: Group) -> bytes:
        return (Writer().u8(TAG_DL).element(group, self.commitment)
                .scalar(self.challenge).scalar(self.response).getvalue())

    @classmethod
    def read(cls, group: Group, r: Reader) -> "DlProof":
        if r.u8() != TAG_DL:
            raise DecodeError("not a DL proof")
        return cls(r.element(group), r.scalar(group), r.scalar(group))

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "DlProof":
        r = Reader(data)
        p = cls.read(group, r)
        r.done()
        return p


# Sigma-protocol moves, shared with the interactive compiler.

def commit(group: Group, rng=None):
    t = group.random_scalar(rng)
    return t, group.base_exp(t)


def respond(group: Group, x: int, t: int, c: int) -> int:
    return (t + c * x) % group.order


def check(group: Group, Y, T, c: int, z: int) -> bool:
    return group.base_exp(z) == group.mul(T, group.exp(Y, c))


def extract(group: Group, c1: int, z1: int, c2: int, z2: int) -> int:
    q = group.order
    return (z1 - z2) * pow(c1 - c2, -1, q) % q


def challenge(group: Group, Y, T, context: bytes) -> int:
    return group.hash_to_scalar(DOMAIN, [context, group.encode(Y), group.encode(T)])


def prove_dl(group: Group, x: int, Y, context: bytes, rng=None) -> DlProof:
    t, T = commit(group, rng)
    c = challenge(group, Y, T, context)
    return DlProof(T, c, respond(group, x, t, c))


def verify_dl(group: Group, Y, proof: DlProof, context: bytes) -> bool:
    if proof.challenge != challenge(group, Y, proof.commitment, context):
        return False
    return check(group, Y, proof.commitment, proof.challenge, proof.response)
