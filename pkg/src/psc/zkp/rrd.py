"""Sigma-protocol for a combined re-encryption, rerandomization and partial
decryption.

Statement: ciphertext ``(A, B)``, result ``(alpha, beta)``, the key ``Y``
currently protecting the ciphertext and the prover's key share ``y_j``.
Witness ``(r, sigma, x_j)`` with::

    alpha = (A g^sigma)^r
    beta  = (B Y^sigma)^r alpha^(-x_j)
    y_j   = g^x_j
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..codec import Reader, Writer
from ..elgamal import Ciphertext
from ..group import DecodeError, Group
from .context import TAG_RRD, TAG_RRD_BATCH

DOMAIN = b"RRD"


class SameChallenge(ValueError):
    """Extraction needs two transcripts with distinct challenges."""


@dataclass(frozen=True)
class RrdStatement:
    A: object
    B: object
    alpha: object
    beta: object
    Y: object
    y_j: object

    @classmethod
    def of(cls, before: Ciphertext, after: Ciphertext, Y, y_j) -> "RrdStatement":
        return cls(before.a, before.b, after.a, after.b, Y, y_j)

    def encode(self, group: Group) -> bytes:
        e = group.encode
        return e(self.A) + e(self.B) + e(self.alpha) + e(self.beta) + e(self.Y) + e(self.y_j)


@dataclass(frozen=True)
class RrdWitness:
    r: int
    sigma: int
    x: int


@dataclass(frozen=True)
class RrdProof:
    T1: object
    T2: object
    T3: object
    challenge: int
    r1: int
    r2: int
    r3: int

    def encode(self, group: Group) -> bytes:
        return (Writer().u8(TAG_RRD).element(group, self.T1).element(group, self.T2)
                .element(group, self.T3).scalar(self.challenge)
                .scalar(self.r1).scalar(self.r2).scalar(self.r3).getvalue())

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "RrdProof":
        r = Reader(data)
        if r.u8() != TAG_RRD:
            raise DecodeError("not an RRD proof")
        p = cls(r.element(group), r.element(group), r.element(group),
                r.scalar(group), r.scalar(group), r.scalar(group), r.scalar(group))
        r.done()
        return p


# -- Sigma moves --------------------------------------------------------------

def commit(group: Group, st: RrdStatement, rng=None):
    t1, t2, t3 = (group.random_scalar(rng) for _ in range(3))
    T1 = group.mul(group.exp(st.A, t1), group.base_exp(t2))
    T2 = group.mul(group.mul(group.exp(st.B, t1), group.exp(st.Y, t2)), group.exp(st.alpha, t3))
    T3 = group.base_exp(t3)
    return (t1, t2, t3), (T1, T2, T3)


def respond(group: Group, w: RrdWitness, nonces, c: int):
    q = group.order
    t1, t2, t3 = nonces
    return ((w.r * c + t1) % q, (w.sigma * w.r * c + t2) % q, (-w.x * c + t3) % q)


def check(group: Group, st: RrdStatement, commitments, c: int, responses, y_j_neg_c=None) -> bool:
    T1, T2, T3 = commitments
    r1, r2, r3 = responses
    exp, mul = group.exp, group.mul
    if mul(exp(st.A, r1), group.base_exp(r2)) != mul(exp(st.alpha, c), T1):
        return False
    if mul(mul(exp(st.B, r1), exp(st.Y, r2)), exp(st.alpha, r3)) != mul(exp(st.beta, c), T2):
        return False
    if y_j_neg_c is None:
        y_j_neg_c = exp(st.y_j, (-c) % group.order)
    return group.base_exp(r3) == mul(y_j_neg_c, T3)


def challenge(group: Group, st: RrdStatement, commitments, context: bytes) -> int:
    return group.hash_to_scalar(DOMAIN, [context, st.encode(group), *(group.encode(T) for T in commitments)])


# -- non-interactive ----------------------------------------------------------

def prove_rrd(group: Group, st: RrdStatement, w: RrdWitness, context: bytes, rng=None) -> RrdProof:
    nonces, Ts = commit(group, st, rng)
    c = challenge(group, st, Ts, context)
    return RrdProof(*Ts, c, *respond(group, w, nonces, c))


def verify_rrd(group: Group, st: RrdStatement, proof: RrdProof, context: bytes) -> bool:
    Ts = (proof.T1, proof.T2, proof.T3)
    if proof.challenge != challenge(group, st, Ts, context):
        return False
    return check(group, st, Ts, proof.challenge, (proof.r1, proof.r2, proof.r3))


def extract_rrd(group: Group, p1: RrdProof, p2: RrdProof) -> RrdWitness:
    """Special-soundness extractor for two transcripts sharing commitments."""
    if (p1.T1, p1.T2, p1.T3) != (p2.T1, p2.T2, p2.T3):
        raise ValueError("transcripts do not share commitments")
    q = group.order
    dc = (p1.challenge - p2.challenge) % q
    if dc == 0:
        raise SameChallenge("challenges are equal")
    inv = pow(dc, -1, q)
    r = (p1.r1 - p2.r1) * inv % q
    sigma = (p1.r2 - p2.r2) * pow(r * dc % q, -1, q) % q
    x = -(p1.r3 - p2.r3) * inv % q
    return RrdWitness(r, sigma, x)


def fork_rrd(group: Group, st: RrdStatement, w: RrdWitness, c1: int, c2: int, rng=None):
    """Two transcripts with shared commitments and the given challenges
    (rewinding the prover).  Test-only helper for extraction."""
    nonces, Ts = commit(group, st, rng)
    return (RrdProof(*Ts, c1 % group.order, *respond(group, w, nonces, c1)),
            RrdProof(*Ts, c2 % group.order, *respond(group, w, nonces, c2)))


# -- vectors with one challenge ------------------------------------------------

@dataclass(frozen=True)
class RrdBatchProof:
    commitments: tuple  # tuple of (T1, T2, T3)
    challenge: int
    responses: tuple  # tuple of (r1, r2, r3)

    def encode(self, group: Group) -> bytes:
        w = Writer().u8(TAG_RRD_BATCH).u32(len(self.commitments))
        for Ts in self.commitments:
            for T in Ts:
                w.element(group, T)
        w.scalar(self.challenge)
        for rs in self.responses:
            for s in rs:
                w.scalar(s)
        return w.getvalue()

    @classmethod
    def read(cls, group: Group, r: Reader, limit: int | None = None) -> "RrdBatchProof":
        if r.u8() != TAG_RRD_BATCH:
            raise DecodeError("not an RRD batch proof")
        n = r.u32()
        if limit is not None and n > limit:
            raise DecodeError("RRD batch too long")
        if n * 6 * 32 + 32 > r.remaining:
            raise DecodeError("truncated RRD batch")
        Ts = tuple(tuple(r.element(group) for _ in range(3)) for _ in range(n))
        c = r.scalar(group)
        rs = tuple(tuple(r.scalar(group) for _ in range(3)) for _ in range(n))
        return cls(Ts, c, rs)


def _batch_challenge(group: Group, statements: Sequence[RrdStatement], commitments, context: bytes) -> int:
    enc = group.encode
    body = b"".join(st.encode(group) + b"".join(enc(T) for T in Ts) for st, Ts in zip(statements, commitments))
    return group.hash_to_scalar(DOMAIN + b"-BATCH", [context, body])


def prove_rrd_batch(group: Group, statements: Sequence[RrdStatement], witnesses: Sequence[RrdWitness],
                    context: bytes, rng=None) -> RrdBatchProof:
    committed = [commit(group, st, rng) for st in statements]
    Ts = tuple(c[1] for c in committed)
    c = _batch_challenge(group, statements, Ts, context)
    rs = tuple(respond(group, w, nonces, c) for w, (nonces, _) in zip(witnesses, committed))
    return RrdBatchProof(Ts, c, rs)


def verify_rrd_batch(group: Group, statements: Sequence[RrdStatement], proof: RrdBatchProof, context: bytes) -> bool:
    if len(statements) != len(proof.commitments) or len(statements) != len(proof.responses):
        return False
    if proof.challenge != _batch_challenge(group, statements, proof.commitments, context):
        return False
    cache = {}
    neg_c = (-proof.challenge) % group.order
    for st, Ts, rs in zip(statements, proof.commitments, proof.responses):
        if st.y_j not in cache:
            cache[st.y_j] = group.exp(st.y_j, neg_c)
        if not check(group, st, Ts, proof.challenge, rs, cache[st.y_j]):
            return False
    return True
