"""Verifiable shuffle of a pair of ciphertexts.

An OR-composition of two Chaum-Pedersen conjunctions: either
``out[k] = reencrypt(in[k])`` for both k, or ``out[k] = reencrypt(in[1-k])``.
The verifier learns that one ordering holds but not which.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..codec import Reader, Writer
from ..elgamal import Ciphertext, reencrypt
from ..group import DecodeError, Group
from .context import TAG_PAIR_SHUFFLE

DOMAIN = b"PAIR-SHUFFLE"
IDENTITY, SWAP = 0, 1


@dataclass(frozen=True)
class PairShuffleProof:
    # commitments[branch][k] = (g^u, y^u) for ciphertext k of that branch
    commitments: tuple
    challenges: tuple  # (c_identity, c_swap)
    responses: tuple  # responses[branch][k]

    def encode(self, group: Group) -> bytes:
        w = Writer().u8(TAG_PAIR_SHUFFLE)
        for branch in self.commitments:
            for pair in branch:
                w.element(group, pair[0]).element(group, pair[1])
        w.scalar(self.challenges[0]).scalar(self.challenges[1])
        for branch in self.responses:
            w.scalar(branch[0]).scalar(branch[1])
        return w.getvalue()

    @classmethod
    def read(cls, group: Group, r: Reader) -> "PairShuffleProof":
        if r.u8() != TAG_PAIR_SHUFFLE:
            raise DecodeError("not a pair-shuffle proof")
        coms = tuple(tuple((r.element(group), r.element(group)) for _ in range(2)) for _ in range(2))
        chal = (r.scalar(group), r.scalar(group))
        resp = tuple((r.scalar(group), r.scalar(group)) for _ in range(2))
        return cls(coms, chal, resp)

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "PairShuffleProof":
        r = Reader(data)
        p = cls.read(group, r)
        r.done()
        return p


def shuffle_pair(group: Group, y, pair: Sequence[Ciphertext], swap: bool, s: Sequence[int]) -> tuple:
    src = (pair[1], pair[0]) if swap else (pair[0], pair[1])
    return (reencrypt(group, y, src[0], s[0]), reencrypt(group, y, src[1], s[1]))


def _ddh_tuples(group: Group, inp, out, branch: int):
    """(X, Z) = (out.a / in.a, out.b / in.b) for each output under a branch."""
    src = (inp[0], inp[1]) if branch == IDENTITY else (inp[1], inp[0])
    return [(group.div(o.a, i.a), group.div(o.b, i.b)) for i, o in zip(src, out)]


def _challenge(group: Group, y, inp, out, commitments, context: bytes) -> int:
    enc = group.encode
    parts = [context, enc(y)]
    parts += [c.encode(group) for c in (*inp, *out)]
    parts += [enc(e) for branch in commitments for pair in branch for e in pair]
    return group.hash_to_scalar(DOMAIN, parts)


def prove_pair_shuffle(group: Group, inp: Sequence[Ciphertext], out: Sequence[Ciphertext], swap: bool,
                       s: Sequence[int], y, context: bytes, rng=None) -> PairShuffleProof:
    q = group.order
    real = SWAP if swap else IDENTITY
    fake = 1 - real
    y_key = y.key if hasattr(y, "key") else y

    commitments: list = [None, None]
    responses: list = [None, None]
    challenges = [0, 0]

    # simulated branch: pick the challenge and responses, solve for commitments
    c_fake = group.random_scalar(rng)
    z_fake = (group.random_scalar(rng), group.random_scalar(rng))
    neg = (-c_fake) % q
    coms = []
    for (X, Z), z in zip(_ddh_tuples(group, inp, out, fake), z_fake):
        coms.append((group.mul(group.base_exp(z), group.exp(X, neg)),
                     group.mul(group.exp(y_key, z), group.exp(Z, neg))))
    commitments[fake] = tuple(coms)
    responses[fake] = z_fake
    challenges[fake] = c_fake

    u = (group.random_scalar(rng), group.random_scalar(rng))
    commitments[real] = tuple((group.base_exp(uk), group.exp(y_key, uk)) for uk in u)

    c = _challenge(group, y_key, inp, out, commitments, context)
    c_real = (c - c_fake) % q
    challenges[real] = c_real
    responses[real] = tuple((uk + c_real * sk) % q for uk, sk in zip(u, s))
    return PairShuffleProof(tuple(commitments), tuple(challenges), tuple(responses))


def verify_pair_shuffle(group: Group, inp: Sequence[Ciphertext], out: Sequence[Ciphertext],
                        proof: PairShuffleProof, y, context: bytes) -> bool:
    q = group.order
    y_key = y.key if hasattr(y, "key") else y
    c = _challenge(group, y_key, inp, out, proof.commitments, context)
    if (proof.challenges[0] + proof.challenges[1]) % q != c:
        return False
    for branch in (IDENTITY, SWAP):
        cb = proof.challenges[branch]
        for (X, Z), (A1, A2), z in zip(_ddh_tuples(group, inp, out, branch),
                                       proof.commitments[branch], proof.responses[branch]):
            if group.base_exp(z) != group.mul(A1, group.exp(X, cb)):
                return False
            if group.exp(y_key, z) != group.mul(A2, group.exp(Z, cb)):
                return False
    return True
