"""Verifiable re-encryption shuffle of a ciphertext vector.

Commitment-consistent permutation argument in the Terelius-Wikstrom style:
the prover commits to the permutation matrix column by column, then proves in
one Sigma-protocol that the commitment opens to a permutation and that the
output is the committed permutation of re-encryptions of the input.

Convention: ``out[i] = reencrypt(in[perm[i]], s[i])``.
"""

from __future__ import annotations

import hashlib

from dataclasses import dataclass
from typing import Sequence

from ..codec import Reader, Writer
from ..elgamal import Ciphertext, reencrypt
from ..group import DecodeError, Group
from .context import TAG_SHUFFLE

DOMAIN = b"SHUFFLE"


class LengthMismatch(ValueError):
    """Input and output vectors differ in length."""


_GEN_TAG = b"PSC-SHUFFLE-GEN"
_gen_cache: dict = {}


def generators(group: Group, count: int) -> tuple:
    """Independent commitment bases ``h`` and ``h_1..h_count`` with unknown logs."""
    h, hs = _gen_cache.get(group.name) or (group.hash_to_element(_GEN_TAG, b"h"), [])
    while len(hs) < count:
        hs.append(group.hash_to_element(_GEN_TAG, len(hs).to_bytes(4, "big")))
    _gen_cache[group.name] = (h, hs)
    return h, tuple(hs[:count])


@dataclass(frozen=True)
class ShuffleProof:
    perm_commitment: tuple  # c_1..c_N
    chain: tuple  # c^_1..c^_N
    challenge: int
    s1: int
    s2: int
    s3: int
    s4: int
    s_hat: tuple
    s_prime: tuple

    def encode(self, group: Group) -> bytes:
        w = Writer().u8(TAG_SHUFFLE)
        w.elements(group, self.perm_commitment).elements(group, self.chain)
        w.scalar(self.challenge).scalar(self.s1).scalar(self.s2).scalar(self.s3).scalar(self.s4)
        w.scalars(self.s_hat).scalars(self.s_prime)
        return w.getvalue()

    @classmethod
    def read(cls, group: Group, r: Reader, limit: int | None = None) -> "ShuffleProof":
        if r.u8() != TAG_SHUFFLE:
            raise DecodeError("not a shuffle proof")
        coms = tuple(r.elements(group, limit))
        chain = tuple(r.elements(group, limit))
        c, s1, s2, s3, s4 = (r.scalar(group) for _ in range(5))
        s_hat = tuple(r.scalars(group, limit))
        s_prime = tuple(r.scalars(group, limit))
        return cls(coms, chain, c, s1, s2, s3, s4, s_hat, s_prime)

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "ShuffleProof":
        r = Reader(data)
        p = cls.read(group, r)
        r.done()
        return p


def shuffle(group: Group, y, inp: Sequence[Ciphertext], perm: Sequence[int], s: Sequence[int]) -> list[Ciphertext]:
    return [reencrypt(group, y, inp[perm[i]], s[i]) for i in range(len(inp))]


def random_permutation(n: int, rng) -> list[int]:
    """Fisher-Yates driven by ``rng.randbytes`` so any entropy source works."""
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int.from_bytes(rng.randbytes(8), "big") % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _statement_digest(group: Group, y, inp, out, coms, context: bytes) -> bytes:
    enc = group.encode
    h = hashlib.sha256(DOMAIN + b"-STATEMENT")
    for part in (context, enc(y), b"".join(c.encode(group) for c in inp), b"".join(c.encode(group) for c in out),
                 b"".join(enc(c) for c in coms)):
        h.update(len(part).to_bytes(8, "big"))
        h.update(part)
    return h.digest()


def _exponents(group: Group, digest: bytes, n: int) -> list[int]:
    return [group.hash_to_scalar(DOMAIN + b"-U", [digest, i.to_bytes(4, "big")]) for i in range(n)]


def _challenge(group: Group, digest: bytes, chain, t) -> int:
    enc = group.encode
    t1, t2, t3, t4a, t4b, t_hat = t
    parts = [digest, b"".join(enc(c) for c in chain),
             enc(t1), enc(t2), enc(t3), enc(t4a), enc(t4b), b"".join(enc(x) for x in t_hat)]
    return group.hash_to_scalar(DOMAIN, parts)


def _key(y):
    return y.key if hasattr(y, "key") else y


def prove_shuffle(group: Group, inp: Sequence[Ciphertext], out: Sequence[Ciphertext], perm: Sequence[int],
                  s: Sequence[int], y, context: bytes, rng=None) -> ShuffleProof:
    n = len(inp)
    if len(out) != n or len(perm) != n or len(s) != n:
        raise LengthMismatch(f"input {n}, output {len(out)}")
    q = group.order
    y = _key(y)
    h, hs = generators(group, n)
    rand = lambda: group.random_scalar(rng)  # noqa: E731

    # permutation commitment, indexed by input position
    r = [0] * n
    coms = [None] * n
    for i in range(n):
        j = perm[i]
        r[j] = rand()
        coms[j] = group.mul(group.base_exp(r[j]), hs[i])

    digest = _statement_digest(group, y, inp, out, coms, context)
    u = _exponents(group, digest, n)
    u_prime = [u[perm[i]] for i in range(n)]

    r_hat = [rand() for _ in range(n)]
    chain = []
    prev = h
    for i in range(n):
        prev = group.mul(group.base_exp(r_hat[i]), group.exp(prev, u_prime[i]))
        chain.append(prev)

    # v_i = prod_{k > i} u'_k
    v = [0] * n
    acc = 1
    for i in range(n - 1, -1, -1):
        v[i] = acc
        acc = acc * u_prime[i] % q

    R_bar = sum(r) % q
    R_hat = sum(rh * vi for rh, vi in zip(r_hat, v)) % q
    R_tilde = sum(rj * uj for rj, uj in zip(r, u)) % q
    S = sum(si * ui for si, ui in zip(s, u_prime)) % q

    w1, w2, w3, w4 = rand(), rand(), rand(), rand()
    w_hat = [rand() for _ in range(n)]
    w_prime = [rand() for _ in range(n)]

    t1 = group.base_exp(w1)
    t2 = group.base_exp(w2)
    t3 = group.mul(group.base_exp(w3), group.multi_exp(hs, w_prime))
    t4a = group.mul(group.base_exp((-w4) % q), group.multi_exp([c.a for c in out], w_prime))
    t4b = group.mul(group.exp(y, (-w4) % q), group.multi_exp([c.b for c in out], w_prime))
    t_hat = []
    prev = h
    for i in range(n):
        t_hat.append(group.mul(group.base_exp(w_hat[i]), group.exp(prev, w_prime[i])))
        prev = chain[i]

    c = _challenge(group, digest, chain, (t1, t2, t3, t4a, t4b, t_hat))
    return ShuffleProof(
        perm_commitment=tuple(coms),
        chain=tuple(chain),
        challenge=c,
        s1=(w1 - c * R_bar) % q,
        s2=(w2 - c * R_hat) % q,
        s3=(w3 - c * R_tilde) % q,
        s4=(w4 - c * S) % q,
        s_hat=tuple((w_hat[i] - c * r_hat[i]) % q for i in range(n)),
        s_prime=tuple((w_prime[i] - c * u_prime[i]) % q for i in range(n)),
    )


def verify_shuffle(group: Group, inp: Sequence[Ciphertext], out: Sequence[Ciphertext], proof: ShuffleProof,
                   y, context: bytes) -> bool:
    n = len(inp)
    if len(out) != n:
        raise LengthMismatch(f"input {n}, output {len(out)}")
    if not (len(proof.perm_commitment) == len(proof.chain) == len(proof.s_hat) == len(proof.s_prime) == n):
        return False
    q = group.order
    y = _key(y)
    h, hs = generators(group, n)
    coms, chain, c = proof.perm_commitment, proof.chain, proof.challenge

    digest = _statement_digest(group, y, inp, out, coms, context)
    u = _exponents(group, digest, n)
    u_prod = 1
    for x in u:
        u_prod = u_prod * x % q

    c_bar = group.div(group.prod(coms), group.prod(hs))
    c_hat = group.div(chain[-1], group.exp(h, u_prod)) if n else group.identity
    c_tilde = group.multi_exp(coms, u)
    a_tilde = group.multi_exp([e.a for e in inp], u)
    b_tilde = group.multi_exp([e.b for e in inp], u)

    neg_s4 = (-proof.s4) % q
    t1 = group.mul(group.exp(c_bar, c), group.base_exp(proof.s1))
    t2 = group.mul(group.exp(c_hat, c), group.base_exp(proof.s2))
    t3 = group.mul(group.mul(group.exp(c_tilde, c), group.base_exp(proof.s3)), group.multi_exp(hs, proof.s_prime))
    t4a = group.mul(group.mul(group.exp(a_tilde, c), group.base_exp(neg_s4)),
                    group.multi_exp([e.a for e in out], proof.s_prime))
    t4b = group.mul(group.mul(group.exp(b_tilde, c), group.exp(y, neg_s4)),
                    group.multi_exp([e.b for e in out], proof.s_prime))
    t_hat = []
    prev = h
    for i in range(n):
        t_hat.append(group.mul(group.mul(group.exp(chain[i], c), group.base_exp(proof.s_hat[i])),
                               group.exp(prev, proof.s_prime[i])))
        prev = chain[i]

    return c == _challenge(group, digest, chain, (t1, t2, t3, t4a, t4b, t_hat))
