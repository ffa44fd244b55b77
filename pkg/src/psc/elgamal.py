"""Exponential ElGamal over the joint CP session key.

A ciphertext ``(a, b) = (g^r, y^r g^m)`` is never fully decrypted to ``m``;
the protocol only needs to know whether the plaintext is zero, which after
all partial decryptions is the question of whether ``b`` is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .codec import Reader, Writer
from .group import Group


class ZeroFactor(ValueError):
    """A rerandomization factor of zero would destroy the plaintext."""


class RetryNeeded(ArithmeticError):
    """The first component collapsed to the identity; resample and retry."""


RRD_RETRY_CAP = 64


@dataclass(frozen=True)
class Ciphertext:
    a: object
    b: object

    def encode(self, group: Group) -> bytes:
        return group.encode(self.a) + group.encode(self.b)

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "Ciphertext":
        r = Reader(data)
        c = cls(r.element(group), r.element(group))
        r.done()
        return c


@dataclass(frozen=True)
class KeyShare:
    owner: str
    secret: int
    public: object

    @classmethod
    def generate(cls, group: Group, owner: str, rng=None) -> "KeyShare":
        x = group.random_nonzero_scalar(rng)
        return cls(owner, x, group.base_exp(x))


@dataclass(frozen=True)
class JointPublicKey:
    key: object
    shares: tuple

    @classmethod
    def combine(cls, group: Group, shares: Sequence) -> "JointPublicKey":
        return cls(group.prod(shares), tuple(shares))

    def residual(self, group: Group, j: int):
        """Key still protecting a ciphertext before the j-th (0-based) partial decryption."""
        return group.prod(self.shares[j:])


def _key(y):
    return y.key if isinstance(y, JointPublicKey) else y


def encrypt(group: Group, y, m: int, r: int) -> Ciphertext:
    y = _key(y)
    return Ciphertext(group.base_exp(r), group.mul(group.exp(y, r), group.base_exp(m)))


def deterministic_encrypt(group: Group, y, m: int) -> Ciphertext:
    """Encryption with randomness fixed to 1: ``(g, y g^m)``.

    Not hiding.  Used only for values that are already public (submitted
    counters, the noise seed pair).
    """
    y = _key(y)
    return Ciphertext(group.generator, group.mul(y, group.base_exp(m)))


def add(group: Group, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    return Ciphertext(group.mul(c1.a, c2.a), group.mul(c1.b, c2.b))


def add_all(group: Group, cs: Sequence[Ciphertext]) -> Ciphertext:
    return Ciphertext(group.prod(c.a for c in cs), group.prod(c.b for c in cs))


def reencrypt(group: Group, y, c: Ciphertext, s: int) -> Ciphertext:
    y = _key(y)
    return Ciphertext(group.mul(c.a, group.base_exp(s)), group.mul(c.b, group.exp(y, s)))


def rerandomize(group: Group, c: Ciphertext, s: int) -> Ciphertext:
    if s % group.order == 0:
        raise ZeroFactor("rerandomization factor must be non-zero")
    return Ciphertext(group.exp(c.a, s), group.exp(c.b, s))


def partial_decrypt(group: Group, c: Ciphertext, x: int) -> Ciphertext:
    return Ciphertext(c.a, group.div(c.b, group.exp(c.a, x)))


def rrd_step(group: Group, c: Ciphertext, y, share: KeyShare | int, sigma: int, r: int) -> Ciphertext:
    """Re-encrypt by ``sigma``, rerandomize by ``r`` and strip one key share.

    ``y`` is the key currently protecting ``c`` (the product of the shares of
    this CP and all CPs after it).  Raises :class:`RetryNeeded` when the new
    first component is the identity.
    """
    if r % group.order == 0:
        raise ZeroFactor("rerandomization factor must be non-zero")
    y = _key(y)
    x = share.secret if isinstance(share, KeyShare) else share
    alpha = group.exp(group.mul(c.a, group.base_exp(sigma)), r)
    if group.is_identity(alpha):
        raise RetryNeeded("alpha is the identity")
    beta = group.div(group.exp(group.mul(c.b, group.exp(y, sigma)), r), group.exp(alpha, x))
    return Ciphertext(alpha, beta)


def is_zero_plaintext(group: Group, final: Ciphertext) -> bool:
    """After every key share has been stripped, zero plaintexts leave ``b = 1``."""
    return group.is_identity(final.b)


def decrypt_to_element(group: Group, c: Ciphertext, x: int):
    """``g^m`` for a ciphertext under the key ``g^x``.  Test and oracle helper."""
    return group.div(c.b, group.exp(c.a, x))


def encode_vector(group: Group, cs: Sequence[Ciphertext]) -> bytes:
    w = Writer().u32(len(cs))
    enc = group.encode
    w.raw(b"".join(enc(c.a) + enc(c.b) for c in cs))
    return w.getvalue()


def read_vector(group: Group, r: Reader, limit: int | None = None) -> list[Ciphertext]:
    n = r.u32()
    if limit is not None and n > limit:
        from .group import DecodeError

        raise DecodeError(f"ciphertext vector of {n} exceeds limit {limit}")
    out = []
    for _ in range(n):
        out.append(Ciphertext(r.element(group), r.element(group)))
    return out
