"""Prime-order group abstraction.

Scalars are plain Python ints in ``[0, q)``.  Elements are opaque values
owned by a :class:`Group` implementation; all arithmetic on them goes through
the group object, which keeps the protocol code generic over the backend.

Two backends are provided:

* :class:`Ristretto255` -- the default.  The prime-order quotient of the
  Edwards 25519 curve, via libsodium.  Elements are their canonical 32-byte
  encodings, so equality and hashing of elements is byte equality.
* :class:`InsecureAdditiveGroup` -- ``(Z_q, +)`` with generator 1.  Discrete
  logs are trivial, so it offers no security at all.  It exists so that
  statistical tests can drive the full protocol code at sizes where
  elliptic-curve arithmetic in Python would take hours.
"""

from __future__ import annotations

import ctypes
import hashlib
import secrets
import struct
from typing import Iterable, Protocol, Sequence

# Order of the ristretto255 group (also the order of the ed25519 base point).
L = 2**252 + 27742317777372353535851937790883648493

SCALAR_BYTES = 32
ELEMENT_BYTES = 32


class DecodeError(ValueError):
    """Raised when a byte string is not a canonical scalar or element."""


class EntropySource(Protocol):
    def randbytes(self, n: int) -> bytes: ...


_system_rng = secrets.SystemRandom()


def default_rng() -> EntropySource:
    return _system_rng


# -- scalars -----------------------------------------------------------------

def scalar_random(rng: EntropySource | None = None, q: int = L) -> int:
    """Uniform scalar in ``[0, q)`` (wide reduction of 64 random bytes)."""
    rng = rng or _system_rng
    return int.from_bytes(rng.randbytes(64), "little") % q


def scalar_random_nonzero(rng: EntropySource | None = None, q: int = L) -> int:
    while True:
        s = scalar_random(rng, q)
        if s:
            return s


def encode_scalar(s: int) -> bytes:
    return s.to_bytes(SCALAR_BYTES, "little")


def decode_scalar(data: bytes, q: int = L) -> int:
    if len(data) != SCALAR_BYTES:
        raise DecodeError(f"scalar must be {SCALAR_BYTES} bytes, got {len(data)}")
    s = int.from_bytes(data, "little")
    if s >= q:
        raise DecodeError("non-canonical scalar")
    return s


def _length_prefixed(parts: Iterable[bytes]) -> bytes:
    out = bytearray()
    for p in parts:
        out += struct.pack(">I", len(p))
        out += p
    return bytes(out)


def hash_to_scalar(domain_tag: bytes, parts: Sequence[bytes], q: int = L) -> int:
    """Random-oracle hash onto ``Z_q``.

    SHA-512 over the length-prefixed tag and parts; reducing 512 bits keeps
    the result statistically uniform.
    """
    if not domain_tag:
        raise ValueError("domain_tag must be non-empty")
    body = _length_prefixed([domain_tag, *parts])
    return int.from_bytes(hashlib.sha512(body).digest(), "little") % q


# -- groups ------------------------------------------------------------------

class Group:
    """Interface shared by the group backends."""

    name: str
    order: int
    identity: object
    generator: object

    def exp(self, base, e: int): ...
    def base_exp(self, e: int): ...
    def mul(self, a, b): ...
    def div(self, a, b): ...
    def inv(self, a): ...
    def encode(self, a) -> bytes: ...
    def decode(self, data: bytes): ...
    def hash_to_element(self, tag: bytes, data: bytes): ...

    def is_identity(self, a) -> bool:
        return a == self.identity

    def prod(self, elements: Iterable):
        acc = self.identity
        for e in elements:
            acc = self.mul(acc, e)
        return acc

    def multi_exp(self, bases: Sequence, exps: Sequence[int]):
        acc = self.identity
        for b, e in zip(bases, exps):
            acc = self.mul(acc, self.exp(b, e))
        return acc

    def random_scalar(self, rng: EntropySource | None = None) -> int:
        return scalar_random(rng, self.order)

    def random_nonzero_scalar(self, rng: EntropySource | None = None) -> int:
        return scalar_random_nonzero(rng, self.order)

    def hash_to_scalar(self, domain_tag: bytes, parts: Sequence[bytes]) -> int:
        return hash_to_scalar(domain_tag, parts, self.order)

    def decode_scalar(self, data: bytes) -> int:
        return decode_scalar(data, self.order)

    def __repr__(self) -> str:
        return f"<{type(self).__name__}>"


def _load_sodium():
    # pysodium locates and loads the system libsodium; reuse its handle so the
    # hot path can call the C functions without per-call wrapper overhead.
    import pysodium

    lib = pysodium.sodium
    for fn in (
        "crypto_scalarmult_ristretto255",
        "crypto_scalarmult_ristretto255_base",
        "crypto_core_ristretto255_add",
        "crypto_core_ristretto255_sub",
        "crypto_core_ristretto255_is_valid_point",
        "crypto_core_ristretto255_from_hash",
    ):
        getattr(lib, fn).restype = ctypes.c_int
    return lib


class Ristretto255(Group):
    """ristretto255 over libsodium; elements are canonical 32-byte strings."""

    name = "ristretto255"
    order = L
    identity = bytes(32)
    # Canonical encoding of the standard ristretto255 base point.
    generator = bytes.fromhex("e2f2ae0a6abc4e71a884a961c500515f58e30b6aa582dd8db6a65945e08d2d76")

    def __init__(self) -> None:
        self._lib = _load_sodium()
        self._buf = ctypes.create_string_buffer

    def exp(self, base: bytes, e: int) -> bytes:
        e %= L
        if e == 0 or base == self.identity:
            return self.identity
        if base == self.generator:
            return self.base_exp(e)
        out = self._buf(32)
        if self._lib.crypto_scalarmult_ristretto255(out, e.to_bytes(32, "little"), base) != 0:
            return self.identity
        return out.raw

    def base_exp(self, e: int) -> bytes:
        e %= L
        if e == 0:
            return self.identity
        out = self._buf(32)
        if self._lib.crypto_scalarmult_ristretto255_base(out, e.to_bytes(32, "little")) != 0:
            return self.identity
        return out.raw

    def mul(self, a: bytes, b: bytes) -> bytes:
        if a == self.identity:
            return b
        if b == self.identity:
            return a
        out = self._buf(32)
        self._lib.crypto_core_ristretto255_add(out, a, b)
        return out.raw

    def div(self, a: bytes, b: bytes) -> bytes:
        if b == self.identity:
            return a
        out = self._buf(32)
        self._lib.crypto_core_ristretto255_sub(out, a, b)
        return out.raw

    def inv(self, a: bytes) -> bytes:
        return self.div(self.identity, a)

    def encode(self, a: bytes) -> bytes:
        return a

    def decode(self, data: bytes) -> bytes:
        data = bytes(data)
        if len(data) != ELEMENT_BYTES:
            raise DecodeError(f"element must be {ELEMENT_BYTES} bytes, got {len(data)}")
        if data != self.identity and self._lib.crypto_core_ristretto255_is_valid_point(data) != 1:
            raise DecodeError("not a canonical ristretto255 encoding")
        return data

    def hash_to_element(self, tag: bytes, data: bytes) -> bytes:
        h = hashlib.sha512(_length_prefixed([tag, data])).digest()
        out = self._buf(32)
        self._lib.crypto_core_ristretto255_from_hash(out, h)
        return out.raw


class InsecureAdditiveGroup(Group):
    """``(Z_q, +)`` with generator 1 and q the ristretto255 order.

    Every discrete log is the element itself.  Only for statistical tests of
    protocol plumbing; never for real measurements.
    """

    name = "insecure-additive"
    order = L
    identity = 0
    generator = 1

    def exp(self, base: int, e: int) -> int:
        return base * e % L

    def base_exp(self, e: int) -> int:
        return e % L

    def mul(self, a: int, b: int) -> int:
        return (a + b) % L

    def div(self, a: int, b: int) -> int:
        return (a - b) % L

    def inv(self, a: int) -> int:
        return -a % L

    def encode(self, a: int) -> bytes:
        return a.to_bytes(32, "little")

    def decode(self, data: bytes) -> int:
        if len(data) != ELEMENT_BYTES:
            raise DecodeError(f"element must be {ELEMENT_BYTES} bytes, got {len(data)}")
        a = int.from_bytes(data, "little")
        if a >= L:
            raise DecodeError("non-canonical element")
        return a

    def prod(self, elements: Iterable[int]) -> int:
        return sum(elements) % L

    def multi_exp(self, bases: Sequence[int], exps: Sequence[int]) -> int:
        return sum(b * e for b, e in zip(bases, exps)) % L

    def hash_to_element(self, tag: bytes, data: bytes) -> int:
        return hash_to_scalar(tag, [data]) or 1


_GROUPS: dict[str, type[Group]] = {
    Ristretto255.name: Ristretto255,
    InsecureAdditiveGroup.name: InsecureAdditiveGroup,
}
_instances: dict[str, Group] = {}


def get_group(name: str = "ristretto255") -> Group:
    try:
        cls = _GROUPS[name]
    except KeyError:
        raise ValueError(f"unknown group {name!r}; choose from {sorted(_GROUPS)}") from None
    if name not in _instances:
        _instances[name] = cls()
    return _instances[name]
