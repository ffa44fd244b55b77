"""Payload codecs.

Every proof-bearing payload starts with a :class:`Header` stating exactly
which statement the proof is about.  Receivers compare it against the
statement they expect before looking at the proof, which is what separates a
wrong-statement fault from an invalid proof.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..codec import Reader, Writer
from ..elgamal import encode_vector, read_vector
from ..group import DecodeError, Group
from ..zkp.dl import DlProof
from ..zkp.pair_shuffle import PairShuffleProof
from ..zkp.rrd import RrdBatchProof
from ..zkp.shuffle import ShuffleProof


@dataclass(frozen=True)
class Header:
    session: bytes
    phase: int
    step: int
    prover: str
    input_digest: bytes = b""
    key: bytes = b""  # encoded key share for partial-decryption steps

    def write(self, w: Writer) -> Writer:
        return (w.raw(self.session).u8(self.phase).u32(self.step).text(self.prover)
                .blob(self.input_digest).blob(self.key))

    @classmethod
    def read(cls, r: Reader) -> "Header":
        return cls(r.raw(16), r.u8(), r.u32(), r.text(), r.blob(), r.blob())


def vector_digest(group: Group, cs) -> bytes:
    return hashlib.sha256(encode_vector(group, cs)).digest()


def pairs_digest(group: Group, pairs) -> bytes:
    return hashlib.sha256(encode_vector(group, [c for p in pairs for c in p])).digest()


# -- KeyGen ----------------------------------------------------------------------

@dataclass(frozen=True)
class KeyShareMsg:
    header: Header
    share: object
    proof: DlProof | None

    def encode(self, group: Group) -> bytes:
        w = self.header.write(Writer()).element(group, self.share)
        w.blob(self.proof.encode(group) if self.proof else b"")
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "KeyShareMsg":
        r = Reader(data)
        h = Header.read(r)
        share = r.element(group)
        raw = r.blob()
        r.done()
        return cls(h, share, DlProof.decode(group, raw) if raw else None)


@dataclass(frozen=True)
class KeySignatureMsg:
    header: Header
    key: object
    signature: bytes

    def encode(self, group: Group) -> bytes:
        return self.header.write(Writer()).element(group, self.key).blob(self.signature).getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "KeySignatureMsg":
        r = Reader(data)
        m = cls(Header.read(r), r.element(group), r.blob())
        r.done()
        return m


@dataclass(frozen=True)
class SignedKeyMsg:
    """Joint key as delivered to a DP: shares plus one signature per CP."""
    key: object
    shares: tuple
    signatures: tuple  # ((cp id, sig), ...)

    def encode(self, group: Group) -> bytes:
        w = Writer().element(group, self.key).elements(group, self.shares).u32(len(self.signatures))
        for cp, sig in self.signatures:
            w.text(cp).blob(sig)
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int = 4096) -> "SignedKeyMsg":
        r = Reader(data)
        key = r.element(group)
        shares = tuple(r.elements(group, limit))
        n = r.u32()
        if n > limit:
            raise DecodeError("too many signatures")
        sigs = tuple((r.text(), r.blob()) for _ in range(n))
        r.done()
        return cls(key, shares, sigs)


# -- Data parties ------------------------------------------------------------------

@dataclass(frozen=True)
class BlindsMsg:
    header: Header
    blinds: tuple  # Ciphertext per bin
    proofs: tuple  # DlProof per bin, on the first component

    def encode(self, group: Group) -> bytes:
        w = self.header.write(Writer())
        w.raw(encode_vector(group, self.blinds)).u32(len(self.proofs))
        for p in self.proofs:
            w.raw(p.encode(group))
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int) -> "BlindsMsg":
        r = Reader(data)
        h = Header.read(r)
        blinds = tuple(read_vector(group, r, limit))
        n = r.u32()
        if n > limit:
            raise DecodeError("too many proofs")
        proofs = tuple(DlProof.read(group, r) for _ in range(n))
        r.done()
        return cls(h, blinds, proofs)


@dataclass(frozen=True)
class CountersMsg:
    """Union mode: plaintext counters."""
    header: Header
    counters: tuple

    def encode(self, group: Group) -> bytes:
        return self.header.write(Writer()).scalars(self.counters).getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int) -> "CountersMsg":
        r = Reader(data)
        m = cls(Header.read(r), tuple(r.scalars(group, limit)))
        r.done()
        return m


# Intersection-mode submissions share the blinds layout: a ciphertext and a
# DL proof of its randomness per bin.
SubmissionsMsg = BlindsMsg


@dataclass(frozen=True)
class ViewDigestMsg:
    header: Header
    digest: bytes

    def encode(self, group: Group) -> bytes:
        return self.header.write(Writer()).blob(self.digest).getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes) -> "ViewDigestMsg":
        r = Reader(data)
        m = cls(Header.read(r), r.blob())
        r.done()
        return m


@dataclass(frozen=True)
class ViewMsg:
    """Fallback: every DP-signed submission frame a CP received."""
    header: Header
    frames: tuple  # ((dp id, encoded frame), ...)

    def encode(self, group: Group) -> bytes:
        w = self.header.write(Writer()).u32(len(self.frames))
        for dp, raw in self.frames:
            w.text(dp).blob(raw)
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int) -> "ViewMsg":
        r = Reader(data)
        h = Header.read(r)
        n = r.u32()
        if n > limit:
            raise DecodeError("too many frames")
        frames = tuple((r.text(), r.blob()) for _ in range(n))
        r.done()
        return cls(h, frames)


# -- CP vector phases ------------------------------------------------------------

@dataclass(frozen=True)
class NoiseMsg:
    header: Header
    pairs: tuple  # ((Ciphertext, Ciphertext), ...)
    proofs: tuple  # PairShuffleProof per slot

    def encode(self, group: Group) -> bytes:
        w = self.header.write(Writer())
        w.raw(encode_vector(group, [c for p in self.pairs for c in p])).u32(len(self.proofs))
        for p in self.proofs:
            w.raw(p.encode(group))
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int) -> "NoiseMsg":
        r = Reader(data)
        h = Header.read(r)
        flat = read_vector(group, r, 2 * limit)
        if len(flat) % 2:
            raise DecodeError("odd number of noise ciphertexts")
        n = r.u32()
        if n > limit:
            raise DecodeError("too many proofs")
        proofs = tuple(PairShuffleProof.read(group, r) for _ in range(n))
        r.done()
        pairs = tuple((flat[i], flat[i + 1]) for i in range(0, len(flat), 2))
        return cls(h, pairs, proofs)


@dataclass(frozen=True)
class ShuffleMsg:
    header: Header
    output: tuple
    proof: ShuffleProof | None

    def encode(self, group: Group) -> bytes:
        w = self.header.write(Writer()).raw(encode_vector(group, self.output))
        w.blob(self.proof.encode(group) if self.proof else b"")
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int) -> "ShuffleMsg":
        r = Reader(data)
        h = Header.read(r)
        out = tuple(read_vector(group, r, limit))
        raw = r.blob()
        r.done()
        proof = None
        if raw:
            pr = Reader(raw)
            proof = ShuffleProof.read(group, pr, limit)
            pr.done()
        return cls(h, out, proof)


@dataclass(frozen=True)
class RrdMsg:
    header: Header
    output: tuple
    proof: RrdBatchProof | None

    def encode(self, group: Group) -> bytes:
        w = self.header.write(Writer()).raw(encode_vector(group, self.output))
        w.blob(self.proof.encode(group) if self.proof else b"")
        return w.getvalue()

    @classmethod
    def decode(cls, group: Group, data: bytes, limit: int) -> "RrdMsg":
        r = Reader(data)
        h = Header.read(r)
        out = tuple(read_vector(group, r, limit))
        raw = r.blob()
        r.done()
        proof = None
        if raw:
            pr = Reader(raw)
            proof = RrdBatchProof.read(group, pr, limit)
            pr.done()
        return cls(h, out, proof)
