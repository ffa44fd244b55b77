"""Minimal length-prefixed binary encoding used for payloads and proofs."""

from __future__ import annotations

import struct

from .group import ELEMENT_BYTES, SCALAR_BYTES, DecodeError, Group, encode_scalar


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">B", v))
        return self

    def u32(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">I", v))
        return self

    def i64(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">q", v))
        return self

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(b)
        return self

    def blob(self, b: bytes) -> "Writer":
        self._parts.append(struct.pack(">I", len(b)))
        self._parts.append(b)
        return self

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def scalar(self, s: int) -> "Writer":
        self._parts.append(encode_scalar(s))
        return self

    def scalars(self, ss) -> "Writer":
        ss = list(ss)
        self.u32(len(ss))
        self._parts.extend(encode_scalar(s) for s in ss)
        return self

    def element(self, group: Group, e) -> "Writer":
        self._parts.append(group.encode(e))
        return self

    def elements(self, group: Group, es) -> "Writer":
        es = list(es)
        self.u32(len(es))
        enc = group.encode
        self._parts.extend(enc(e) for e in es)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = bytes(data)
        self._pos = 0

    def _take(self, n: int) -> bytes:
        pos = self._pos
        end = pos + n
        if n < 0 or end > len(self._data):
            raise DecodeError("truncated input")
        self._pos = end
        return self._data[pos:end]

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def i64(self) -> int:
        return struct.unpack(">q", self._take(8))[0]

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("invalid utf-8") from exc

    def scalar(self, group: Group) -> int:
        return group.decode_scalar(self._take(SCALAR_BYTES))

    def scalars(self, group: Group, limit: int | None = None) -> list[int]:
        n = self._count(SCALAR_BYTES, limit)
        return [self.scalar(group) for _ in range(n)]

    def element(self, group: Group):
        return group.decode(self._take(ELEMENT_BYTES))

    def elements(self, group: Group, limit: int | None = None) -> list:
        n = self._count(ELEMENT_BYTES, limit)
        dec = group.decode
        return [dec(self._take(ELEMENT_BYTES)) for _ in range(n)]

    def _count(self, width: int, limit: int | None) -> int:
        n = self.u32()
        if limit is not None and n > limit:
            raise DecodeError(f"vector length {n} exceeds limit {limit}")
        if n * width > len(self._data) - self._pos:
            raise DecodeError("truncated vector")
        return n

    def done(self) -> None:
        if self._pos != len(self._data):
            raise DecodeError(f"{len(self._data) - self._pos} trailing bytes")

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos
