"""Wire frames.

Layout (all integers big-endian)::

    u32  length of everything after this field
    u8   message type
    16B  session id
    u8   phase
    u32  round
    u8   sender id length, then sender id (UTF-8)
    u32  payload length, then payload
    u8   signature count, then per signature:
         u8 signer id length, signer id, 64-byte signature
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum

from ..broadcast.signatures import SIG_BYTES

MAX_FRAME = 64 * 1024 * 1024
SESSION_BYTES = 16


class FrameTooLarge(ValueError):
    pass


class FrameError(ValueError):
    pass


class MsgType(IntEnum):
    DS_SEND = 1  # broadcaster's message with inline payload
    DS_DIGEST = 2  # relayed chain carrying only the payload digest
    NACK = 3  # "digest not seen, send the payload"
    FILL = 4  # payload answering a NACK
    END = 5  # heartbeat: sender has nothing more for this step
    DIRECT = 6  # signed point-to-point message
    HANDSHAKE = 7


@dataclass(frozen=True)
class Frame:
    kind: MsgType
    session: bytes
    phase: int
    round: int
    sender: str
    payload: bytes = b""
    signatures: tuple = field(default=())  # ((signer, sig), ...)

    def encode(self) -> bytes:
        return encode_frame(self)


def _id(s: str) -> bytes:
    b = s.encode("utf-8")
    if len(b) > 255:
        raise FrameError("party id too long")
    return struct.pack(">B", len(b)) + b


def encode_frame(f: Frame) -> bytes:
    if len(f.session) != SESSION_BYTES:
        raise FrameError("session id must be 16 bytes")
    if len(f.signatures) > 255:
        raise FrameError("too many signatures")
    body = bytearray()
    body += struct.pack(">B", int(f.kind))
    body += f.session
    body += struct.pack(">BI", f.phase, f.round)
    body += _id(f.sender)
    body += struct.pack(">I", len(f.payload)) + f.payload
    body += struct.pack(">B", len(f.signatures))
    for signer, sig in f.signatures:
        if len(sig) != SIG_BYTES:
            raise FrameError("bad signature length")
        body += _id(signer) + sig
    if len(body) > MAX_FRAME:
        raise FrameTooLarge(f"frame of {len(body)} bytes exceeds {MAX_FRAME}")
    return struct.pack(">I", len(body)) + bytes(body)


def check_length(prefix: bytes) -> int:
    """Validate a 4-byte length prefix before anything is allocated."""
    (n,) = struct.unpack(">I", prefix)
    if n > MAX_FRAME:
        raise FrameTooLarge(f"announced frame of {n} bytes exceeds {MAX_FRAME}")
    return n


def decode_body(body: bytes) -> Frame:
    mv = memoryview(body)
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(mv):
            raise FrameError("truncated frame")
        out = mv[pos:pos + n].tobytes()
        pos += n
        return out

    def ident() -> str:
        try:
            return take(take(1)[0]).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FrameError("bad id encoding") from exc

    try:
        kind = MsgType(take(1)[0])
    except ValueError as exc:
        raise FrameError("unknown message type") from exc
    session = take(SESSION_BYTES)
    phase, rnd = struct.unpack(">BI", take(5))
    sender = ident()
    (plen,) = struct.unpack(">I", take(4))
    payload = take(plen)
    sigs = []
    for _ in range(take(1)[0]):
        signer = ident()
        sigs.append((signer, take(SIG_BYTES)))
    if pos != len(mv):
        raise FrameError("trailing bytes in frame")
    return Frame(kind, session, phase, rnd, sender, payload, tuple(sigs))


def decode_frame(data: bytes) -> Frame:
    if len(data) < 4:
        raise FrameError("truncated frame")
    n = check_length(data[:4])
    if len(data) - 4 != n:
        raise FrameError("length prefix does not match frame size")
    return decode_body(data[4:])
