"""Helpers shared by the CP and DP state machines."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..broadcast.signatures import SigningKey, sign, verify_sig
from ..group import Group
from ..transport.frames import Frame, FrameError, MsgType, decode_frame


class Halt(Exception):
    """Terminates a party's run with a final outcome."""

    def __init__(self, outcome) -> None:
        super().__init__(outcome)
        self.outcome = outcome


def make_direct(group: Group, key: SigningKey, session: bytes, phase: int, sender: str, payload: bytes,
                round: int = 0) -> Frame:
    sig = sign(group, key, session, phase, round, sender, payload)
    return Frame(MsgType.DIRECT, session, phase, round, sender, payload, ((sender, sig),))


def check_direct(group: Group, roster, frame: Frame, session: bytes, phase: int, sender: str,
                 round: int = 0) -> bool:
    """A DIRECT frame from ``sender`` for this slot, signed by ``sender``."""
    if frame.kind != MsgType.DIRECT or frame.session != session or frame.phase != phase:
        return False
    if frame.round != round or frame.sender != sender or sender not in roster:
        return False
    if len(frame.signatures) != 1 or frame.signatures[0][0] != sender:
        return False
    return verify_sig(group, roster, sender, frame.signatures[0][1], session, phase, round, sender, frame.payload)


def parse_direct(raw: bytes) -> Frame | None:
    try:
        return decode_frame(raw)
    except FrameError:
        return None


@dataclass
class VerifyCache:
    """Memo of proof verification results keyed by a digest of everything
    the verifier looks at.  Shared between simulated CPs it avoids repeating
    identical work; the verdict for a given key never depends on who asks."""
    results: dict = field(default_factory=dict)
    decoded: dict = field(default_factory=dict)
    hits: int = 0

    def lookup(self, key: bytes):
        v = self.results.get(key)
        if v is not None:
            self.hits += 1
        return v

    def store(self, key: bytes, ok: bool) -> bool:
        self.results[key] = ok
        return ok

    def decode(self, cls, group: Group, payload: bytes, *args):
        """``cls.decode(group, payload, *args)``, memoised.  Decoding is a pure
        function of the bytes, so a shared memo returns what each party would
        have computed itself; decode errors are not cached."""
        key = (cls.__name__, group.name, args, hashlib.sha256(payload).digest())
        msg = self.decoded.get(key)
        if msg is None:
            msg = self.decoded[key] = cls.decode(group, payload, *args)
        return msg
