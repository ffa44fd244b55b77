"""Deterministic in-process network.

Runs party generators in lockstep over per-link steps.  Frames posted for a
link step are delivered when the receiver completes the same step.  A party
that has finished, or that would deadlock the run, is treated as silent, the
same way the socket transport treats a peer that misses a deadline.

Fault rules rewrite a party's outgoing frames before delivery.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping

from .base import Exchange
from .frames import Frame

DROP = "drop"
DUPLICATE = "duplicate"
REPLACE = "replace"


class RoundClosed(RuntimeError):
    """A frame was posted for a step the receiver has already completed."""


@dataclass(frozen=True)
class Fault:
    party: str
    action: str  # DROP, DUPLICATE or REPLACE
    phase: int | None = None  # only frames of this phase
    step: int | None = None  # only the party's n-th exchange (0-based)
    targets: tuple | None = None  # receivers affected; None means all
    payload: bytes = b""  # replacement payload

    def matches(self, party: str, step: int, to: str, frame: Frame) -> bool:
        return (self.party == party
                and (self.phase is None or frame.phase == self.phase)
                and (self.step is None or self.step == step)
                and (self.targets is None or to in self.targets))


def apply_faults(faults: Iterable[Fault], party: str, step: int, to: str, frames: list) -> list:
    out = []
    for f in frames:
        copies = [f]
        for rule in faults:
            if not rule.matches(party, step, to, f):
                continue
            if rule.action == DROP:
                copies = []
            elif rule.action == DUPLICATE:
                copies = copies + copies
            elif rule.action == REPLACE:
                copies = [replace(c, payload=rule.payload) for c in copies]
            else:
                raise ValueError(f"unknown fault action {rule.action!r}")
        out.extend(copies)
    return out


class SimNet:
    def __init__(self, faults: Iterable[Fault] = (), seed: int = 0) -> None:
        self.faults = tuple(faults)
        self._rng = random.Random(seed)
        self._mail: dict[tuple, list] = {}  # (frm, to, step) -> frames
        self._posted: set = set()  # (frm, to, step)
        self._closed: set = set()  # (to, frm, step) already collected
        self._transcript = hashlib.sha256()
        self.frames_delivered = 0
        self.bytes_delivered = 0

    # -- mailbox API -----------------------------------------------------------

    def send(self, frm: str, to: str, round: int, frames: list) -> None:
        if (to, frm, round) in self._closed:
            raise RoundClosed(f"{to} already closed step {round} with {frm}")
        self._posted.add((frm, to, round))
        self._mail.setdefault((frm, to, round), []).extend(frames)

    def collect(self, party: str, round: int, peers: Iterable[str]) -> dict:
        """Close ``round`` on each link and return delivered frames by peer."""
        out = {}
        for p in peers:
            if (party, p, round) in self._closed:
                raise RoundClosed(f"{party} already closed step {round} with {p}")
            self._closed.add((party, p, round))
            frames = self._mail.pop((p, party, round), [])
            for f in frames:
                data = f.encode()
                self._transcript.update(f"{p}>{party}@{round}:".encode() + data)
                self.bytes_delivered += len(data)
            self.frames_delivered += len(frames)
            out[p] = frames
        return out

    def transcript_digest(self) -> str:
        return self._transcript.copy().hexdigest()

    # -- driver ----------------------------------------------------------------

    def run(self, parties: Mapping[str, object], on_step: Callable | None = None) -> dict:
        """Drive party generators to completion; returns their return values."""
        gens = dict(parties)
        pending: dict[str, Exchange] = {}
        results: dict[str, object] = {}
        link_step: dict[tuple, int] = {}
        n_steps: dict[str, int] = {p: 0 for p in gens}

        def advance(pid: str, value) -> None:
            try:
                ex = gens[pid].send(value)
            except StopIteration as stop:
                results[pid] = stop.value
                pending.pop(pid, None)
                return
            if not isinstance(ex, Exchange):
                raise TypeError(f"{pid} yielded {type(ex).__name__}, expected Exchange")
            pending[pid] = ex
            for p in ex.peers:
                k = link_step.get((pid, p), 0)
                frames = apply_faults(self.faults, pid, n_steps[pid], p, ex.outgoing.get(p, []))
                if (p, pid, k) in self._closed:
                    continue  # receiver gave up on this step: late frames are lost
                self.send(pid, p, k, frames)

        for pid in sorted(gens):
            advance(pid, None)

        while pending:
            progressed = False
            for pid in sorted(pending):
                ex = pending.get(pid)
                if ex is None or not self._ready(pid, ex, link_step, results):
                    continue
                self._complete(pid, ex, link_step, n_steps, advance, on_step)
                progressed = True
            if not progressed:
                # Nobody can move: the lowest blocked party times out on its
                # silent peers, exactly as a socket deadline would.
                pid = min(pending)
                self._complete(pid, pending[pid], link_step, n_steps, advance, on_step)
        return results

    def _ready(self, pid, ex, link_step, results) -> bool:
        for p in ex.peers:
            if p in results:
                continue
            if (p, pid, link_step.get((pid, p), 0)) not in self._posted:
                return False
        return True

    def _complete(self, pid, ex, link_step, n_steps, advance, on_step) -> None:
        incoming = {}
        order = sorted(ex.peers)
        self._rng.shuffle(order)  # per-step delivery order is seeded, not fixed
        for p in order:
            k = link_step.get((pid, p), 0)
            incoming.update(self.collect(pid, k, [p]))
            link_step[(pid, p)] = k + 1
        if on_step:
            on_step(pid, n_steps[pid], ex, incoming)
        n_steps[pid] += 1
        advance(pid, incoming)
