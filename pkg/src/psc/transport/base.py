"""Party execution model shared by both transports.

A party is a generator.  Each time it needs the network it yields an
:class:`Exchange` naming the peers it talks to in this step and the frames
for each of them; the transport sends them, waits until every named peer has
finished the same step on their shared link (or is silent past the round
deadline) and resumes the generator with ``{peer: [frames]}``.

Steps are counted per link, so two parties only need to agree on the
sequence of steps in which they talk to each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Generator, Iterable, Mapping

from .frames import Frame


@dataclass
class Exchange:
    peers: tuple
    outgoing: dict = field(default_factory=dict)  # peer -> list[Frame]
    # Socket transport only: override the per-step deadline, e.g. for the
    # observation period where DPs take as long as their feed lasts.
    timeout: float | None = None


Incoming = Mapping[str, list]
PartyGen = Generator[Exchange, Incoming, object]


def exchange(peers: Iterable[str], outgoing: Mapping[str, list] | None = None,
             timeout: float | None = None) -> Generator[Exchange, Incoming, dict]:
    peers = tuple(sorted(set(peers)))
    out = {p: list(fs) for p, fs in (outgoing or {}).items() if p in peers and fs}
    incoming = yield Exchange(peers, out, timeout)
    return {p: list(incoming.get(p, ())) for p in peers}


def to_all(peers: Iterable[str], frame: Frame) -> dict:
    return {p: [frame] for p in peers}
