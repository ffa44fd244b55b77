"""Dolev-Strong broadcast with blame, run over the lockstep transports.

Every participant runs ``t + 1`` rounds, with ``t = len(participants) - 1``.
A message is accepted in round ``k`` when it carries ``k`` valid signatures
from distinct participants, the broadcaster's among them.  Each newly accepted
message is countersigned and relayed in the next round.  A party stops
accepting once it holds two distinct messages from a broadcaster, since two
already prove equivocation.  After the last round a single accepted message is
delivered; none or several blame the broadcaster.

Each round is three transport steps:

1. main: broadcaster payloads and relayed chains.  Relays carry only the
   32-byte payload digest (hash echo), because signatures are over the digest.
2. nack: ask a sender for the payload of any digest not yet held locally.
3. fill: answer nacks with the payload.

A chain is only accepted once its payload is held, which keeps acceptance
consistent among honest parties even when a corrupt sender withholds data.

Steps in which a peer has nothing to say still close with a heartbeat, so
rounds that carry no traffic cost one message exchange and no timeouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..group import Group
from ..transport.base import exchange
from ..transport.frames import Frame, MsgType
from .signatures import SigningKey, message_digest, payload_digest, sign_message, verify_message

EQUIVOCATION = "equivocation"
MISSING = "missing"
MAX_ACCEPTED = 2


@dataclass(frozen=True)
class Delivered:
    payload: bytes


@dataclass(frozen=True)
class Blame:
    broadcaster: str
    evidence: str  # EQUIVOCATION or MISSING


@dataclass
class BroadcastStats:
    rounds: int = 0  # signature-chain rounds executed
    logical_rounds: int = 0  # rounds in which this party sent or received substantive frames
    bytes_sent: int = 0
    digest_frames: int = 0
    fills_sent: int = 0


@dataclass
class BroadcastContext:
    group: Group
    me: str
    key: SigningKey
    roster: Mapping[str, object]  # party id -> verification key
    session: bytes
    blobs: dict = field(default_factory=dict)  # payload digest -> payload
    # (message digest, signer, sig) -> bool.  May be shared between simulated
    # parties; verification is a pure function so sharing cannot change results.
    sig_cache: dict = field(default_factory=dict)
    stats: BroadcastStats = field(default_factory=BroadcastStats)

    def check_sig(self, signer: str, msg: bytes, sig: bytes) -> bool:
        if signer not in self.roster:
            return False
        key = (msg, signer, sig)
        ok = self.sig_cache.get(key)
        if ok is None:
            ok = verify_message(self.group, self.roster[signer], msg, sig)
            self.sig_cache[key] = ok
        return ok


class _Instance:
    def __init__(self, broadcaster: str) -> None:
        self.broadcaster = broadcaster
        self.accepted: dict[bytes, dict] = {}  # digest -> {signer: sig}
        self.to_relay: list[bytes] = []
        self.pending: dict[bytes, dict] = {}  # digest -> chain awaiting its payload
        self.providers: dict[bytes, set] = {}


class DolevStrong:
    """One or more concurrent broadcast instances sharing a (phase, round) slot.

    ``payloads`` holds what this party broadcasts: ``{me: bytes}`` normally.
    A mapping ``{me: {peer: bytes}}`` sends per-recipient payloads, which is
    how tests and the adversary harness express equivocation.
    """

    def __init__(self, ctx: BroadcastContext, phase: int, round: int, participants: Iterable[str],
                 broadcasters: Iterable[str], payloads: Mapping[str, object] | None = None) -> None:
        self.ctx = ctx
        self.phase = phase
        self.round = round
        self.participants = tuple(sorted(set(participants)))
        self.peers = tuple(p for p in self.participants if p != ctx.me)
        self.instances = {b: _Instance(b) for b in sorted(set(broadcasters))}
        self.payloads = dict(payloads or {})
        self.n_rounds = len(self.participants)  # t + 1
        self._msg_digests: dict = {}

    # -- helpers -------------------------------------------------------------

    def msg(self, broadcaster: str, digest: bytes) -> bytes:
        k = (broadcaster, digest)
        if k not in self._msg_digests:
            self._msg_digests[k] = message_digest(self.ctx.session, self.phase, self.round, broadcaster, digest)
        return self._msg_digests[k]

    def sign(self, broadcaster: str, digest: bytes) -> bytes:
        return sign_message(self.ctx.group, self.ctx.key, self.msg(broadcaster, digest))

    def frame(self, kind: MsgType, broadcaster: str, payload: bytes = b"", sigs=()) -> Frame:
        return Frame(kind, self.ctx.session, self.phase, self.round, broadcaster, payload, tuple(sigs))

    def _valid_chain(self, inst: _Instance, digest: bytes, sigs, r: int) -> dict | None:
        chain = {}
        for signer, sig in sigs:
            if signer in chain or signer not in self.participants:
                return None
            chain[signer] = sig
        if len(chain) < r or inst.broadcaster not in chain:
            return None
        msg = self.msg(inst.broadcaster, digest)
        for signer, sig in chain.items():
            if not self.ctx.check_sig(signer, msg, sig):
                return None
        return chain

    def _accept(self, inst: _Instance, digest: bytes, chain: dict, r: int) -> None:
        if digest in inst.accepted or len(inst.accepted) >= MAX_ACCEPTED:
            return
        chain = dict(chain)
        if self.ctx.me not in chain:
            chain[self.ctx.me] = self.sign(inst.broadcaster, digest)
        inst.accepted[digest] = chain
        if r < self.n_rounds:
            inst.to_relay.append(digest)

    # -- overridable behaviour (adversary harness) ----------------------------

    def initial_frames(self, broadcaster: str) -> dict:
        """Round-1 frames of a broadcaster, per peer."""
        data = self.payloads[broadcaster]
        out = {}
        first = None
        for p in self.peers:
            payload = data[p] if isinstance(data, Mapping) else data
            if payload is None:
                continue
            d = payload_digest(payload)
            self.ctx.blobs[d] = payload
            out[p] = [self.frame(MsgType.DS_SEND, broadcaster, payload, [(self.ctx.me, self.sign(broadcaster, d))])]
            first = first or (d, payload)
        if first is None and not isinstance(data, Mapping):
            first = (payload_digest(data), data)
            self.ctx.blobs[first[0]] = data
        if first is not None:
            inst = self.instances[broadcaster]
            inst.accepted.setdefault(first[0], {self.ctx.me: self.sign(broadcaster, first[0])})
        return out

    def relay_frames(self, inst: _Instance, digest: bytes, r: int) -> dict:
        chain = inst.accepted[digest]
        f = self.frame(MsgType.DS_DIGEST, inst.broadcaster, digest, sorted(chain.items()))
        return {p: [f] for p in self.peers if p not in chain}

    def answer_nack(self, peer: str, digest: bytes) -> bytes | None:
        return self.ctx.blobs.get(digest)

    # -- protocol --------------------------------------------------------------

    def run(self):
        ctx = self.ctx
        me_b = [b for b in self.instances if b == ctx.me and b in self.payloads]
        for r in range(1, self.n_rounds + 1):
            ctx.stats.rounds += 1
            substantive = False
            out: dict[str, list] = {p: [] for p in self.peers}
            if r == 1:
                for b in me_b:
                    for p, fs in self.initial_frames(b).items():
                        out[p].extend(fs)
            else:
                for inst in self.instances.values():
                    for d in inst.to_relay:
                        for p, fs in self.relay_frames(inst, d, r).items():
                            out[p].extend(fs)
                    inst.to_relay = []
            substantive |= any(out.values())
            self._account(out)
            incoming = yield from self._step(out)

            candidates = []
            for peer, frames in incoming.items():
                for f in frames:
                    if f.kind not in (MsgType.DS_SEND, MsgType.DS_DIGEST):
                        continue
                    substantive = True
                    inst = self._match(f)
                    if inst is None:
                        continue
                    if f.kind == MsgType.DS_SEND:
                        d = payload_digest(f.payload)
                    elif len(f.payload) == 32:
                        d = f.payload
                        ctx.stats.digest_frames += 1
                    else:
                        continue
                    if d in inst.accepted or len(inst.accepted) >= MAX_ACCEPTED:
                        continue
                    chain = self._valid_chain(inst, d, f.signatures, r)
                    if chain is None:
                        continue
                    if f.kind == MsgType.DS_SEND:
                        ctx.blobs.setdefault(d, f.payload)
                    if d in ctx.blobs:
                        candidates.append((inst.broadcaster, d, chain))
                    else:
                        inst.pending.setdefault(d, chain)
                        inst.providers.setdefault(d, set()).add(peer)

            # nack / fill
            nacks = {p: [] for p in self.peers}
            for inst in self.instances.values():
                for d in sorted(inst.pending):
                    for p in sorted(inst.providers.get(d, ())):
                        nacks[p].append(self.frame(MsgType.NACK, inst.broadcaster, d))
            substantive |= any(nacks.values())
            self._account(nacks)
            incoming = yield from self._step(nacks)
            fills = {p: [] for p in self.peers}
            for peer, frames in incoming.items():
                for f in frames:
                    if f.kind != MsgType.NACK or len(f.payload) != 32:
                        continue
                    substantive = True
                    blob = self.answer_nack(peer, f.payload)
                    if blob is not None:
                        fills[peer].append(self.frame(MsgType.FILL, f.sender, blob))
                        ctx.stats.fills_sent += 1
            substantive |= any(fills.values())
            self._account(fills)
            incoming = yield from self._step(fills)
            for frames in incoming.values():
                for f in frames:
                    if f.kind != MsgType.FILL:
                        continue
                    substantive = True
                    inst = self._match(f)
                    if inst is None:
                        continue
                    d = payload_digest(f.payload)
                    if d in inst.pending:
                        ctx.blobs.setdefault(d, f.payload)

            for inst in self.instances.values():
                for d in sorted(inst.pending):
                    if d in ctx.blobs:
                        candidates.append((inst.broadcaster, d, inst.pending[d]))
                inst.pending = {}
                inst.providers = {}
            for b, d, chain in sorted(candidates, key=lambda c: (c[0], c[1])):
                self._accept(self.instances[b], d, chain, r)
            if substantive:
                ctx.stats.logical_rounds += 1

        return {b: self.outcome(inst) for b, inst in self.instances.items()}

    def outcome(self, inst: _Instance):
        if len(inst.accepted) == 1:
            (d,) = inst.accepted
            return Delivered(self.ctx.blobs[d])
        return Blame(inst.broadcaster, MISSING if not inst.accepted else EQUIVOCATION)

    def _match(self, f: Frame) -> _Instance | None:
        if f.session != self.ctx.session or f.phase != self.phase or f.round != self.round:
            return None
        return self.instances.get(f.sender)

    def _step(self, out):
        if not self.peers:
            return {}
        return (yield from exchange(self.peers, out))

    def _account(self, out) -> None:
        for fs in out.values():
            for f in fs:
                self.ctx.stats.bytes_sent += len(f.payload) + 64 * len(f.signatures) + 32


def broadcast(ctx: BroadcastContext, phase: int, round: int, participants: Iterable[str],
              broadcasters: Iterable[str], payloads: Mapping[str, object] | None = None, cls=DolevStrong):
    """Run concurrent broadcast instances; returns ``{broadcaster: outcome}``."""
    return (yield from cls(ctx, phase, round, participants, broadcasters, payloads).run())
