"""Interactive one-to-many proofs over the broadcast channel.

:func:`coin_flip` is commit-then-open over broadcast: every party commits to
random bits, then opens; the result is the XOR.  Parties whose commitment or
opening is missing or invalid are blamed.

:func:`prove_interactively` turns any Sigma-protocol into an accountable proof
for many verifiers.  The prover runs ``reps`` independent instances and for
each one broadcasts the first message together with two distinct challenges
of its own choosing, and commits to the responses for both.  A joint coin
flip then selects which of the two responses is opened per instance.  A
prover that cannot answer both challenges is caught with probability
``1 - 2^-reps``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol

from ..broadcast.dolev_strong import Blame, BroadcastContext, broadcast
from ..codec import Reader, Writer
from ..group import DecodeError, Group, default_rng
from . import dl as dl_sigma
from . import rrd as rrd_sigma
from .commitments import Opening, commit, verify_opening

INVALID = "invalid"


class Sigma(Protocol):
    def commit(self, rng) -> tuple: ...  # (prover state, first message bytes)
    def respond(self, state, c: int) -> bytes: ...
    def check(self, first: bytes, c: int, response: bytes) -> bool: ...


# -- Sigma adapters --------------------------------------------------------------

@dataclass
class DlSigma:
    group: Group
    Y: object
    x: int | None = None  # witness, prover side only

    def commit(self, rng):
        t, T = dl_sigma.commit(self.group, rng)
        return t, self.group.encode(T)

    def respond(self, t: int, c: int) -> bytes:
        return Writer().scalar(dl_sigma.respond(self.group, self.x, t, c)).getvalue()

    def check(self, first: bytes, c: int, response: bytes) -> bool:
        try:
            T = self.group.decode(first)
            z = self.group.decode_scalar(response)
        except DecodeError:
            return False
        return dl_sigma.check(self.group, self.Y, T, c, z)


@dataclass
class RrdBatchSigma:
    """All elements of a partial-decryption step under one challenge."""
    group: Group
    statements: tuple
    witnesses: tuple | None = None

    def commit(self, rng):
        g = self.group
        nonces, first = [], Writer()
        for st in self.statements:
            ns, Ts = rrd_sigma.commit(g, st, rng)
            nonces.append(ns)
            for T in Ts:
                first.element(g, T)
        return nonces, first.getvalue()

    def respond(self, nonces, c: int) -> bytes:
        w = Writer()
        for wit, ns in zip(self.witnesses, nonces):
            for s in rrd_sigma.respond(self.group, wit, ns, c):
                w.scalar(s)
        return w.getvalue()

    def check(self, first: bytes, c: int, response: bytes) -> bool:
        g = self.group
        try:
            fr, rr = Reader(first), Reader(response)
            for st in self.statements:
                Ts = tuple(fr.element(g) for _ in range(3))
                rs = tuple(rr.scalar(g) for _ in range(3))
                if not rrd_sigma.check(g, st, Ts, c, rs):
                    return False
            fr.done()
            rr.done()
        except DecodeError:
            return False
        return True


# -- coin flipping ---------------------------------------------------------------

def _bits_bytes(nbits: int) -> int:
    return (nbits + 7) // 8


def coin_flip(ctx: BroadcastContext, phase: int, round: int, participants: Iterable[str], nbits: int, rng=None):
    """Returns ``(bits, blamed)``; ``bits`` is None when ``blamed`` is non-empty.

    ``blamed`` maps a party to ``"missing"``, ``"equivocation"`` or ``"invalid"``.
    Uses broadcast slots ``round`` and ``round + 1``.
    """
    participants = tuple(sorted(participants))
    mine = (rng or default_rng()).randbytes(_bits_bytes(nbits))
    com = commit(mine, rng)
    outcomes = yield from broadcast(ctx, phase, round, participants, participants, {ctx.me: com.digest})
    blamed, digests = {}, {}
    for p, o in outcomes.items():
        if isinstance(o, Blame):
            blamed[p] = o.evidence
        elif len(o.payload) != 32:
            blamed[p] = INVALID
        else:
            digests[p] = o.payload
    if blamed:
        return None, blamed
    opening = com.opening.nonce + com.opening.value
    outcomes = yield from broadcast(ctx, phase, round + 1, participants, participants, {ctx.me: opening})
    acc = bytearray(_bits_bytes(nbits))
    for p, o in outcomes.items():
        if isinstance(o, Blame):
            blamed[p] = o.evidence
            continue
        op = Opening(o.payload[32:], o.payload[:32])
        if len(op.value) != len(acc) or not verify_opening(digests[p], op):
            blamed[p] = INVALID
            continue
        for i, byte in enumerate(op.value):
            acc[i] ^= byte
    if blamed:
        return None, blamed
    return [(acc[i // 8] >> (i % 8)) & 1 for i in range(nbits)], {}


# -- compiler ----------------------------------------------------------------------

def _encode_round1(group: Group, inst) -> bytes:
    w = Writer().u32(len(inst))
    for first, b0, b1, d0, d1 in inst:
        w.blob(first).scalar(b0).scalar(b1).raw(d0).raw(d1)
    return w.getvalue()


def _decode_round1(group: Group, data: bytes, reps: int):
    r = Reader(data)
    n = r.u32()
    if n != reps:
        raise DecodeError("wrong number of instances")
    out = [(r.blob(), r.scalar(group), r.scalar(group), r.raw(32), r.raw(32)) for _ in range(n)]
    r.done()
    return out


def prove_interactively(ctx: BroadcastContext, phase: int, round: int, participants: Iterable[str],
                        verifiers: Mapping[str, Sigma], mine: Sigma | None = None, reps: int = 40, rng=None):
    """Run the compiled proofs of every prover in ``verifiers`` concurrently.

    ``verifiers`` maps each prover to the Sigma-protocol for its statement;
    ``mine`` is this party's own instance, with witness, if it is a prover.
    Returns ``{party: reason}`` for every party to blame (empty when all
    proofs are accepted).  Uses broadcast slots ``round`` .. ``round + 3``.
    """
    group = ctx.group
    participants = tuple(sorted(participants))
    provers = tuple(sorted(verifiers))
    q = group.order

    payloads = {}
    secret = None
    if mine is not None:
        inst, secret = [], []
        for _ in range(reps):
            state, first = mine.commit(rng)
            b0 = group.random_scalar(rng)
            b1 = group.random_scalar(rng)
            while b1 == b0:
                b1 = group.random_scalar(rng)
            c0, c1 = commit(mine.respond(state, b0), rng), commit(mine.respond(state, b1), rng)
            inst.append((first, b0, b1, c0.digest, c1.digest))
            secret.append((c0.opening, c1.opening))
        payloads[ctx.me] = _encode_round1(group, inst)

    outcomes = yield from broadcast(ctx, phase, round, participants, provers, payloads)
    blamed, announced = {}, {}
    for p in provers:
        o = outcomes[p]
        if isinstance(o, Blame):
            blamed[p] = o.evidence
            continue
        try:
            inst = _decode_round1(group, o.payload, reps)
        except DecodeError:
            blamed[p] = INVALID
            continue
        firsts = [i[0] for i in inst]
        if len(set(firsts)) != len(firsts) or any(i[1] % q == i[2] % q for i in inst):
            blamed[p] = INVALID
            continue
        announced[p] = inst
    if blamed:
        return blamed

    bits, coin_blame = yield from coin_flip(ctx, phase, round + 1, participants, reps, rng)
    if coin_blame:
        return coin_blame

    payloads = {}
    if secret is not None:
        w = Writer()
        for i, pair in enumerate(secret):
            op = pair[bits[i]]
            w.raw(op.nonce).blob(op.value)
        payloads[ctx.me] = w.getvalue()
    outcomes = yield from broadcast(ctx, phase, round + 3, participants, provers, payloads)
    for p in provers:
        o = outcomes[p]
        if isinstance(o, Blame):
            blamed[p] = o.evidence
            continue
        try:
            r = Reader(o.payload)
            openings = [Opening(nonce=r.raw(32), value=r.blob()) for _ in range(reps)]
            r.done()
        except DecodeError:
            blamed[p] = INVALID
            continue
        for i, op in enumerate(openings):
            first, b0, b1, d0, d1 = announced[p][i]
            digest, c = (d1, b1) if bits[i] else (d0, b0)
            if not verify_opening(digest, op) or not verifiers[p].check(first, c, op.value):
                blamed[p] = INVALID
                break
    return blamed

