"""Data party: blinds, oblivious observation recording and submission."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from ..broadcast.signatures import SigningKey, payload_digest, verify_message
from ..codec import Reader, Writer
from ..elgamal import Ciphertext, encrypt
from ..group import DecodeError, Group, default_rng, get_group
from ..phases import Phase
from ..transport.base import exchange
from ..zkp.context import fs_context
from ..zkp.dl import DlProof, prove_dl
from .blame import DpOutcome
from .common import check_direct, make_direct
from .messages import BlindsMsg, CountersMsg, Header, SignedKeyMsg
from .params import INTERSECTION, ProtocolParams

STATE_MAGIC = b"PSCDP"
STATE_VERSION = 1


class OutOfRange(IndexError):
    pass


@dataclass
class DpState:
    dp: str
    mode: str
    b: int
    phase: str = "init"  # init -> collecting -> submitted, or halted
    key: object = None
    counters: list = field(default_factory=list)  # union: per-bin scalar
    zero_values: list = field(default_factory=list)  # intersection: per-bin -blind
    submissions: list = field(default_factory=list)  # intersection: per-bin (Ciphertext, DlProof)

    def serialize(self, group: Group) -> bytes:
        w = Writer().raw(STATE_MAGIC).u8(STATE_VERSION)
        w.text(self.dp).text(self.mode).text(self.phase).u32(self.b)
        w.blob(group.encode(self.key) if self.key is not None else b"")
        w.scalars(self.counters).scalars(self.zero_values).u32(len(self.submissions))
        for c, proof in self.submissions:
            w.raw(c.encode(group)).raw(proof.encode(group))
        return w.getvalue()

    @classmethod
    def deserialize(cls, group: Group, data: bytes) -> "DpState":
        r = Reader(data)
        if r.raw(len(STATE_MAGIC)) != STATE_MAGIC:
            raise DecodeError("not a DP state snapshot")
        if r.u8() != STATE_VERSION:
            raise DecodeError("unsupported DP state version")
        st = cls(r.text(), r.text(), 0)
        st.phase = r.text()
        st.b = r.u32()
        raw_key = r.blob()
        st.key = group.decode(raw_key) if raw_key else None
        st.counters = r.scalars(group, st.b)
        st.zero_values = r.scalars(group, st.b)
        n = r.u32()
        if n > st.b:
            raise DecodeError("too many submissions")
        st.submissions = [(Ciphertext(r.element(group), r.element(group)), DlProof.read(group, r)) for _ in range(n)]
        r.done()
        return st


def blind_context(session: bytes, dp: str, i: int) -> bytes:
    return fs_context(session, Phase.DATA_COLLECTION.label, dp, i)


def submission_context(session: bytes, dp: str, i: int) -> bytes:
    return fs_context(session, Phase.INPUT_SUBMISSION.label, dp, i)


def dp_init(group: Group, params: ProtocolParams, state: DpState, key, rng=None) -> BlindsMsg:
    """Draw blinds, build the message for the CPs and seed local counters.

    Blinds and their encryption randomness only live in this function's frame;
    the state keeps ``-blind`` (union counter or intersection zero value).
    """
    state.key = key
    state.counters, state.zero_values, state.submissions = [], [], []
    blinds, proofs = [], []
    q = group.order
    for i in range(state.b):
        beta = group.random_scalar(rng)
        r = group.random_scalar(rng)
        c = encrypt(group, key, beta, r)
        blinds.append(c)
        proofs.append(prove_dl(group, r, c.a, blind_context(params.session, state.dp, i), rng))
        if state.mode == INTERSECTION:
            state.zero_values.append((-beta) % q)
            state.submissions.append(_fresh_submission(group, params, state, i, group.random_scalar(rng), rng))
        else:
            state.counters.append((-beta) % q)
        del beta, r
    state.phase = "collecting"
    header = Header(params.session, Phase.DATA_COLLECTION, 0, state.dp)
    return BlindsMsg(header, tuple(blinds), tuple(proofs))


def _fresh_submission(group: Group, params: ProtocolParams, state: DpState, i: int, value: int, rng):
    rho = group.random_scalar(rng)
    c = encrypt(group, state.key, value, rho)
    return c, prove_dl(group, rho, c.a, submission_context(params.session, state.dp, i), rng)


def dp_observe(group: Group, params: ProtocolParams, state: DpState, bin: int, rng=None) -> None:
    """Record an observation in ``bin``.

    Union mode overwrites the counter with a fresh uniform scalar.
    Intersection mode replaces the submission with an encryption of the
    stored zero value, which cancels the blind.
    """
    if not isinstance(bin, int) or not 0 <= bin < state.b:
        raise OutOfRange(f"bin {bin!r} outside [0, {state.b})")
    if state.phase != "collecting":
        raise RuntimeError(f"cannot observe in phase {state.phase!r}")
    if state.mode == INTERSECTION:
        state.submissions[bin] = _fresh_submission(group, params, state, bin, state.zero_values[bin], rng)
    else:
        state.counters[bin] = group.random_scalar(rng)


def submission_message(group: Group, params: ProtocolParams, state: DpState):
    header = Header(params.session, Phase.INPUT_SUBMISSION, 0, state.dp)
    if state.mode == INTERSECTION:
        return BlindsMsg(header, tuple(c for c, _ in state.submissions), tuple(p for _, p in state.submissions))
    return CountersMsg(header, tuple(state.counters))


def joint_key_digest(group: Group, key, shares) -> bytes:
    w = Writer().raw(b"PSC-JOINT-KEY").element(group, key).elements(group, shares)
    return payload_digest(w.getvalue())


def joint_key_message(session: bytes, signer: str, group: Group, key, shares) -> bytes:
    """What each CP signs for the DPs.  Domain-separated from broadcast
    signatures so a relay signature can never double as a key endorsement."""
    w = Writer().raw(b"PSC-JOINT-KEY-SIG").raw(session).text(signer).raw(joint_key_digest(group, key, shares))
    return payload_digest(w.getvalue())


def accept_signed_keys(group: Group, params: ProtocolParams, cp_roster, messages: Iterable[SignedKeyMsg]):
    """The unique joint key carrying valid signatures from every CP, or None
    when there are zero or several such keys."""
    keys = {}
    for msg in messages:
        if group.prod(msg.shares) != msg.key or len(msg.shares) != params.m:
            continue
        sigs = dict(msg.signatures)
        if set(sigs) != set(params.cps):
            continue
        ok = all(verify_message(group, cp_roster[cp], joint_key_message(params.session, cp, group, msg.key,
                                                                         msg.shares), sigs[cp])
                 for cp in params.cps)
        if ok:
            keys[group.encode(msg.key)] = msg
    if len(keys) != 1:
        return None
    return next(iter(keys.values()))


# -- party ------------------------------------------------------------------------

SHORT_VECTOR = "short_vector"
INVALID_BLIND_PROOF = "invalid_blind_proof"
EQUIVOCATE = "equivocate"
SILENT = "silent"


@dataclass
class DpConfig:
    params: ProtocolParams
    me: str
    key: SigningKey
    roster: dict  # party id -> verification key
    rng: object = None
    observations: Iterable[int] | Callable[[], Iterable[int]] = ()
    deviation: str | None = None
    on_state: Callable | None = None  # called with (stage, serialized state)
    collection_timeout: float | None = None


def dp_party(cfg: DpConfig):
    params = cfg.params
    group = get_group(params.group)
    cps = params.cps
    rng = cfg.rng or default_rng()

    # 1. joint key from the CPs
    incoming = yield from exchange(cps)
    msgs = []
    for cp, frames in incoming.items():
        for f in frames:
            if check_direct(group, cfg.roster, f, params.session, Phase.KEYGEN, cp):
                try:
                    msgs.append(SignedKeyMsg.decode(group, f.payload))
                except DecodeError:
                    pass
    signed = accept_signed_keys(group, params, cfg.roster, msgs)
    if signed is None:
        return DpOutcome("halted", "no unique signed joint key")

    # 2. blinds
    state = DpState(cfg.me, params.mode, params.b)
    blinds = dp_init(group, params, state, signed.key, rng)
    if cfg.deviation == INVALID_BLIND_PROOF:
        p = blinds.proofs[0]
        blinds = BlindsMsg(blinds.header, blinds.blinds,
                           (DlProof(p.commitment, p.challenge, (p.response + 1) % group.order),) + blinds.proofs[1:])
    if cfg.on_state:
        cfg.on_state("after_blinds", state.serialize(group))
    out = {}
    if cfg.deviation != SILENT:
        payload = blinds.encode(group)
        frame = make_direct(group, cfg.key, params.session, Phase.DATA_COLLECTION, cfg.me, payload)
        out = {cp: [frame] for cp in cps}
    yield from exchange(cps, out)

    # 3. collection period
    obs = cfg.observations() if callable(cfg.observations) else cfg.observations
    for bin in obs:
        dp_observe(group, params, state, bin, rng)
    if cfg.on_state:
        cfg.on_state("after_collection", state.serialize(group))

    # 4. submission
    msg = submission_message(group, params, state)
    if cfg.deviation == SHORT_VECTOR:
        if isinstance(msg, CountersMsg):
            msg = CountersMsg(msg.header, msg.counters[:-1])
        else:
            msg = BlindsMsg(msg.header, msg.blinds[:-1], msg.proofs[:-1])
    out = {}
    if cfg.deviation != SILENT:
        payload = msg.encode(group)
        frame = make_direct(group, cfg.key, params.session, Phase.INPUT_SUBMISSION, cfg.me, payload)
        out = {cp: [frame] for cp in cps}
        if cfg.deviation == EQUIVOCATE and len(cps) > 1:
            alt = submission_message(group, params, _rerandomized(group, params, state, rng))
            alt_frame = make_direct(group, cfg.key, params.session, Phase.INPUT_SUBMISSION, cfg.me,
                                    alt.encode(group))
            out[cps[-1]] = [alt_frame]
    state.phase = "submitted"
    yield from exchange(cps, out, timeout=cfg.collection_timeout)
    return DpOutcome("submitted")


def _rerandomized(group: Group, params: ProtocolParams, state: DpState, rng) -> DpState:
    """Copy of the state with every bin marked observed (equivocation helper)."""
    alt = DpState(state.dp, state.mode, state.b, state.phase, state.key, list(state.counters),
                  list(state.zero_values), list(state.submissions))
    for i in range(state.b):
        dp_observe(group, params, alt, i, rng)
    return alt
