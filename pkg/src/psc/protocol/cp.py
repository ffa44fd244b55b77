"""Computation party state machine.

A CP runs the phases in order and either returns a :class:`MeasurementResult`
or a :class:`BlameReport`.  Every broadcast goes through Dolev-Strong, so all
honest CPs see the same messages and therefore reach the same verdict.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

from ..broadcast.dolev_strong import Blame, BroadcastContext, DolevStrong, broadcast
from ..broadcast.signatures import SigningKey, sign_message
from ..codec import Writer
from ..elgamal import (RRD_RETRY_CAP, Ciphertext, JointPublicKey, KeyShare, RetryNeeded, add, add_all,
                       deterministic_encrypt, is_zero_plaintext, rrd_step)
from ..group import DecodeError, default_rng, get_group
from ..phases import Phase
from ..transport.base import exchange
from ..zkp.context import fs_context
from ..zkp.dl import DlProof, prove_dl, verify_dl
from ..zkp.interactive import INVALID, DlSigma, RrdBatchSigma, prove_interactively
from ..zkp.pair_shuffle import PairShuffleProof, prove_pair_shuffle, shuffle_pair, verify_pair_shuffle
from ..zkp.rrd import RrdBatchProof, RrdStatement, RrdWitness, prove_rrd_batch, verify_rrd_batch
from ..zkp.shuffle import ShuffleProof, prove_shuffle, random_permutation, shuffle, verify_shuffle
from .blame import BlameReport, Evidence, MeasurementResult
from .common import Halt, VerifyCache, check_direct, make_direct, parse_direct
from .dp import blind_context, joint_key_message, submission_context
from .messages import (BlindsMsg, CountersMsg, Header, KeyShareMsg, KeySignatureMsg, NoiseMsg, RrdMsg, ShuffleMsg,
                       SignedKeyMsg, ViewDigestMsg, ViewMsg, pairs_digest, vector_digest)
from .params import FIAT_SHAMIR, INTERSECTION, ProtocolParams

# deviation kinds
SILENCE = "silence"
EQUIVOCATION = "equivocation"
INVALID_PROOF = "invalid_proof"
WRONG_STATEMENT = "wrong_statement"
IDENTITY_FIRST_COMPONENT = "identity_first_component"
BAD_KEY_SIGNATURE = "bad_key_signature"
REPLACE_OUTPUT = "replace_output"

DEVIATIONS = (SILENCE, EQUIVOCATION, INVALID_PROOF, WRONG_STATEMENT, IDENTITY_FIRST_COMPONENT, BAD_KEY_SIGNATURE,
              REPLACE_OUTPUT)

_DS_EVIDENCE = {"missing": Evidence.MISSING_MESSAGE, "equivocation": Evidence.EQUIVOCATION,
                INVALID: Evidence.INVALID_PROOF}

# broadcast slots per CP in phases that may run interactive proofs
_SLOTS = 8


@dataclass(frozen=True)
class Deviation:
    """Scripted misbehaviour of one CP in one phase."""
    phase: Phase
    kind: str


class SilentBroadcast(DolevStrong):
    """Takes part in nothing: sends no frames of its own and relays none."""

    def initial_frames(self, broadcaster):
        return {}

    def relay_frames(self, inst, digest, r):
        return {}

    def answer_nack(self, peer, digest):
        return None


@dataclass
class CpConfig:
    params: ProtocolParams
    me: str
    key: SigningKey
    roster: dict  # party id -> verification key
    rng: object = None
    noise_schedule: object = None  # NoiseSchedule, for matched-seed runs
    deviation: Deviation | None = None
    verify_cache: VerifyCache | None = None
    sig_cache: dict | None = None
    collection_timeout: float | None = None


class ComputationParty:
    def __init__(self, cfg: CpConfig) -> None:
        self.cfg = cfg
        self.params = p = cfg.params
        self.group = get_group(p.group)
        self.me = cfg.me
        self.cps = tuple(p.cps)
        self.dps = tuple(p.dps)
        self.index = self.cps.index(cfg.me)
        self.rng = cfg.rng or default_rng()
        self.bctx = BroadcastContext(self.group, cfg.me, cfg.key, cfg.roster, p.session,
                                     sig_cache=cfg.sig_cache if cfg.sig_cache is not None else {})
        self.cache = cfg.verify_cache
        self.timings: dict = {}
        self.share: KeyShare | None = None
        self.shares: tuple = ()
        self.joint: JointPublicKey | None = None
        self.blinds: dict = {}
        self.excluded: tuple = ()
        self.vectors: list = []  # vector after each shuffle step, for inspection

    # -- helpers -------------------------------------------------------------

    def _dev(self, phase: Phase) -> str | None:
        d = self.cfg.deviation
        return d.kind if d is not None and d.phase == phase else None

    def _ds(self, phase: Phase, round: int, broadcasters, payload: bytes | None = None):
        """Broadcast ``payload`` (if given) alongside the other broadcasters."""
        dev = self._dev(phase)
        payloads = {}
        if payload is not None:
            payloads[self.me] = payload
            if dev == EQUIVOCATION:
                peers = [c for c in self.cps if c != self.me]
                cut = len(peers) // 2
                payloads[self.me] = {c: payload if i < cut else payload + b"\x00" for i, c in enumerate(peers)}
        cls = SilentBroadcast if dev == SILENCE else DolevStrong
        return (yield from broadcast(self.bctx, phase, round, self.cps, broadcasters, payloads, cls))

    def _interactive(self, phase: Phase, round: int, verifiers: dict, mine=None):
        if self._dev(phase) == SILENCE:
            mine = None
        findings = yield from prove_interactively(self.bctx, phase, round, self.cps, verifiers, mine,
                                                  self.params.repetitions, self.rng)
        return {k: _DS_EVIDENCE[v] for k, v in findings.items()}

    def _verified(self, label: bytes, parts, fn) -> bool:
        if self.cache is None:
            return fn()
        h = hashlib.sha256(label)
        for part in parts:
            h.update(len(part).to_bytes(4, "big") + part)
        key = h.digest()
        ok = self.cache.lookup(key)
        return ok if ok is not None else self.cache.store(key, bool(fn()))

    def _decode(self, cls, payload: bytes, *args):
        if self.cache is None:
            return cls.decode(self.group, payload, *args)
        return self.cache.decode(cls, self.group, payload, *args)

    def _judge(self, phase: Phase, findings: dict) -> None:
        if findings:
            raise Halt(BlameReport.from_findings(phase.label, {k: Evidence(v) for k, v in findings.items()}))

    def _delivered(self, phase: Phase, outcomes: dict, findings: dict) -> dict:
        """Payloads of the broadcasters that were delivered; blame the rest."""
        out = {}
        for b in sorted(outcomes):
            o = outcomes[b]
            if isinstance(o, Blame):
                findings[b] = _DS_EVIDENCE[o.evidence]
            else:
                out[b] = o.payload
        return out

    def _header(self, phase: Phase, step: int, prover: str, input_digest: bytes = b"", key: bytes = b"") -> Header:
        return Header(self.params.session, int(phase), step, prover, input_digest, key)

    def _ctx(self, phase: Phase, prover: str, step: int, extra: bytes = b"") -> bytes:
        return fs_context(self.params.session, phase.label, prover, step, extra)

    # -- run -------------------------------------------------------------------

    def run(self):
        try:
            for phase, fn in ((Phase.KEYGEN, self.keygen), (Phase.DATA_COLLECTION, self.collect_blinds),
                              (Phase.NOISE, self.noise), (Phase.INPUT_SUBMISSION, self.collect_inputs),
                              (Phase.SHUFFLE, self.shuffling), (Phase.RRD, self.rrd)):
                t0 = time.perf_counter()
                yield from fn()
                self.timings[phase.label] = time.perf_counter() - t0
        except Halt as h:
            return h.outcome
        t0 = time.perf_counter()
        result = self.output()
        self.timings[Phase.OUTPUT.label] = time.perf_counter() - t0
        return result

    # -- KeyGen ------------------------------------------------------------------

    def keygen(self):
        g, ph = self.group, Phase.KEYGEN
        dev = self._dev(ph)
        interactive = self.params.proof_mode != FIAT_SHAMIR
        self.share = share = KeyShare.generate(g, self.me, self.rng)
        prover = self.me
        if dev == WRONG_STATEMENT:
            prover = self.cps[(self.index + 1) % len(self.cps)]
            if prover == self.me:
                prover = self.me + "'"
        proof = None
        if not interactive:
            proof = prove_dl(g, share.secret, share.public, self._ctx(ph, self.me, 0), self.rng)
            if dev == INVALID_PROOF:
                proof = DlProof(proof.commitment, proof.challenge, (proof.response + 1) % g.order)
        msg = KeyShareMsg(self._header(ph, 0, prover), share.public, proof)
        outcomes = yield from self._ds(ph, 0, self.cps, msg.encode(g))

        findings, shares = {}, {}
        for k, raw in self._delivered(ph, outcomes, findings).items():
            try:
                m = KeyShareMsg.decode(g, raw)
            except DecodeError:
                findings[k] = Evidence.INVALID_PROOF
                continue
            if m.header != self._header(ph, 0, k):
                findings[k] = Evidence.WRONG_STATEMENT
                continue
            if g.is_identity(m.share):
                findings[k] = Evidence.INVALID_PROOF
                continue
            if not interactive:
                ctx = self._ctx(ph, k, 0)
                ok = m.proof is not None and self._verified(b"dl", [ctx, raw], lambda: verify_dl(g, m.share, m.proof, ctx))
                if not ok:
                    findings[k] = Evidence.INVALID_PROOF
                    continue
            shares[k] = m.share
        self._judge(ph, findings)
        if interactive:
            x = share.secret + 1 if dev == INVALID_PROOF else share.secret
            findings = yield from self._interactive(ph, 2, {k: DlSigma(g, shares[k]) for k in self.cps},
                                                    DlSigma(g, share.public, x))
            self._judge(ph, findings)

        self.shares = tuple(shares[k] for k in self.cps)
        self.joint = JointPublicKey.combine(g, self.shares)

        # every CP signs the joint key it computed
        signed_key = self.joint.key
        if dev == BAD_KEY_SIGNATURE:
            signed_key = g.mul(signed_key, g.generator)
        sig = sign_message(g, self.cfg.key, joint_key_message(self.params.session, self.me, g, signed_key,
                                                              self.shares))
        msg = KeySignatureMsg(self._header(ph, 1, self.me), self.joint.key, sig)
        outcomes = yield from self._ds(ph, 1, self.cps, msg.encode(g))
        findings, sigs = {}, {}
        expected = {k: joint_key_message(self.params.session, k, g, self.joint.key, self.shares) for k in self.cps}
        for k, raw in self._delivered(ph, outcomes, findings).items():
            try:
                m = KeySignatureMsg.decode(g, raw)
            except DecodeError:
                findings[k] = Evidence.BAD_KEY_SIGNATURE
                continue
            if m.header != self._header(ph, 1, k):
                findings[k] = Evidence.WRONG_STATEMENT
            elif m.key != self.joint.key or not self.bctx.check_sig(k, expected[k], m.signature):
                findings[k] = Evidence.BAD_KEY_SIGNATURE
            else:
                sigs[k] = m.signature
        self._judge(ph, findings)

        # hand the signed key to the DPs (link step 0)
        out = {}
        if dev != SILENCE:
            payload = SignedKeyMsg(self.joint.key, self.shares, tuple(sorted(sigs.items()))).encode(g)
            frame = make_direct(g, self.cfg.key, self.params.session, ph, self.me, payload)
            out = {dp: [frame] for dp in self.dps}
        yield from exchange(self.dps, out)

    # -- DP inputs and their consensus ---------------------------------------------

    def _receive(self, phase: Phase, timeout=None):
        """One link step with every DP; keeps distinct validly signed frames."""
        incoming = yield from exchange(self.dps, timeout=timeout)
        received = {}
        for dp in self.dps:
            seen = {}
            for f in incoming.get(dp, ()):
                if check_direct(self.group, self.cfg.roster, f, self.params.session, phase, dp):
                    seen.setdefault(f.encode(), f)
            received[dp] = [seen[k] for k in sorted(seen)]
        return received

    def _agree(self, phase: Phase, received: dict):
        """Agree on what every DP sent.  Returns ``{dp: payload}`` for the DPs
        that sent exactly one distinct signed frame across all CPs."""
        g = self.group
        w = Writer()
        for dp in self.dps:
            frames = received.get(dp, [])
            w.text(dp).u32(len(frames))
            for f in frames:
                w.raw(hashlib.sha256(f.encode()).digest())
        view = hashlib.sha256(w.getvalue()).digest()
        msg = ViewDigestMsg(self._header(phase, 1, self.me), view)
        outcomes = yield from self._ds(phase, 1, self.cps, msg.encode(g))
        findings, digests = {}, {}
        for k, raw in self._delivered(phase, outcomes, findings).items():
            try:
                m = ViewDigestMsg.decode(g, raw)
            except DecodeError:
                findings[k] = Evidence.INVALID_PROOF
                continue
            if m.header != self._header(phase, 1, k):
                findings[k] = Evidence.WRONG_STATEMENT
                continue
            digests[k] = m.digest
        self._judge(phase, findings)
        if all(d == view for d in digests.values()):
            return {dp: fs[0].payload for dp, fs in received.items() if len(fs) == 1}

        # views differ: broadcast the signed frames themselves
        frames = tuple((dp, f.encode()) for dp in self.dps for f in received.get(dp, []))
        msg = ViewMsg(self._header(phase, 2, self.me), frames)
        outcomes = yield from self._ds(phase, 2, self.cps, msg.encode(g))
        candidates = {dp: set() for dp in self.dps}
        for k, raw in self._delivered(phase, outcomes, findings).items():
            try:
                m = ViewMsg.decode(g, raw, 4 * len(self.dps) + 4)
            except DecodeError:
                findings[k] = Evidence.INVALID_PROOF
                continue
            if m.header != self._header(phase, 2, k):
                findings[k] = Evidence.WRONG_STATEMENT
                continue
            for dp, enc in m.frames:
                f = parse_direct(enc)
                if dp in candidates and f is not None and check_direct(g, self.cfg.roster, f, self.params.session,
                                                                       phase, dp):
                    candidates[dp].add(f.payload)
        self._judge(phase, findings)
        return {dp: next(iter(ps)) for dp, ps in candidates.items() if len(ps) == 1}

    def _valid_proofs(self, label: bytes, dp: str, msg: BlindsMsg, context) -> bool:
        g, b = self.group, self.params.b
        if len(msg.blinds) != b or len(msg.proofs) != b:
            return False
        return all(self._verified(label, [context(self.params.session, dp, i), c.encode(g), p.encode(g)],
                                  lambda c=c, p=p, i=i: verify_dl(g, c.a, p, context(self.params.session, dp, i)))
                   for i, (c, p) in enumerate(zip(msg.blinds, msg.proofs)))

    def _check_blinds(self, dp: str, payload: bytes) -> BlindsMsg | None:
        try:
            msg = self._decode(BlindsMsg, payload, self.params.b)
        except DecodeError:
            return None
        if msg.header != self._header(Phase.DATA_COLLECTION, 0, dp):
            return None
        return msg if self._valid_proofs(b"blind", dp, msg, blind_context) else None

    def collect_blinds(self):
        ph = Phase.DATA_COLLECTION
        received = yield from self._receive(ph)
        agreed = yield from self._agree(ph, received)
        for dp in self.dps:
            if dp in agreed:
                msg = self._check_blinds(dp, agreed[dp])
                if msg is not None:
                    self.blinds[dp] = msg

    def collect_inputs(self):
        g, ph, b = self.group, Phase.INPUT_SUBMISSION, self.params.b
        received = yield from self._receive(ph, self.cfg.collection_timeout)
        agreed = yield from self._agree(ph, received)
        contributions = {}
        for dp in self.dps:
            blinds = self.blinds.get(dp)
            if blinds is None or dp not in agreed:
                continue
            # blinds are checked again at submission time; the cache makes this cheap
            if not self._valid_proofs(b"blind", dp, blinds, blind_context):
                continue
            try:
                if self.params.mode == INTERSECTION:
                    msg = self._decode(BlindsMsg, agreed[dp], b)
                    ok = self._valid_proofs(b"submission", dp, msg, submission_context)
                    subs = msg.blinds
                else:
                    msg = self._decode(CountersMsg, agreed[dp], b)
                    ok = len(msg.counters) == b
                    subs = [deterministic_encrypt(g, self.joint, c) for c in msg.counters] if ok else ()
            except DecodeError:
                continue
            if ok and msg.header == self._header(ph, 0, dp):
                contributions[dp] = [add(g, bl, s) for bl, s in zip(blinds.blinds, subs)]
        self.excluded = tuple(dp for dp in self.dps if dp not in contributions)
        if contributions:
            self.aggregate = [add_all(g, [contributions[dp][i] for dp in sorted(contributions)]) for i in range(b)]
        else:
            self.aggregate = [deterministic_encrypt(g, self.joint, 0) for _ in range(b)]

    # -- NoiseGen ----------------------------------------------------------------

    def _swap_bit(self, slot: int) -> int:
        sched = self.cfg.noise_schedule
        if sched is not None:
            return sched.bit(slot, self.index)
        return self.rng.randbytes(1)[0] & 1

    def noise(self):
        g, ph = self.group, Phase.NOISE
        dev = self._dev(ph)
        y = self.joint.key
        zero, one = deterministic_encrypt(g, y, 0), deterministic_encrypt(g, y, 1)
        history = [tuple((zero, one) for _ in range(self.params.n))]
        for j, cp in enumerate(self.cps):
            prev = history[-1]
            payload = None
            if cp == self.me:
                inp = prev
                if dev == WRONG_STATEMENT:
                    inp = history[-2] if len(history) >= 2 else tuple((one, zero) for _ in prev)
                pairs, proofs = [], []
                for i, pair in enumerate(inp):
                    swap = self._swap_bit(i)
                    s = (g.random_scalar(self.rng), g.random_scalar(self.rng))
                    out = shuffle_pair(g, y, pair, swap, s)
                    proofs.append(prove_pair_shuffle(g, pair, out, swap, s, y, self._ctx(ph, cp, j, _slot(i)),
                                                     self.rng))
                    pairs.append(tuple(out))
                if dev == INVALID_PROOF and proofs:
                    proofs[0] = _tamper_pair_proof(g, proofs[0])
                if dev == REPLACE_OUTPUT and pairs:
                    pairs[0] = (zero, zero)
                payload = NoiseMsg(self._header(ph, j, cp, pairs_digest(g, inp)), tuple(pairs),
                                   tuple(proofs)).encode(g)
            outcomes = yield from self._ds(ph, j, [cp], payload)
            findings = {}
            raw = self._delivered(ph, outcomes, findings).get(cp)
            self._judge(ph, findings)
            verdict, pairs = self._check_noise(j, cp, prev, raw)
            self._judge(ph, {cp: verdict} if verdict else {})
            history.append(pairs)
        self.noise_vector = [p[0] for p in history[-1]]

    def _check_noise(self, j: int, cp: str, prev, raw: bytes):
        g, ph, n = self.group, Phase.NOISE, self.params.n
        try:
            msg = self._decode(NoiseMsg, raw, n)
        except DecodeError:
            return Evidence.INVALID_PROOF, None
        if msg.header != self._header(ph, j, cp, pairs_digest(g, prev)):
            return Evidence.WRONG_STATEMENT, None
        if len(msg.pairs) != n or len(msg.proofs) != n:
            return Evidence.WRONG_STATEMENT, None
        y = self.joint.key

        def verify():
            return all(verify_pair_shuffle(g, prev[i], msg.pairs[i], msg.proofs[i], y, self._ctx(ph, cp, j, _slot(i)))
                       for i in range(n))

        ok = self._verified(b"noise", [self._ctx(ph, cp, j), msg.header.input_digest, raw], verify)
        return (None, msg.pairs) if ok else (Evidence.INVALID_PROOF, None)

    # -- Shuffling ---------------------------------------------------------------

    def shuffling(self):
        g, ph = self.group, Phase.SHUFFLE
        dev = self._dev(ph)
        y = self.joint.key
        history = [tuple(self.noise_vector) + tuple(self.aggregate)]
        for j, cp in enumerate(self.cps):
            prev = history[-1]
            payload = None
            if cp == self.me:
                inp = prev
                if dev == WRONG_STATEMENT:
                    inp = history[-2] if len(history) >= 2 else (add(g, prev[0], prev[0]),) + prev[1:]
                perm = random_permutation(len(inp), self.rng)
                s = [g.random_scalar(self.rng) for _ in inp]
                out = shuffle(g, y, inp, perm, s)
                proof = prove_shuffle(g, inp, out, perm, s, y, self._ctx(ph, cp, j), self.rng)
                if dev == INVALID_PROOF:
                    proof = _tamper_shuffle_proof(g, proof)
                if dev == REPLACE_OUTPUT:
                    out[0] = Ciphertext(g.mul(out[0].a, g.generator), out[0].b)
                payload = ShuffleMsg(self._header(ph, j, cp, vector_digest(g, inp)), tuple(out), proof).encode(g)
            outcomes = yield from self._ds(ph, j, [cp], payload)
            findings = {}
            raw = self._delivered(ph, outcomes, findings).get(cp)
            self._judge(ph, findings)
            verdict, out = self._check_shuffle(j, cp, prev, raw)
            self._judge(ph, {cp: verdict} if verdict else {})
            history.append(out)
        self.vectors = history
        self.shuffled = history[-1]

    def _check_shuffle(self, j: int, cp: str, prev, raw: bytes):
        g, ph = self.group, Phase.SHUFFLE
        try:
            msg = self._decode(ShuffleMsg, raw, len(prev))
        except DecodeError:
            return Evidence.INVALID_PROOF, None
        if msg.header != self._header(ph, j, cp, vector_digest(g, prev)):
            return Evidence.WRONG_STATEMENT, None
        if len(msg.output) != len(prev):
            return Evidence.WRONG_STATEMENT, None
        if msg.proof is None:
            return Evidence.INVALID_PROOF, None
        ctx = self._ctx(ph, cp, j)
        ok = self._verified(b"shuffle", [ctx, msg.header.input_digest, raw],
                            lambda: verify_shuffle(g, prev, msg.output, msg.proof, self.joint.key, ctx))
        return (None, msg.output) if ok else (Evidence.INVALID_PROOF, None)

    # -- RRD -----------------------------------------------------------------------

    def rrd(self):
        g, ph = self.group, Phase.RRD
        dev = self._dev(ph)
        interactive = self.params.proof_mode != FIAT_SHAMIR
        vec = tuple(self.shuffled)
        for j, cp in enumerate(self.cps):
            Y = self.joint.residual(g, j)
            y_j = self.shares[j]
            payload, mine = None, None
            if cp == self.me:
                out, witnesses = [], []
                for c in vec:
                    o, w = self._rrd_one(c, Y)
                    out.append(o)
                    witnesses.append(w)
                statements = [RrdStatement.of(c, o, Y, y_j) for c, o in zip(vec, out)]
                key = g.encode(y_j)
                if dev == WRONG_STATEMENT:
                    other = self.shares[(j + 1) % len(self.cps)] if len(self.cps) > 1 else g.mul(y_j, g.generator)
                    key = g.encode(other)
                    statements = [RrdStatement.of(c, o, Y, other) for c, o in zip(vec, out)]
                if dev == IDENTITY_FIRST_COMPONENT and out:
                    out[0] = Ciphertext(g.identity, out[0].b)
                    statements[0] = RrdStatement.of(vec[0], out[0], Y, y_j)
                proof = None
                if not interactive:
                    proof = prove_rrd_batch(g, statements, witnesses, self._ctx(ph, cp, j), self.rng)
                    if dev == INVALID_PROOF:
                        proof = _tamper_rrd_proof(g, proof)
                else:
                    if dev == INVALID_PROOF:
                        witnesses = [RrdWitness(w.r, w.sigma, (w.x + 1) % g.order) for w in witnesses]
                    mine = RrdBatchSigma(g, tuple(statements), tuple(witnesses))
                payload = RrdMsg(self._header(ph, j, cp, vector_digest(g, vec), key), tuple(out), proof).encode(g)
            outcomes = yield from self._ds(ph, j * _SLOTS, [cp], payload)
            findings = {}
            raw = self._delivered(ph, outcomes, findings).get(cp)
            self._judge(ph, findings)
            verdict, out = self._check_rrd(j, cp, vec, raw, Y, y_j, interactive)
            self._judge(ph, {cp: verdict} if verdict else {})
            if interactive:
                st = tuple(RrdStatement.of(c, o, Y, y_j) for c, o in zip(vec, out))
                findings = yield from self._interactive(ph, j * _SLOTS + 1, {cp: RrdBatchSigma(g, st)}, mine)
                self._judge(ph, findings)
            vec = out
        self.final = vec

    def _rrd_one(self, c: Ciphertext, Y):
        g = self.group
        for _ in range(RRD_RETRY_CAP):
            sigma = g.random_scalar(self.rng)
            r = g.random_nonzero_scalar(self.rng)
            try:
                return rrd_step(g, c, Y, self.share, sigma, r), RrdWitness(r, sigma, self.share.secret)
            except RetryNeeded:
                continue
        raise RetryNeeded("partial decryption kept producing the identity")

    def _check_rrd(self, j: int, cp: str, prev, raw: bytes, Y, y_j, interactive: bool):
        g, ph = self.group, Phase.RRD
        try:
            msg = self._decode(RrdMsg, raw, len(prev))
        except DecodeError:
            return Evidence.INVALID_PROOF, None
        if msg.header != self._header(ph, j, cp, vector_digest(g, prev), g.encode(y_j)):
            return Evidence.WRONG_STATEMENT, None
        if len(msg.output) != len(prev):
            return Evidence.WRONG_STATEMENT, None
        if any(g.is_identity(c.a) for c in msg.output):
            return Evidence.IDENTITY_FIRST_COMPONENT, None
        if interactive:
            return None, msg.output
        if msg.proof is None:
            return Evidence.INVALID_PROOF, None
        statements = [RrdStatement.of(c, o, Y, y_j) for c, o in zip(prev, msg.output)]
        ctx = self._ctx(ph, cp, j)
        ok = self._verified(b"rrd", [ctx, msg.header.input_digest, raw],
                            lambda: verify_rrd_batch(g, statements, msg.proof, ctx))
        return (None, msg.output) if ok else (Evidence.INVALID_PROOF, None)

    # -- Output ------------------------------------------------------------------

    def output(self) -> MeasurementResult:
        g, n = self.group, self.params.n
        zeros = sum(1 for c in self.final if is_zero_plaintext(g, c))
        count = zeros if self.params.mode == INTERSECTION else len(self.final) - zeros
        return MeasurementResult(count - n // 2, n, self.params.mode, self.excluded, dict(self.timings))


def _slot(i: int) -> bytes:
    return i.to_bytes(4, "big")


def _tamper_pair_proof(group, p: PairShuffleProof) -> PairShuffleProof:
    r = [list(x) for x in p.responses]
    r[0][0] = (r[0][0] + 1) % group.order
    return PairShuffleProof(p.commitments, p.challenges, tuple(tuple(x) for x in r))


def _tamper_shuffle_proof(group, p: ShuffleProof) -> ShuffleProof:
    return ShuffleProof(p.perm_commitment, p.chain, p.challenge, (p.s1 + 1) % group.order, p.s2, p.s3, p.s4,
                        p.s_hat, p.s_prime)


def _tamper_rrd_proof(group, p: RrdBatchProof) -> RrdBatchProof:
    first = ((p.responses[0][0] + 1) % group.order,) + tuple(p.responses[0][1:])
    return RrdBatchProof(p.commitments, p.challenge, (first,) + tuple(p.responses[1:]))


def cp_party(cfg: CpConfig):
    return (yield from ComputationParty(cfg).run())
