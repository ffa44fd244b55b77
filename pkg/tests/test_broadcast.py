import pytest

from psc.broadcast.dolev_strong import EQUIVOCATION, MISSING, Blame, Delivered, DolevStrong, broadcast
from psc.broadcast.signatures import (SigningKey, UnknownSigner, message_digest, payload_digest, sign_message,
                                      verify_message)
from psc.transport.frames import MsgType
from psc.transport.simnet import DROP, Fault, SimNet

from . import byzantine
from .helpers import SESSION, contexts, run_parties

IDS = ("CP1", "CP2", "CP3", "CP4")


def run(G, payloads, broadcasters=None, faults=(), ids=IDS, cls=DolevStrong):
    ctxs = contexts(G, ids)
    broadcasters = broadcasters or sorted(payloads)

    def party(me):
        mine = {me: payloads[me]} if me in payloads else {}
        out = yield from broadcast(ctxs[me], 5, 1, ids, broadcasters, mine, cls=cls)
        return out

    return run_parties({i: party(i) for i in ids}, faults), ctxs


def test_sign_verify(G, rng):
    k = SigningKey.generate(G, rng)
    msg = message_digest(SESSION, 1, 0, "CP1", payload_digest(b"x"))
    sig = sign_message(G, k, msg)
    assert len(sig) == 64
    assert verify_message(G, k.public, msg, sig)
    assert sign_message(G, k, msg) == sig  # deterministic nonce
    assert not verify_message(G, k.public, msg + b"!", sig)
    assert not verify_message(G, SigningKey.generate(G, rng).public, msg, sig)
    assert not verify_message(G, k.public, msg, bytes(64))
    assert not verify_message(G, k.public, msg, sig[:63])


def test_message_digest_binds_every_field():
    d = payload_digest(b"x")
    base = message_digest(SESSION, 1, 0, "CP1", d)
    assert base != message_digest(bytes(16), 1, 0, "CP1", d)
    assert base != message_digest(SESSION, 2, 0, "CP1", d)
    assert base != message_digest(SESSION, 1, 1, "CP1", d)  # round mutation
    assert base != message_digest(SESSION, 1, 0, "CP2", d)
    assert base != message_digest(SESSION, 1, 0, "CP1", payload_digest(b"y"))


def test_signature_from_other_round_fails(G, rng):
    k = SigningKey.generate(G, rng)
    d = payload_digest(b"x")
    sig = sign_message(G, k, message_digest(SESSION, 1, 0, "CP1", d))
    assert not verify_message(G, k.public, message_digest(SESSION, 1, 1, "CP1", d), sig)


def test_unknown_signer_ignored(G):
    ctxs = contexts(G, IDS)
    msg = message_digest(SESSION, 1, 0, "CP1", payload_digest(b"x"))
    assert not ctxs["CP1"].check_sig("CP9", msg, bytes(64))
    assert issubclass(UnknownSigner, Exception)


def test_honest_broadcast(G):
    payloads = {"CP1": b"alpha", "CP3": b"gamma"}
    results, ctxs = run(G, payloads)
    for me in IDS:
        assert results[me] == {"CP1": Delivered(b"alpha"), "CP3": Delivered(b"gamma")}
        assert ctxs[me].stats.rounds == len(IDS)
        assert ctxs[me].stats.logical_rounds <= 2


def test_honest_broadcast_three_parties(G):
    results, _ = run(G, {"CP2": b"x" * 1000}, ids=IDS[:3])
    assert all(r == {"CP2": Delivered(b"x" * 1000)} for r in results.values())


def test_single_participant(G):
    results, _ = run(G, {"CP1": b"solo"}, ids=("CP1",))
    assert results == {"CP1": {"CP1": Delivered(b"solo")}}


def test_empty_payload(G):
    results, _ = run(G, {"CP4": b""})
    assert all(r == {"CP4": Delivered(b"")} for r in results.values())


def test_equivocation_blamed(G):
    results, _ = run(G, {"CP2": {"CP1": b"x", "CP3": b"y", "CP4": b"x"}})
    for me in ("CP1", "CP3", "CP4"):
        assert results[me] == {"CP2": Blame("CP2", EQUIVOCATION)}


def test_partial_send_still_delivers(G):
    # a broadcaster skipping some peers is repaired by relays
    results, _ = run(G, {"CP2": {"CP1": b"x", "CP3": None, "CP4": None}})
    for me in ("CP1", "CP3", "CP4"):
        assert results[me] == {"CP2": Delivered(b"x")}


def test_silence_blamed(G):
    results, _ = run(G, {}, broadcasters=["CP4"])
    for me in ("CP1", "CP2", "CP3"):
        assert results[me] == {"CP4": Blame("CP4", MISSING)}


def test_dropped_broadcaster_blamed(G):
    results, _ = run(G, {"CP1": b"x"}, faults=[Fault("CP1", DROP)])
    for me in ("CP2", "CP3", "CP4"):
        assert results[me] == {"CP1": Blame("CP1", MISSING)}


def test_relays_carry_digest_not_payload(G):
    payload = b"P" * 5000
    ctxs = contexts(G, IDS)
    seen = []

    def watch(pid, step, ex, incoming):
        for frames in incoming.values():
            seen.extend((f.kind, len(f.payload)) for f in frames)

    def party(me):
        return (yield from broadcast(ctxs[me], 5, 1, IDS, ["CP1"], {"CP1": payload} if me == "CP1" else {}))

    net = SimNet()
    res = net.run({i: party(i) for i in IDS}, on_step=watch)
    assert all(r == {"CP1": Delivered(payload)} for r in res.values())
    assert (MsgType.DS_SEND, 5000) in seen
    assert all(n == 32 for kind, n in seen if kind == MsgType.DS_DIGEST)
    assert any(kind == MsgType.DS_DIGEST for kind, _ in seen)
    assert all(kind != MsgType.FILL for kind, _ in seen)


def test_digest_relay_triggers_fill(G):
    # CP1 sends the full payload to CP2 only; others learn the digest from
    # CP2's relay and fetch the payload with a nack
    ctxs = contexts(G, IDS)

    def party(me):
        mine = {"CP1": {"CP2": b"data", "CP3": None, "CP4": None}} if me == "CP1" else {}
        return (yield from broadcast(ctxs[me], 5, 1, IDS, ["CP1"], mine))

    res = run_parties({i: party(i) for i in IDS})
    assert all(r == {"CP1": Delivered(b"data")} for r in res.values())
    assert ctxs["CP2"].stats.fills_sent >= 1


def test_cross_round_frames_ignored(G):
    ctxs = contexts(G, IDS[:3])

    def party(me, rnd):
        mine = {"CP1": b"x"} if me == "CP1" else {}
        return (yield from broadcast(ctxs[me], 5, rnd, IDS[:3], ["CP1"], mine))

    # the broadcaster signs for round 2 while the others listen in round 1
    res = run_parties({"CP1": party("CP1", 2), "CP2": party("CP2", 1), "CP3": party("CP3", 1)})
    assert res["CP2"] == res["CP3"] == {"CP1": Blame("CP1", MISSING)}


@pytest.mark.parametrize("seed", range(40))
def test_randomized_byzantine(G, seed):
    scenario = byzantine.random_scenario(seed)
    assert byzantine.check_scenario(scenario, byzantine.run_scenario(G, scenario)) == []


def test_coalition_late_injection_consistent(G):
    # two corrupt parties inject a fresh chain in the last round they can
    sc = byzantine.Scenario(("CP1", "CP2", "CP3", "CP4"), ("CP1",), {"CP1": byzantine.Plan(), "CP2": byzantine.Plan()},
                            {"CP1": b"orig"}, seed=1)
    sc.corrupt["CP1"].injections = [byzantine.Injection(2, "CP1", b"late", ("CP3",))]
    results = byzantine.run_scenario(G, sc)
    outs = [r[0]["CP1"] for r in results.values()]
    assert outs[0] == outs[1]


def test_harness_detects_short_broadcast(G, monkeypatch):
    class OneRound(DolevStrong):
        def __init__(self, *a, **k):
            super().__init__(*a, **k)
            self.n_rounds = 1

    monkeypatch.setattr(byzantine, "DolevStrong", OneRound)
    bad = sum(bool(byzantine.check_scenario(sc, byzantine.run_scenario(G, sc)))
              for sc in map(byzantine.random_scenario, range(100)))
    assert bad > 0
