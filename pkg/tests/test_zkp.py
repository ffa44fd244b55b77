import random

import pytest

from psc.broadcast.dolev_strong import broadcast
from psc.codec import Reader
from psc.elgamal import Ciphertext, encrypt
from psc.group import L, DecodeError
from psc.zkp.commitments import commit, open_commitment, verify_opening, Opening
from psc.zkp.context import fs_context
from psc.zkp.dl import DlProof, extract, prove_dl, verify_dl
from psc.zkp.interactive import INVALID, DlSigma, RrdBatchSigma, coin_flip, prove_interactively
from psc.zkp.pair_shuffle import PairShuffleProof, prove_pair_shuffle, shuffle_pair, verify_pair_shuffle
from psc.zkp.rrd import (RrdBatchProof, RrdProof, RrdStatement, SameChallenge, extract_rrd, fork_rrd, prove_rrd,
                         prove_rrd_batch, verify_rrd, verify_rrd_batch)
from psc.zkp.shuffle import LengthMismatch, ShuffleProof, prove_shuffle, random_permutation, shuffle, verify_shuffle

from .helpers import contexts, flip_byte, rrd_instance, run_parties

CTX = fs_context(b"s" * 16, "Shuffling", "CP1", 0)


def rejects(decode, verify, data):
    try:
        proof = decode(data)
    except (DecodeError, ValueError):
        return True
    return not verify(proof)


def test_fs_context_separates_fields():
    base = fs_context(b"s", "RRD", "CP1", 0)
    assert base != fs_context(b"t", "RRD", "CP1", 0)
    assert base != fs_context(b"s", "KeyGen", "CP1", 0)
    assert base != fs_context(b"s", "RRD", "CP2", 0)
    assert base != fs_context(b"s", "RRD", "CP1", 1)
    assert fs_context(b"s", "RRD", "CP1", 0, b"x") != fs_context(b"s", "RRD", "CP1x", 0)


# -- discrete log ------------------------------------------------------------------

def test_dl_complete_and_bound(G, rng):
    for _ in range(50):
        x = G.random_scalar(rng)
        Y = G.base_exp(x)
        p = prove_dl(G, x, Y, CTX, rng)
        assert verify_dl(G, Y, p, CTX)
        assert verify_dl(G, Y, DlProof.decode(G, p.encode(G)), CTX)
        assert not verify_dl(G, G.mul(Y, G.generator), p, CTX)
        assert not verify_dl(G, Y, p, CTX + b"!")


def test_dl_wrong_witness_rejected(G, rng):
    x = G.random_scalar(rng)
    Y = G.base_exp(x)
    assert not verify_dl(G, Y, prove_dl(G, x + 1, Y, CTX, rng), CTX)


def test_dl_mutations_rejected(G, rng):
    x = G.random_scalar(rng)
    Y = G.base_exp(x)
    enc = prove_dl(G, x, Y, CTX, rng).encode(G)
    for _ in range(100):
        assert rejects(lambda d: DlProof.decode(G, d), lambda p: verify_dl(G, Y, p, CTX), flip_byte(enc, rng))


def test_dl_extraction(G, rng):
    x = G.random_scalar(rng)
    c1, c2 = 11, 29
    t = G.random_scalar(rng)
    assert extract(G, c1, (t + c1 * x) % L, c2, (t + c2 * x) % L) == x


# -- RRD ---------------------------------------------------------------------------------

@pytest.mark.parametrize("m,j", [(1, 0), (3, 0), (3, 2), (5, 4)])
def test_rrd_complete(G, m, j):
    rng = random.Random(m * 10 + j)
    for msg in (0, 7):
        st, w = rrd_instance(G, rng, m, j, msg)
        p = prove_rrd(G, st, w, CTX, rng)
        assert verify_rrd(G, st, p, CTX)
        assert verify_rrd(G, st, RrdProof.decode(G, p.encode(G)), CTX)


def test_rrd_wrong_share_rejected(G, rng):
    st, w = rrd_instance(G, rng)
    bad = type(w)(w.r, w.sigma, w.x + 1)
    assert not verify_rrd(G, st, prove_rrd(G, st, bad, CTX, rng), CTX)


def test_rrd_wrong_statement_rejected(G, rng):
    st, w = rrd_instance(G, rng)
    p = prove_rrd(G, st, w, CTX, rng)
    fields = ("A", "B", "alpha", "beta", "Y", "y_j")
    for name in fields:
        vals = {f: getattr(st, f) for f in fields}
        vals[name] = G.mul(vals[name], G.generator)
        assert not verify_rrd(G, RrdStatement(**vals), p, CTX)
    assert not verify_rrd(G, st, p, fs_context(b"s" * 16, "RRD", "CP2", 0))


def test_rrd_mutations_rejected(G, rng):
    st, w = rrd_instance(G, rng)
    enc = prove_rrd(G, st, w, CTX, rng).encode(G)
    for _ in range(100):
        assert rejects(lambda d: RrdProof.decode(G, d), lambda p: verify_rrd(G, st, p, CTX), flip_byte(enc, rng))


def test_rrd_extractor(G, rng):
    for _ in range(20):
        st, w = rrd_instance(G, rng, msg=rng.randrange(3))
        c1, c2 = G.random_scalar(rng), G.random_scalar(rng)
        p1, p2 = fork_rrd(G, st, w, c1, c2, rng)
        assert extract_rrd(G, p1, p2) == w


def test_rrd_extractor_same_challenge(G, rng):
    st, w = rrd_instance(G, rng)
    p1, p2 = fork_rrd(G, st, w, 5, 5, rng)
    with pytest.raises(SameChallenge):
        extract_rrd(G, p1, p2)
    other, _ = fork_rrd(G, st, w, 5, 6, rng)
    with pytest.raises(ValueError):
        extract_rrd(G, p1, other)


def test_rrd_batch(G, rng):
    pairs = [rrd_instance(G, rng, msg=i % 2) for i in range(6)]
    sts, ws = [p[0] for p in pairs], [p[1] for p in pairs]
    proof = prove_rrd_batch(G, sts, ws, CTX, rng)
    assert verify_rrd_batch(G, sts, proof, CTX)
    decoded = RrdBatchProof.read(G, Reader(proof.encode(G)))
    assert verify_rrd_batch(G, sts, decoded, CTX)
    assert not verify_rrd_batch(G, sts[:-1], proof, CTX)
    assert not verify_rrd_batch(G, sts[1:] + sts[:1], proof, CTX)
    bad = list(ws)
    bad[3] = type(ws[3])(ws[3].r + 1, ws[3].sigma, ws[3].x)
    assert not verify_rrd_batch(G, sts, prove_rrd_batch(G, sts, bad, CTX, rng), CTX)


# -- pair shuffle -------------------------------------------------------------------------------

def pair_instance(G, rng, swap):
    y = G.base_exp(G.random_scalar(rng))
    inp = (encrypt(G, y, 0, G.random_scalar(rng)), encrypt(G, y, 1, G.random_scalar(rng)))
    s = (G.random_scalar(rng), G.random_scalar(rng))
    return y, inp, shuffle_pair(G, y, inp, swap, s), s


@pytest.mark.parametrize("swap", [False, True])
def test_pair_shuffle_complete(G, rng, swap):
    for _ in range(20):
        y, inp, out, s = pair_instance(G, rng, swap)
        p = prove_pair_shuffle(G, inp, out, swap, s, y, CTX, rng)
        assert verify_pair_shuffle(G, inp, out, p, y, CTX)
        assert verify_pair_shuffle(G, inp, out, PairShuffleProof.decode(G, p.encode(G)), y, CTX)


def test_pair_shuffle_rejects_non_permutation(G, rng):
    y, inp, _, s = pair_instance(G, rng, False)
    # both outputs re-encrypt the first input
    out = shuffle_pair(G, y, (inp[0], inp[0]), False, s)
    for swap in (False, True):
        assert not verify_pair_shuffle(G, inp, out, prove_pair_shuffle(G, inp, out, swap, s, y, CTX, rng), y, CTX)


def test_pair_shuffle_mutations_rejected(G, rng):
    y, inp, out, s = pair_instance(G, rng, True)
    enc = prove_pair_shuffle(G, inp, out, True, s, y, CTX, rng).encode(G)
    verify = lambda p: verify_pair_shuffle(G, inp, out, p, y, CTX)
    for _ in range(100):
        assert rejects(lambda d: PairShuffleProof.decode(G, d), verify, flip_byte(enc, rng))
    p = PairShuffleProof.decode(G, enc)
    assert not verify_pair_shuffle(G, out, inp, p, y, CTX)
    assert not verify_pair_shuffle(G, inp, out, p, y, CTX + b"x")


def test_pair_shuffle_hides_swap_bit(G):
    # both branches produce the same transcript shape and the real branch is
    # never inferable from the encoding layout or the challenge split
    rng = random.Random(7)
    first_branch_bigger = {False: 0, True: 0}
    for i in range(200):
        swap = bool(i % 2)
        y, inp, out, s = pair_instance(G, rng, swap)
        p = prove_pair_shuffle(G, inp, out, swap, s, y, CTX, rng)
        enc = p.encode(G)
        assert len(enc) == len(prove_pair_shuffle(G, inp, out, swap, s, y, CTX, rng).encode(G))
        c0 = int.from_bytes(enc[1 + 8 * 32:1 + 9 * 32], "little")
        c1 = int.from_bytes(enc[1 + 9 * 32:1 + 10 * 32], "little")
        first_branch_bigger[swap] += c0 > c1
    # under either bit the split is uniform, about 50 of 100
    for count in first_branch_bigger.values():
        assert 30 <= count <= 70


# -- general shuffle ---------------------------------------------------------------------------

def shuffle_instance(G, rng, n):
    y = G.base_exp(G.random_scalar(rng))
    inp = [encrypt(G, y, rng.randrange(2), G.random_scalar(rng)) for _ in range(n)]
    perm = random_permutation(n, rng)
    s = [G.random_scalar(rng) for _ in range(n)]
    return y, inp, shuffle(G, y, inp, perm, s), perm, s


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_shuffle_complete(G, rng, n):
    y, inp, out, perm, s = shuffle_instance(G, rng, n)
    p = prove_shuffle(G, inp, out, perm, s, y, CTX, rng)
    assert verify_shuffle(G, inp, out, p, y, CTX)
    assert verify_shuffle(G, inp, out, ShuffleProof.decode(G, p.encode(G)), y, CTX)


def test_shuffle_rejects_replaced_output(G, rng):
    y, inp, out, perm, s = shuffle_instance(G, rng, 6)
    p = prove_shuffle(G, inp, out, perm, s, y, CTX, rng)
    forged = list(out)
    forged[2] = encrypt(G, y, 1, 5)
    assert not verify_shuffle(G, inp, forged, p, y, CTX)
    assert not verify_shuffle(G, inp, out[1:] + out[:1], p, y, CTX)
    assert not verify_shuffle(G, inp, out, p, y, CTX + b"x")
    # a proof for a non-permutation (duplicated input) cannot be made to verify
    dup = shuffle(G, y, inp, [0] * 6, s)
    assert not verify_shuffle(G, inp, dup, prove_shuffle(G, inp, dup, perm, s, y, CTX, rng), y, CTX)


def test_shuffle_mutations_rejected(G, rng):
    y, inp, out, perm, s = shuffle_instance(G, rng, 4)
    enc = prove_shuffle(G, inp, out, perm, s, y, CTX, rng).encode(G)
    for _ in range(100):
        assert rejects(lambda d: ShuffleProof.decode(G, d), lambda p: verify_shuffle(G, inp, out, p, y, CTX),
                       flip_byte(enc, rng))


def test_shuffle_length_mismatch(G, rng):
    y, inp, out, perm, s = shuffle_instance(G, rng, 4)
    p = prove_shuffle(G, inp, out, perm, s, y, CTX, rng)
    with pytest.raises(LengthMismatch):
        verify_shuffle(G, inp, out[:3], p, y, CTX)


def test_random_permutation_is_permutation(rng):
    for n in (0, 1, 2, 10, 100):
        assert sorted(random_permutation(n, rng)) == list(range(n))


# -- commitments ---------------------------------------------------------------------------------

def test_commitment_open_and_bind(rng):
    c = commit(b"hello", rng)
    op = open_commitment(c)
    assert verify_opening(c.digest, op)
    assert not verify_opening(c.digest, Opening(b"hellp", op.nonce))
    assert not verify_opening(c.digest, Opening(b"hello", flip_byte(op.nonce, rng)))
    assert not verify_opening(c.digest, Opening(b"hello", op.nonce[:31]))
    # hiding: same value, fresh nonce, different digest
    assert commit(b"hello", rng).digest != c.digest
    with pytest.raises(ValueError):
        open_commitment(type(c)(c.digest))


# -- interactive -------------------------------------------------------------------------------

IDS = ("CP1", "CP2", "CP3")


def test_coin_flip_agreement(G):
    ctxs = contexts(G, IDS)

    def party(me):
        return (yield from coin_flip(ctxs[me], 7, 0, IDS, 40, random.Random(me)))

    results = run_parties({i: party(i) for i in IDS})
    bits = {i: r[0] for i, r in results.items()}
    assert all(r[1] == {} for r in results.values())
    assert len(set(map(tuple, bits.values()))) == 1
    assert len(bits["CP1"]) == 40 and set(bits["CP1"]) <= {0, 1}


def test_coin_flip_blames_party_that_never_opens(G):
    ctxs = contexts(G, IDS)

    def honest(me):
        return (yield from coin_flip(ctxs[me], 7, 0, IDS, 16, random.Random(me)))

    def withholder(me):
        yield from broadcast(ctxs[me], 7, 0, IDS, IDS, {me: commit(b"\x00\x00").digest})
        yield from broadcast(ctxs[me], 7, 1, IDS, IDS, {})

    results = run_parties({"CP1": honest("CP1"), "CP2": honest("CP2"), "CP3": withholder("CP3")})
    for me in ("CP1", "CP2"):
        bits, blamed = results[me]
        assert bits is None and set(blamed) == {"CP3"}


def test_coin_flip_blames_bad_opening(G):
    ctxs = contexts(G, IDS)

    def honest(me):
        return (yield from coin_flip(ctxs[me], 7, 0, IDS, 16, random.Random(me)))

    def liar(me):
        c = commit(b"\x01\x02", random.Random(1))
        yield from broadcast(ctxs[me], 7, 0, IDS, IDS, {me: c.digest})
        yield from broadcast(ctxs[me], 7, 1, IDS, IDS, {me: c.opening.nonce + b"\x01\x03"})

    results = run_parties({"CP1": honest("CP1"), "CP2": honest("CP2"), "CP3": liar("CP3")})
    assert results["CP1"][1] == results["CP2"][1] == {"CP3": INVALID}


def run_interactive(G, sigmas, witnesses, cheaters=()):
    ctxs = contexts(G, IDS)

    def party(me):
        mine = witnesses.get(me)
        return (yield from prove_interactively(ctxs[me], 7, 0, IDS, sigmas, mine, reps=16, rng=random.Random(me)))

    return run_parties({i: party(i) for i in IDS})


def test_interactive_dl_accepts_honest_provers(G, rng):
    xs = {p: G.random_scalar(rng) for p in ("CP1", "CP2")}
    sigmas = {p: DlSigma(G, G.base_exp(x)) for p, x in xs.items()}
    witnesses = {p: DlSigma(G, G.base_exp(x), x) for p, x in xs.items()}
    assert run_interactive(G, sigmas, witnesses) == {i: {} for i in IDS}


def test_interactive_dl_blames_wrong_witness(G, rng):
    x = G.random_scalar(rng)
    sigmas = {"CP1": DlSigma(G, G.base_exp(x))}
    witnesses = {"CP1": DlSigma(G, G.base_exp(x), x + 1)}
    results = run_interactive(G, sigmas, witnesses)
    assert all(r == {"CP1": INVALID} for r in results.values())


def test_interactive_rrd_batch(G, rng):
    pairs = [rrd_instance(G, rng, msg=i % 2) for i in range(3)]
    sts, ws = tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)
    sigmas = {"CP2": RrdBatchSigma(G, sts)}
    assert run_interactive(G, sigmas, {"CP2": RrdBatchSigma(G, sts, ws)}) == {i: {} for i in IDS}
    wrong = ws[:2] + (type(ws[2])(ws[2].r, ws[2].sigma + 1, ws[2].x),)
    results = run_interactive(G, sigmas, {"CP2": RrdBatchSigma(G, sts, wrong)})
    assert all(r == {"CP2": INVALID} for r in results.values())


def test_ciphertext_decode_rejects_short(G):
    with pytest.raises(DecodeError):
        Ciphertext.decode(G, bytes(63))
