"""Shared fixtures for tests that run parties over the simulated network."""

import random

from psc.broadcast.dolev_strong import BroadcastContext
from psc.broadcast.signatures import SigningKey
from psc.elgamal import JointPublicKey, KeyShare, encrypt, rrd_step
from psc.transport.simnet import SimNet
from psc.zkp.rrd import RrdStatement, RrdWitness

SESSION = bytes(range(16))


def make_keys(group, ids, seed=0):
    rng = random.Random(seed)
    return {i: SigningKey.generate(group, rng) for i in ids}


def contexts(group, ids, seed=0):
    keys = make_keys(group, ids, seed)
    roster = {i: k.public for i, k in keys.items()}
    return {i: BroadcastContext(group, i, keys[i], roster, SESSION) for i in ids}


def run_parties(parties, faults=(), seed=0):
    return SimNet(faults, seed).run(parties)


def rrd_instance(group, rng, m=3, j=0, msg=0):
    """A genuine RRD step of CP ``j`` in an ``m``-CP session."""
    shares = [KeyShare.generate(group, f"CP{i}", rng) for i in range(m)]
    joint = JointPublicKey.combine(group, [s.public for s in shares])
    Y = joint.residual(group, j)
    before = encrypt(group, Y, msg, group.random_scalar(rng))
    sigma, r = group.random_scalar(rng), group.random_nonzero_scalar(rng)
    after = rrd_step(group, before, Y, shares[j].secret, sigma, r)
    return RrdStatement.of(before, after, Y, shares[j].public), RrdWitness(r, sigma, shares[j].secret)


def flip_byte(data, rng):
    out = bytearray(data)
    out[rng.randrange(len(out))] ^= 1 << rng.randrange(8)
    return bytes(out)
