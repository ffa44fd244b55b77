"""In-process sessions: every party on one SimNet, seeded end to end."""

from __future__ import annotations

import random
import socket
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..broadcast.signatures import SigningKey
from ..group import get_group
from ..transport.simnet import Fault, SimNet
from ..transport.sockets import PeerInfo, SocketTransport
from .common import VerifyCache
from .cp import CpConfig, Deviation, cp_party
from .dp import DpConfig, dp_party
from .oracle import NoiseSchedule
from .params import ProtocolParams


def party_rng(seed, party: str, purpose: str = "run") -> random.Random:
    return random.Random(f"{seed}:{purpose}:{party}")


def make_keys(params: ProtocolParams, seed=0) -> dict:
    group = get_group(params.group)
    return {p: SigningKey.generate(group, party_rng(seed, p, "sign")) for p in params.cps + params.dps}


def roster_of(keys: Mapping[str, SigningKey]) -> dict:
    return {p: k.public for p, k in keys.items()}


@dataclass
class SessionResult:
    outcomes: dict  # party id -> MeasurementResult | BlameReport | DpOutcome
    transcript: str
    frames: int
    bytes: int
    cp_ids: tuple = field(default=())

    def cp_outcomes(self, exclude: Iterable[str] = ()) -> dict:
        skip = set(exclude)
        return {p: self.outcomes[p] for p in self.cp_ids if p not in skip}

    def unanimous(self, exclude: Iterable[str] = ()):
        """The common outcome of the CPs not in ``exclude``; raises if they differ."""
        values = list(self.cp_outcomes(exclude).values())
        if any(v != values[0] for v in values[1:]):
            raise AssertionError(f"CPs disagree: {values}")
        return values[0]


def run_session(params: ProtocolParams, observations: Mapping[str, Iterable[int]] | None = None, seed=0,
                noise_seed=None, deviations: Mapping[str, Deviation] | None = None,
                dp_deviations: Mapping[str, str] | None = None, faults: Iterable[Fault] = (),
                keys: Mapping[str, SigningKey] | None = None, share_caches: bool = True, on_step=None,
                on_state=None) -> SessionResult:
    """Run one full session.  ``observations`` maps DP id to observed bins.

    With ``noise_seed`` the CPs take their noise swap bits from a
    :class:`NoiseSchedule`, which makes the result comparable to the oracle.
    ``on_state(dp, stage, snapshot)`` receives serialized DP state.
    """
    observations = observations or {}
    deviations = deviations or {}
    dp_deviations = dp_deviations or {}
    keys = dict(keys) if keys is not None else make_keys(params, seed)
    roster = roster_of(keys)
    schedule = NoiseSchedule(noise_seed) if noise_seed is not None else None
    vcache = VerifyCache() if share_caches else None
    sig_cache = {} if share_caches else None

    parties = {}
    for cp in params.cps:
        cfg = CpConfig(params, cp, keys[cp], roster, party_rng(seed, cp), schedule, deviations.get(cp),
                       vcache, sig_cache if share_caches else None)
        parties[cp] = cp_party(cfg)
    for dp in params.dps:
        hook = None
        if on_state is not None:
            hook = (lambda stage, snap, dp=dp: on_state(dp, stage, snap))
        cfg = DpConfig(params, dp, keys[dp], roster, party_rng(seed, dp), list(observations.get(dp, ())),
                       dp_deviations.get(dp), hook)
        parties[dp] = dp_party(cfg)

    net = SimNet(faults, seed)
    results = net.run(parties, on_step)
    return SessionResult(results, net.transcript_digest(), net.frames_delivered, net.bytes_delivered, params.cps)


def free_ports(count: int, host: str = "127.0.0.1") -> list:
    socks = []
    try:
        for _ in range(count):
            s = socket.socket()
            s.bind((host, 0))
            socks.append(s)
        return [s.getsockname()[1] for s in socks]
    finally:
        for s in socks:
            s.close()


def run_loopback_session(params: ProtocolParams, observations: Mapping[str, Iterable[int]] | None = None, seed=0,
                         noise_seed=None, keys: Mapping[str, SigningKey] | None = None, deadline: float = 30.0,
                         host: str = "127.0.0.1") -> dict:
    """The same session as :func:`run_session`, but each party runs in its own
    thread and talks over real TCP links on ``host``.  Returns outcomes."""
    observations = observations or {}
    group = get_group(params.group)
    keys = dict(keys) if keys is not None else make_keys(params, seed)
    ids = params.cps + params.dps
    ports = free_ports(len(ids), host)
    roster = {p: PeerInfo(p, "cp" if p in params.cps else "dp", host, port, keys[p].public)
              for p, port in zip(ids, ports)}
    public = roster_of(keys)
    schedule = NoiseSchedule(noise_seed) if noise_seed is not None else None

    transports = {p: SocketTransport(group, params.session, p, keys[p], roster, deadline) for p in ids}
    for t in transports.values():
        t.listen()
    results, errors = {}, {}

    def work(p: str) -> None:
        try:
            t = transports[p]
            t.connect()
            if p in params.cps:
                gen = cp_party(CpConfig(params, p, keys[p], public, party_rng(seed, p), schedule))
            else:
                gen = dp_party(DpConfig(params, p, keys[p], public, party_rng(seed, p),
                                        list(observations.get(p, ()))))
            results[p] = t.run(gen)
        except Exception as exc:  # reported to the caller below
            errors[p] = exc

    threads = [threading.Thread(target=work, args=(p,), name=p) for p in ids]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        p, exc = sorted(errors.items())[0]
        raise RuntimeError(f"{p} failed: {exc!r}") from exc
    return results
