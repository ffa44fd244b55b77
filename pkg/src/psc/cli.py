"""Command line interface.

Every verb prints single-line JSON on stdout; diagnostics go to stderr.
Exit codes: 0 result, 2 configuration or usage error, 3 blame.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import config as conf
from .broadcast.signatures import SigningKey
from .group import get_group
from .phases import Phase
from .protocol.blame import BlameReport, DpOutcome, MeasurementResult, to_json
from .protocol.cp import (BAD_KEY_SIGNATURE, EQUIVOCATION, IDENTITY_FIRST_COMPONENT, INVALID_PROOF, SILENCE,
                          WRONG_STATEMENT, CpConfig, Deviation, cp_party)
from .protocol.dp import DpConfig, dp_party
from .protocol.oracle import NoiseSchedule
from .protocol.params import InvalidParams, noise_bound, noise_size, noise_std
from .protocol.session import run_session
from .transport.sockets import AuthFailed, ConnectFailed, SocketTransport

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLAME = 3

log = logging.getLogger("psc")


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    if not isinstance(obj, str):
        obj = json.dumps(obj, separators=(",", ":"))
    print(obj, flush=True)


def _exit_for(outcome) -> int:
    if isinstance(outcome, BlameReport):
        return EXIT_BLAME
    if isinstance(outcome, DpOutcome) and outcome.status != "submitted":
        return EXIT_BLAME
    return EXIT_OK


# -- config plumbing ----------------------------------------------------------------

def _overrides(args) -> dict:
    out = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    return out


def _load(args) -> conf.Config:
    overrides = _overrides(args)
    if getattr(args, "config", None):
        cfg = conf.load_config(args.config, overrides=overrides)
    else:
        cfg = conf.load_profile(getattr(args, "profile", None) or "desk", overrides)
    plan = getattr(args, "fault_plan", None)
    if plan:
        conf.apply_plan(cfg, plan)
    return cfg


# -- verbs ----------------------------------------------------------------------------

def cmd_params(args) -> int:
    bound = noise_bound(args.epsilon, args.delta)
    n = args.n if args.n is not None else noise_size(args.epsilon, args.delta)
    if n % 2 or n < bound:
        raise InvalidParams(f"n must be even and >= {bound:.2f}, got {n}")
    _emit({"epsilon": args.epsilon, "delta": args.delta, "bound": round(bound, 4), "n": n,
           "std": round(noise_std(n), 4)})
    return EXIT_OK


def cmd_keygen(args) -> int:
    group = get_group(args.group)
    key = SigningKey.generate(group)
    try:
        secret, public = conf.write_key(args.out, key, args.group)
    except OSError as exc:
        raise conf.ConfigError(f"{args.out}: {exc.strerror}") from None
    _emit({"secret_file": str(secret), "public_file": str(public), "public_key": group.encode(key.public).hex()})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.transport != "sim":
        raise UsageError("simulate needs transport.kind: sim")
    res = run_session(cfg.params, cfg.observations, seed=cfg.seed, noise_seed=cfg.noise_seed,
                      deviations=cfg.deviations, dp_deviations=cfg.dp_deviations, faults=cfg.faults)
    honest = [cp for cp in cfg.params.cps if cp not in cfg.deviations]
    outcome = res.unanimous(exclude=cfg.deviations) if honest else res.outcomes[cfg.params.cps[0]]
    if args.verbose:
        for p in sorted(res.outcomes):
            log.info("%s: %s", p, to_json(res.outcomes[p]))
        if isinstance(outcome, MeasurementResult):
            log.info("timings: %s", {k: round(v, 3) for k, v in outcome.timings.items()})
    _emit(to_json(outcome))
    return _exit_for(outcome)


def _daemon_parts(args, role: str):
    cfg = _load(args)
    if cfg.transport != "socket":
        raise UsageError(f"{role} needs transport.kind: socket")
    me = args.me or cfg.me
    if me is None:
        raise UsageError("no party id: set 'me' in the config or pass --me")
    params = cfg.params
    if me not in (params.cps if role == "cp" else params.dps):
        raise UsageError(f"{me!r} is not a {role.upper()} on the roster")
    key_file = args.key or cfg.key_file
    if key_file is None:
        raise UsageError("no key file: set 'key_file' in the config or pass --key")
    key = conf.read_key(key_file)
    info = cfg.roster[me]
    if info.public != key.public:
        raise conf.ConfigError(f"{key_file}: key does not match the roster entry for {me}")
    group = get_group(params.group)
    transport = SocketTransport(group, params.session, me, key, cfg.roster, cfg.timeout, cfg.connect_timeout)
    public = {p: i.public for p, i in cfg.roster.items()}
    return cfg, me, key, public, transport


def _run_daemon(transport: SocketTransport, party) -> int:
    try:
        transport.connect()
    except (ConnectFailed, AuthFailed) as exc:
        transport.close()
        print(f"psc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outcome = transport.run(party)
    _emit(to_json(outcome))
    return _exit_for(outcome)


def cmd_cp(args) -> int:
    cfg, me, key, public, transport = _daemon_parts(args, "cp")
    schedule = NoiseSchedule(cfg.noise_seed) if cfg.noise_seed is not None else None
    party = cp_party(CpConfig(cfg.params, me, key, public, None, schedule, cfg.deviations.get(me),
                              collection_timeout=cfg.collection_timeout))
    return _run_daemon(transport, party)


def cmd_dp(args) -> int:
    cfg, me, key, public, transport = _daemon_parts(args, "dp")
    feed_path = args.feed or cfg.feed
    b = cfg.params.b
    if feed_path is None:
        observations = list(cfg.observations.get(me, ()))
    elif feed_path == "-":
        def observations():  # read at collection time, so a live feed can run until EOF
            return list(conf.read_feed(sys.stdin, b))
    else:
        try:
            with open(feed_path, encoding="utf-8") as fh:
                observations = list(conf.read_feed(fh, b))
        except OSError as exc:
            raise conf.ConfigError(f"{feed_path}: {exc.strerror}") from None
        except ValueError as exc:
            raise conf.ConfigError(f"{feed_path}: {exc}") from None
    party = dp_party(DpConfig(cfg.params, me, key, public, None, observations, cfg.dp_deviations.get(me),
                              collection_timeout=cfg.collection_timeout))
    return _run_daemon(transport, party)


# accountability matrix: (phase, deviation, expected evidence)
SCENARIOS = (
    [(ph, dev, ev) for ph in (Phase.KEYGEN, Phase.NOISE, Phase.SHUFFLE, Phase.RRD)
     for dev, ev in ((SILENCE, "MissingMessage"), (EQUIVOCATION, "Equivocation"),
                     (INVALID_PROOF, "InvalidProof"), (WRONG_STATEMENT, "WrongStatement"))]
    + [(Phase.RRD, IDENTITY_FIRST_COMPONENT, "IdentityFirstComponent"),
       (Phase.KEYGEN, BAD_KEY_SIGNATURE, "BadKeySignature")]
)


def scenario_name(phase: Phase, kind: str) -> str:
    return f"{kind.replace('_', '-')}-{phase.label.lower()}"


def cmd_scenarios(args) -> int:
    if args.list:
        for ph, kind, ev in SCENARIOS:
            _emit({"scenario": scenario_name(ph, kind), "phase": ph.label, "deviation": kind, "expected": ev})
        for plan in conf.bundled_plans():
            _emit({"fault_plan": plan})
        return EXIT_OK
    cfg = _load(args)
    cps = cfg.params.cps
    accused = args.accused or (cps[1] if len(cps) > 1 else cps[0])
    if accused not in cps:
        raise UsageError(f"{accused!r} is not a CP")
    failures = 0
    for ph, kind, ev in SCENARIOS:
        name = scenario_name(ph, kind)
        if args.only and name not in args.only:
            continue
        res = run_session(cfg.params, cfg.observations, seed=cfg.seed, noise_seed=cfg.noise_seed,
                          deviations={accused: Deviation(ph, kind)})
        try:
            outcome = res.unanimous(exclude=[accused])
            agreed = True
        except AssertionError:
            outcome, agreed = res.outcomes[[c for c in cps if c != accused][0]], False
        ok = (agreed and isinstance(outcome, BlameReport) and outcome.accused == (accused,)
              and outcome.evidence.value == ev and outcome.phase == ph.label)
        failures += not ok
        _emit({"scenario": name, "expected": {"accused": [accused], "phase": ph.label, "evidence": ev},
               "unanimous": agreed, "outcome": outcome.to_dict(), "pass": ok})
    return EXIT_OK if failures == 0 else 1


def cmd_accuracy(args) -> int:
    from .report import accuracy_runs, plot_errors, summarize, write_csv

    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(i, total):
        if args.verbose:
            log.info("run %d/%d", i, total)

    runs = accuracy_runs(cfg.params, args.runs, cfg.seed, args.max_truth, progress)
    s = summarize(runs, cfg.params.n)
    write_csv(out / "accuracy.csv", runs)
    plot_errors(out / "accuracy.png", runs, cfg.params.n)
    _emit({"runs": s.runs, "n": s.n, "mean_error": round(s.mean_error, 4), "std_error": round(s.std_error, 4),
           "expected_std": round(s.expected_std, 4), "csv": str(out / "accuracy.csv"),
           "plot": str(out / "accuracy.png")})
    return EXIT_OK


def cmd_schema(args) -> int:
    _emit(conf.schema())
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------

def _config_args(p: argparse.ArgumentParser, plans: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", "-c", help="YAML config file")
    src.add_argument("--profile", help="bundled profile: " + ", ".join(conf.bundled_profiles()))
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field, e.g. --set params.b=16 (repeatable)")
    if plans:
        p.add_argument("--fault-plan", help="bundled plan name or plan file: " + ", ".join(conf.bundled_plans()))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psc", description="Private set-union and set-intersection cardinality.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("params", help="noise size and standard deviation for (epsilon, delta)")
    p.add_argument("--epsilon", "-e", type=float, required=True)
    p.add_argument("--delta", "-d", type=float, required=True)
    p.add_argument("--n", type=int, help="check an explicit noise size instead")
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("keygen", help="write a long-term signing key pair")
    p.add_argument("out", help="path prefix; writes OUT.key and OUT.pub")
    p.add_argument("--group", default="ristretto255", choices=["ristretto255", "insecure-additive"])
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("simulate", help="run every party in-process")
    _config_args(p)
    p.set_defaults(fn=cmd_simulate)

    for role, fn in (("cp", cmd_cp), ("dp", cmd_dp)):
        p = sub.add_parser(role, help=f"run one {role.upper()} over TCP")
        _config_args(p)
        p.add_argument("--me", help="own party id")
        p.add_argument("--key", help="own secret key file")
        if role == "dp":
            p.add_argument("--feed", help="observation feed ('-' for stdin)")
        p.set_defaults(fn=fn)

    p = sub.add_parser("scenarios", help="run the CP deviation matrix")
    _config_args(p, plans=False)
    p.add_argument("--list", action="store_true", help="list scenarios and bundled fault plans")
    p.add_argument("--accused", help="the deviating CP (default: the second CP)")
    p.add_argument("--only", action="append", help="run only this scenario (repeatable)")
    p.set_defaults(fn=cmd_scenarios)

    p = sub.add_parser("accuracy", help="repeat honest sessions; write CSV and a plot of output - truth")
    _config_args(p, plans=False)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--max-truth", type=int, default=200, help="upper bound on the true count per run")
    p.add_argument("--out", default="accuracy-report")
    p.set_defaults(fn=cmd_accuracy)

    p = sub.add_parser("schema", help="print the config schema")
    p.set_defaults(fn=cmd_schema)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        return args.fn(args)
    except (conf.ConfigError, InvalidParams, UsageError) as exc:
        print(f"psc: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
