"""Configuration files, fault plans, key files and observation feeds."""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .broadcast.signatures import SigningKey
from .group import DecodeError, get_group
from .phases import Phase
from .protocol.cp import Deviation
from .protocol.params import InvalidParams, ProtocolParams
from .transport.simnet import Fault
from .transport.sockets import DEFAULT_DEADLINE, PeerInfo

KEY_MAGIC = "psc-signing-key v1"


class ConfigError(ValueError):
    """Invalid configuration; the message names the file, field and line."""


def _bundled(name: str) -> str:
    return resources.files("psc.configs").joinpath(name).read_text(encoding="utf-8")


def schema() -> dict:
    return yaml.safe_load(_bundled("schema.yaml"))


def bundled_profiles() -> list:
    return sorted(p.name[:-5] for p in resources.files("psc.configs").iterdir()
                  if p.name.endswith(".yaml") and p.name != "schema.yaml")


def bundled_plans() -> list:
    return sorted(p.name[:-5] for p in resources.files("psc.configs.faults").iterdir() if p.name.endswith(".yaml"))


# -- locating errors -------------------------------------------------------------

def _line_of(node, path) -> int | None:
    """1-based line of the YAML node at ``path`` (or its nearest parent)."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
        line = node.start_mark.line + 1
    return line


def _where(source: str, root, path) -> str:
    dotted = ".".join(str(p) for p in path) or "<top>"
    line = _line_of(root, path)
    return f"{source}: {dotted}" + (f" (line {line})" if line else "")


def _parse(text: str, source: str):
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" (line {mark.line + 1})" if mark else ""
        raise ConfigError(f"{source}{at}: not valid YAML: {getattr(exc, 'problem', exc)}") from None
    return root, data if data is not None else {}


# -- config ----------------------------------------------------------------------

@dataclass
class Config:
    params: ProtocolParams
    seed: int = 0
    noise_seed: object = None
    transport: str = "sim"
    timeout: float = DEFAULT_DEADLINE
    connect_timeout: float = DEFAULT_DEADLINE
    collection_timeout: float | None = None
    roster: dict = field(default_factory=dict)  # id -> PeerInfo
    observations: dict = field(default_factory=dict)  # DP id -> list of bins
    deviations: dict = field(default_factory=dict)  # CP id -> Deviation
    dp_deviations: dict = field(default_factory=dict)
    faults: tuple = ()
    me: str | None = None
    key_file: str | None = None
    feed: str | None = None
    source: str = "<config>"


def load_config(path: str | Path | None = None, text: str | None = None, overrides: dict | None = None) -> Config:
    """Parse and validate a config.  ``overrides`` maps dotted field names
    (``params.b``, ``seed``, ...) to values applied before validation."""
    if text is None:
        source = str(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{source}: {exc.strerror}") from None
    else:
        source = str(path or "<config>")
    root, data = _parse(text, source)
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    for dotted, value in (overrides or {}).items():
        target = data
        *parents, leaf = dotted.split(".")
        for p in parents:
            target = target.setdefault(p, {})
        target[leaf] = value
    base = Path(path).parent if path else Path(".")
    return _build(data, root, source, base)


def load_profile(name: str, overrides: dict | None = None) -> Config:
    return load_config(f"{name}.yaml", _bundled(f"{name}.yaml"), overrides)


def _validate(data, root, source: str) -> None:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_where(source, root, list(e.absolute_path))}: {e.message}")


def _build(data: dict, root, source: str, base: Path) -> Config:
    _validate(data, root, source)
    p = dict(data["params"])
    if "session" in p:
        p["session"] = bytes.fromhex(p["session"])
    else:
        p["session"] = hashlib.sha256(f"psc-session:{data.get('seed', 0)}".encode()).digest()[:16]
    roster = _roster(data, root, source, base)
    if roster:
        p["cps"] = tuple(sorted(k for k, v in roster.items() if v.role == "cp"))
        p["dps"] = tuple(sorted(k for k, v in roster.items() if v.role == "dp"))
    try:
        params = ProtocolParams.create(**p)
    except InvalidParams as exc:
        raise ConfigError(f"{_where(source, root, ['params'])}: {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{_where(source, root, ['params'])}: {exc}") from None
    t = data.get("transport", {})
    cfg = Config(params, data.get("seed", 0), data.get("noise_seed"), t.get("kind", "sim"),
                 t.get("timeout", DEFAULT_DEADLINE), t.get("connect_timeout", DEFAULT_DEADLINE),
                 t.get("collection_timeout"), roster, me=data.get("me"), key_file=data.get("key_file"),
                 feed=data.get("feed"), source=source)
    cfg.observations = _observations(data, root, source, base, params, cfg.seed)
    plan = data.get("fault_plan")
    if plan is not None:
        apply_plan(cfg, plan, root, source, base)
    if cfg.me is not None and cfg.me not in params.cps + params.dps:
        raise ConfigError(f"{_where(source, root, ['me'])}: {cfg.me!r} is not on the roster")
    return cfg


def _roster(data, root, source, base) -> dict:
    entries = list(data.get("roster", []))
    where = ["roster"]
    if "roster_file" in data:
        rpath = base / data["roster_file"]
        try:
            entries += parse_roster_file(rpath.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{_where(source, root, ['roster_file'])}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConfigError(f"{rpath}: {exc}") from None
    group = get_group(data["params"].get("group", "ristretto255"))
    out = {}
    for i, e in enumerate(entries):
        host, _, port = e["address"].rpartition(":")
        try:
            public = group.decode(bytes.fromhex(e["public_key"]))
        except (DecodeError, ValueError):
            raise ConfigError(f"{_where(source, root, where + [i, 'public_key'])}: not a valid public key") from None
        if e["id"] in out:
            raise ConfigError(f"{_where(source, root, where + [i, 'id'])}: duplicate id {e['id']!r}")
        out[e["id"]] = PeerInfo(e["id"], e["role"], host, int(port), public)
    return out


def parse_roster_file(text: str) -> list:
    """Roster lines: ``<id> <cp|dp> <host:port> <public key hex>``; ``#`` starts a comment."""
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[1] not in ("cp", "dp") or ":" not in parts[2]:
            raise ValueError(f"line {n}: expected '<id> <cp|dp> <host:port> <public key hex>'")
        out.append({"id": parts[0], "role": parts[1], "address": parts[2], "public_key": parts[3]})
    return out


def _observations(data, root, source, base, params: ProtocolParams, seed) -> dict:
    out = {}
    for dp, spec in (data.get("observations") or {}).items():
        if dp not in params.dps:
            raise ConfigError(f"{_where(source, root, ['observations', dp])}: unknown DP {dp!r}")
        if isinstance(spec, dict):
            rng = random.Random(f"{seed}:observations:{dp}")
            out[dp] = sorted(rng.sample(range(params.b), min(spec["random"], params.b)))
        else:
            bad = [x for x in spec if x >= params.b]
            if bad:
                raise ConfigError(f"{_where(source, root, ['observations', dp])}: bin {bad[0]} outside [0, {params.b})")
            out[dp] = list(spec)
    for dp, fpath in (data.get("feeds") or {}).items():
        if dp not in params.dps:
            raise ConfigError(f"{_where(source, root, ['feeds', dp])}: unknown DP {dp!r}")
        try:
            with open(base / fpath, encoding="utf-8") as fh:
                out[dp] = sorted(set(out.get(dp, [])) | set(read_feed(fh, params.b)))
        except OSError as exc:
            raise ConfigError(f"{_where(source, root, ['feeds', dp])}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConfigError(f"{base / fpath}: {exc}") from None
    return out


def apply_plan(cfg: Config, plan, root=None, source: str | None = None, base: Path = Path(".")) -> None:
    """Merge a fault plan (bundled name, path or mapping) into ``cfg``."""
    source = source or cfg.source
    if isinstance(plan, str):
        if plan in bundled_plans():
            psource, text = f"faults/{plan}.yaml", resources.files("psc.configs.faults").joinpath(
                f"{plan}.yaml").read_text(encoding="utf-8")
        else:
            ppath = base / plan
            try:
                psource, text = str(ppath), ppath.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"{source}: fault plan {plan!r}: {exc.strerror}") from None
        proot, plan = _parse(text, psource)
        wrapped = {"params": {"b": 1, "m": 1, "d": 1, "epsilon": 1, "delta": 0.5}, "fault_plan": plan}
        _validate(wrapped, None, psource)
        root, source = proot, psource
        prefix = []
    else:
        prefix = ["fault_plan"]
    params = cfg.params
    for i, d in enumerate(plan.get("deviations", [])):
        if d["party"] not in params.cps:
            raise ConfigError(f"{_where(source, root, prefix + ['deviations', i, 'party'])}: "
                              f"{d['party']!r} is not a CP")
        cfg.deviations[d["party"]] = Deviation(Phase.from_label(d["phase"]), d["kind"])
    for i, d in enumerate(plan.get("dp_deviations", [])):
        if d["party"] not in params.dps:
            raise ConfigError(f"{_where(source, root, prefix + ['dp_deviations', i, 'party'])}: "
                              f"{d['party']!r} is not a DP")
        cfg.dp_deviations[d["party"]] = d["kind"]
    faults = list(cfg.faults)
    for d in plan.get("network", []):
        faults.append(Fault(d["party"], d["action"], int(Phase.from_label(d["phase"])) if "phase" in d else None,
                            d.get("step"), tuple(d["targets"]) if "targets" in d else None,
                            bytes.fromhex(d.get("payload_hex", ""))))
    cfg.faults = tuple(faults)


# -- observation feeds ---------------------------------------------------------------

def identifier_bin(identifier: str, b: int) -> int:
    """First ``ceil(lg b)`` bits of SHA-256 of the identifier, reduced mod ``b``
    when ``b`` is not a power of two.  Distinct identifiers may collide."""
    bits = max(1, math.ceil(math.log2(b))) if b > 1 else 0
    if bits == 0:
        return 0
    top = int.from_bytes(hashlib.sha256(identifier.encode("utf-8")).digest()[:8], "big") >> (64 - bits)
    return top % b


def read_feed(lines, b: int):
    """Yield bins from ``observe <identifier>`` lines; blank lines and ``#``
    comments are skipped, anything else raises ValueError."""
    for n, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        verb, _, ident = line.partition(" ")
        ident = ident.strip()
        if verb != "observe" or not ident:
            raise ValueError(f"line {n}: expected 'observe <identifier>', got {line!r}")
        yield identifier_bin(ident, b)


# -- key files -------------------------------------------------------------------------

def write_key(path: str | Path, key: SigningKey, group_name: str = "ristretto255") -> tuple:
    """Write ``<path>.key`` (secret) and ``<path>.pub``; returns both paths."""
    group = get_group(group_name)
    path = Path(path)
    secret, public = path.with_suffix(".key"), path.with_suffix(".pub")
    pub_hex = group.encode(key.public).hex()
    secret.write_text(f"{KEY_MAGIC}\n{group_name}\n{key.secret.to_bytes(32, 'little').hex()}\n{pub_hex}\n",
                      encoding="utf-8")
    secret.chmod(0o600)
    public.write_text(pub_hex + "\n", encoding="utf-8")
    return secret, public


def read_key(path: str | Path) -> SigningKey:
    """Load a secret key file, checking that its halves belong together."""
    try:
        lines = Path(path).read_text(encoding="utf-8").split()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if len(lines) != 5 or " ".join(lines[:2]) != KEY_MAGIC:
        raise ConfigError(f"{path}: not a psc signing key file")
    try:
        group = get_group(lines[2])
        secret = group.decode_scalar(bytes.fromhex(lines[3]))
        public = group.decode(bytes.fromhex(lines[4]))
    except (ValueError, DecodeError):
        raise ConfigError(f"{path}: malformed key material") from None
    if secret == 0 or group.base_exp(secret) != public:
        raise ConfigError(f"{path}: secret and public key do not match")
    return SigningKey(secret, public)
