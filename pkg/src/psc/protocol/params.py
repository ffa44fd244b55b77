"""Session parameters and binomial noise sizing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

UNION = "union"
INTERSECTION = "intersection"
FIAT_SHAMIR = "fiat-shamir"
INTERACTIVE = "interactive"


class InvalidParams(ValueError):
    pass


def noise_bound(epsilon: float, delta: float) -> float:
    """Minimum number of fair coins for (epsilon, delta)-DP: ``64 ln(2/delta) / epsilon^2``."""
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        raise InvalidParams(f"epsilon must be a positive number, got {epsilon!r}")
    if not (isinstance(delta, (int, float)) and 0 < delta < 1):
        raise InvalidParams(f"delta must lie in (0, 1), got {delta!r}")
    return 64.0 * math.log(2.0 / delta) / epsilon ** 2


def noise_size(epsilon: float, delta: float) -> int:
    """Smallest even integer at least :func:`noise_bound`."""
    n = math.ceil(noise_bound(epsilon, delta))
    return n + (n % 2)


def noise_std(n: int) -> float:
    """Standard deviation of ``Bin(n, 1/2)``."""
    return math.sqrt(n) / 2


def cp_ids(m: int) -> tuple:
    return tuple(f"CP{i}" for i in range(1, m + 1))


def dp_ids(d: int) -> tuple:
    return tuple(f"DP{i}" for i in range(1, d + 1))


@dataclass(frozen=True)
class ProtocolParams:
    b: int
    m: int
    d: int
    epsilon: float
    delta: float
    n: int
    mode: str = UNION
    session: bytes = bytes(16)
    cps: tuple = field(default=())
    dps: tuple = field(default=())
    group: str = "ristretto255"
    proof_mode: str = FIAT_SHAMIR
    repetitions: int = 40  # interactive proof instances

    def __post_init__(self) -> None:
        if not self.cps:
            object.__setattr__(self, "cps", cp_ids(self.m))
        if not self.dps:
            object.__setattr__(self, "dps", dp_ids(self.d))
        self.validate()

    @classmethod
    def create(cls, b: int, m: int, d: int, epsilon: float, delta: float, n: int | None = None,
               **kw) -> "ProtocolParams":
        if n is None:
            n = noise_size(epsilon, delta)
        return cls(b=b, m=m, d=d, epsilon=epsilon, delta=delta, n=n, **kw)

    def validate(self) -> None:
        for name in ("b", "m", "d"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InvalidParams(f"{name} must be an integer >= 1, got {v!r}")
        bound = noise_bound(self.epsilon, self.delta)
        if not isinstance(self.n, int) or self.n % 2 or self.n < bound:
            raise InvalidParams(f"n must be even and >= {bound:.2f}, got {self.n!r}")
        if self.mode not in (UNION, INTERSECTION):
            raise InvalidParams(f"mode must be {UNION!r} or {INTERSECTION!r}")
        if self.proof_mode not in (FIAT_SHAMIR, INTERACTIVE):
            raise InvalidParams(f"proof_mode must be {FIAT_SHAMIR!r} or {INTERACTIVE!r}")
        if len(self.session) != 16:
            raise InvalidParams("session id must be 16 bytes")
        if len(self.cps) != self.m or len(set(self.cps)) != self.m:
            raise InvalidParams("CP roster must list m distinct ids")
        if len(self.dps) != self.d or len(set(self.dps)) != self.d:
            raise InvalidParams("DP roster must list d distinct ids")
        if set(self.cps) & set(self.dps):
            raise InvalidParams("CP and DP ids must differ")
        if self.repetitions < 1:
            raise InvalidParams("repetitions must be >= 1")

    @property
    def width(self) -> int:
        """Length of the shuffled vector: noise slots plus bins."""
        return self.n + self.b
