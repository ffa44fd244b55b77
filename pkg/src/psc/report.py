"""Accuracy experiments: repeated seeded sessions, CSV and a plot."""

from __future__ import annotations

import csv
import math
import random
import statistics
from dataclasses import dataclass
from pathlib import Path

from .protocol.blame import MeasurementResult
from .protocol.oracle import intersection_size, union_size
from .protocol.params import INTERSECTION, ProtocolParams, noise_std
from .protocol.session import run_session


@dataclass(frozen=True)
class AccuracyRun:
    seed: int
    truth: int
    output: int

    @property
    def error(self) -> int:
        return self.output - self.truth


@dataclass(frozen=True)
class AccuracySummary:
    runs: int
    n: int
    mean_error: float
    std_error: float
    expected_std: float
    mean_bound: float  # 4 standard errors of the mean

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean_error) <= self.mean_bound

    def std_ok(self, rel: float = 0.15) -> bool:
        return abs(self.std_error - self.expected_std) <= rel * self.expected_std


def random_observations(params: ProtocolParams, max_truth: int, rng: random.Random) -> dict:
    """Per-DP bin sets whose union has at most ``max_truth`` bins."""
    pool = rng.sample(range(params.b), min(max_truth, params.b))
    return {dp: sorted(rng.sample(pool, rng.randint(0, len(pool)))) for dp in params.dps}


def accuracy_runs(params: ProtocolParams, runs: int, seed: int = 0, max_truth: int = 200, progress=None) -> list:
    out = []
    for i in range(runs):
        rng = random.Random(f"{seed}:accuracy:{i}")
        obs = random_observations(params, max_truth, rng)
        sets = [obs[dp] for dp in params.dps]
        truth = intersection_size(sets, params.b) if params.mode == INTERSECTION else union_size(sets)
        res = run_session(params, obs, seed=f"{seed}:{i}").unanimous()
        if not isinstance(res, MeasurementResult):
            raise RuntimeError(f"honest run {i} ended in {res}")
        out.append(AccuracyRun(i, truth, res.noisy_count))
        if progress:
            progress(i + 1, runs)
    return out


def summarize(runs: list, n: int) -> AccuracySummary:
    errors = [r.error for r in runs]
    sd = noise_std(n)
    return AccuracySummary(len(errors), n, statistics.fmean(errors), statistics.stdev(errors), sd,
                           4 * sd / math.sqrt(len(errors)))


def write_csv(path: str | Path, runs: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "truth", "output", "error"])
        for r in runs:
            w.writerow([r.seed, r.truth, r.output, r.error])


def plot_errors(path: str | Path, runs: list, n: int) -> None:
    """Histogram of output - truth against the Bin(n, 1/2) - n/2 density."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    errors = [r.error for r in runs]
    sd = noise_std(n)
    fig, ax = plt.subplots(figsize=(6, 3.7))
    lo, hi = min(errors + [-3 * sd]), max(errors + [3 * sd])
    ax.hist(errors, bins=range(math.floor(lo), math.ceil(hi) + 2), density=True, color="0.7",
            edgecolor="0.4", label=f"{len(errors)} runs")
    xs = [lo + (hi - lo) * i / 200 for i in range(201)]
    ax.plot(xs, [math.exp(-x * x / (2 * sd * sd)) / (sd * math.sqrt(2 * math.pi)) for x in xs], "k-",
            label=f"normal, sd = {sd:.2f}")
    ax.set_xlabel("output - true count")
    ax.set_ylabel("density")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
