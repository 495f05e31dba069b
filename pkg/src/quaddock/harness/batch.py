"""Paired-seed Monte Carlo batches and their aggregate report."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from ..control import CONTROLLERS
from ..core import SimConfig, ValidationError
from .sim import TrialResult, run_tracking_trial, run_trial

MODES: dict[str, Callable[..., TrialResult]] = {"mission": run_trial, "tracking": run_tracking_trial}


@dataclass(frozen=True)
class BatchRow:
    """Aggregate outcome of one controller over a batch.

    Touchdown statistics cover docked trials only and are NaN when none
    docked. ``mean_r_ratio`` is the mean over trials of the peak ``r / d_s``.
    """

    controller: str
    terrain: str
    n_trials: int
    successes: int
    rate: float
    ci_low: float
    ci_high: float
    touchdown_mean: float
    touchdown_p50: float
    touchdown_p95: float
    time_to_dock_mean: float
    fov_violations: int
    faults: int
    mean_r_ratio: float


@dataclass(frozen=True)
class BatchReport:
    rows: tuple[BatchRow, ...]

    def row(self, controller: str) -> BatchRow:
        for r in self.rows:
            if r.controller == controller:
                return r
        raise KeyError(controller)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValidationError("n", f"need at least one trial, got {n}")
    ci = binomtest(successes, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(controller: str, terrain: str, results: Sequence[TrialResult]) -> BatchRow:
    n = len(results)
    k = sum(r.success for r in results)
    lo, hi = wilson_interval(k, n)
    td = np.array([r.touchdown_error for r in results if r.success and r.touchdown_error is not None])
    ttd = [r.time_to_dock for r in results if r.success and r.time_to_dock is not None]
    nan = float("nan")
    return BatchRow(
        controller=controller, terrain=terrain, n_trials=n, successes=k, rate=k / n, ci_low=lo, ci_high=hi,
        touchdown_mean=float(td.mean()) if td.size else nan,
        touchdown_p50=float(np.percentile(td, 50)) if td.size else nan,
        touchdown_p95=float(np.percentile(td, 95)) if td.size else nan,
        time_to_dock_mean=float(np.mean(ttd)) if ttd else nan,
        fov_violations=sum(r.fov_violation for r in results),
        faults=sum(r.fault_count for r in results),
        mean_r_ratio=float(np.mean([r.max_r_ratio for r in results])),
    )


def _run_one(args) -> TrialResult:
    fn_name, cfg, controller, terrain, seed = args
    return MODES[fn_name](cfg, controller, terrain, seed)


def run_batch(config: SimConfig, controllers: Sequence[str], terrain: str, n_trials: int,
              seed_base: int = 0, *, mode: str = "mission", jobs: int = 1,
              progress: Callable[[str, int], None] | None = None
              ) -> tuple[BatchReport, dict[str, list[TrialResult]]]:
    """Run ``n_trials`` per controller with paired seeds ``seed_base + i``.

    Every trial owns its world and random streams, so ``jobs > 1`` runs them
    in a process pool without changing any result. Simulation faults end a
    trial as Aborted and are never fatal to the batch.
    """
    if n_trials < 1:
        raise ValidationError("n_trials", f"must be >= 1, got {n_trials}")
    if mode not in MODES:
        raise ValidationError("mode", f"unknown mode {mode!r}; choose from {sorted(MODES)}")
    for c in controllers:
        if c not in CONTROLLERS:
            raise ValidationError("controller", f"unknown controller {c!r}; choose from {CONTROLLERS}")
    config.validate()
    tasks = [(mode, config, c, terrain, seed_base + i) for c in controllers for i in range(n_trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        flat = []
        for task in tasks:
            flat.append(_run_one(task))
            if progress is not None:
                progress(task[2], len(flat))
    results = {c: flat[i * n_trials:(i + 1) * n_trials] for i, c in enumerate(controllers)}
    report = BatchReport(tuple(summarize(c, terrain, results[c]) for c in controllers))
    return report, results


@dataclass(frozen=True)
class OrderingCheck:
    better: str
    worse: str
    gap: float
    inverted: bool          # worse strictly above better
    significant: bool       # inverted and the 95% intervals do not overlap


def ordering_checks(report: BatchReport, order: Sequence[str] = ("nftsmc_bf", "nftsmc", "smc", "pid")
                    ) -> list[OrderingCheck]:
    """Compare adjacent controllers of ``order`` (best first)."""
    out = []
    for a, b in zip(order, order[1:]):
        ra, rb = report.row(a), report.row(b)
        inverted = rb.rate > ra.rate
        out.append(OrderingCheck(a, b, ra.rate - rb.rate, inverted, inverted and rb.ci_low > ra.ci_high))
    return out


def ordering_holds(report: BatchReport, order: Sequence[str] = ("nftsmc_bf", "nftsmc", "smc", "pid")) -> bool:
    """True unless some adjacent pair is inverted beyond CI overlap."""
    return not any(c.significant for c in ordering_checks(report, order))
