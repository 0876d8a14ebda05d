"""Maintenance policy baselines and Monte Carlo cost distributions.

Three reference policies bracket the detector: reactive (pay every
failure), random inspection plans, and the maximal-savings bound (every
failure caught at full lead). The Monte Carlo helpers build per-turbine and
fleet cost distributions; sub-streams are derived from (seed, sample,
turbine) counters so results do not depend on evaluation order.
"""

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .costs import score_alarms
from .detect import run_cusum
from .errors import EmptyDistributionError

ONE_DAY = timedelta(days=1)


@dataclass(frozen=True)
class InspectionPlan:
    """Sorted inspection dates for one turbine."""

    turbine: str
    dates: tuple

    def __post_init__(self):
        if list(self.dates) != sorted(self.dates):
            raise ValueError("inspection dates must be sorted ascending")


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float


def summarize(samples):
    """Mean, population std, min and linear-interpolation quartiles."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("cannot summarize an empty sample set")
    q1, median, q3 = np.percentile(samples, [25.0, 50.0, 75.0])
    return SummaryStats(
        mean=float(samples.mean()),
        std=float(samples.std()),
        min=float(samples.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
    )


@dataclass(frozen=True)
class CostDistribution:
    """Sampled policy costs for one turbine (or the fleet) plus summary."""

    turbine: str
    seed: int
    samples: np.ndarray
    n_tp: np.ndarray
    n_fp: np.ndarray
    n_fn: np.ndarray
    mean_dt: np.ndarray
    stats: SummaryStats
    draws: tuple = None     # per-sample h value or plan hash; None for fleet

    def __post_init__(self):
        n = self.samples.size
        for name in ("n_tp", "n_fp", "n_fn", "mean_dt"):
            if getattr(self, name).size != n:
                raise ValueError("diagnostic arrays must match sample count")
        if self.draws is not None and len(self.draws) != n:
            raise ValueError("draw labels must match sample count")
        for name in ("samples", "n_tp", "n_fp", "n_fn", "mean_dt"):
            getattr(self, name).setflags(write=False)


def _distribution(turbine, seed, samples, n_tp, n_fp, n_fn, mean_dt,
                  draws=None):
    return CostDistribution(
        turbine=turbine, seed=seed, samples=samples,
        n_tp=n_tp, n_fp=n_fp, n_fn=n_fn, mean_dt=mean_dt,
        stats=summarize(samples), draws=draws,
    )


def _real_failures(failures, period):
    return [f for f in failures
            if not f.synthetic and period.contains(f.at)]


def reactive_cost(failures, period, rules):
    """Cost of fixing every failure after the fact: fn_cost each."""
    return rules.fn_cost * len(_real_failures(failures, period))


def maximal_savings(failures, period, rules):
    """Every failure caught at full lead, no false alarms."""
    return -rules.tp_rate * len(_real_failures(failures, period))


def truncated_savings_bound(failures, period, rules):
    """Maximal savings with lead times capped by the period start.

    A failure d days into the period cannot be preceded by more than
    floor(d) days of warning; failures inside the exclusive lower window
    cannot be caught at all and cost a miss even in the best case.
    """
    bound = 0.0
    for f in _real_failures(failures, period):
        avail = min(rules.horizon, math.floor((f.at - period.begin) / ONE_DAY))
        if avail > rules.window[0]:
            bound -= rules.tp_rate * avail / rules.horizon
        else:
            bound += f.fn_cost
    return bound


def _stream(seed, *path):
    """Counter-based sub-stream: same numbers regardless of run order."""
    entropy = (seed,) + path
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=entropy)))


def span_days(span):
    """Whole days available for inspection draws in a span."""
    return math.floor((span.end - span.begin) / ONE_DAY)


def sample_random_plan(rng, span, n_dates=12, turbine=""):
    """Draw n distinct whole-day inspection dates uniformly over the span."""
    if n_dates < 0:
        raise ValueError("n_dates must be non-negative")
    days = span_days(span)
    if n_dates > days:
        raise ValueError(
            f"cannot draw {n_dates} distinct days from a {days}-day span"
        )
    offsets = np.sort(rng.choice(days, size=n_dates, replace=False))
    dates = tuple(span.begin + int(d) * ONE_DAY for d in offsets)
    return InspectionPlan(turbine=turbine, dates=dates)


def score_inspection_plan(plan, failures, period, rules):
    """Treat inspections as alarms and score them; out-of-period dates are
    ignored by the scorer."""
    return score_alarms(plan.dates, failures, rules, period).cost


def _collect(n_samples, score_fn):
    samples = np.empty(n_samples)
    n_tp = np.empty(n_samples, dtype=np.int64)
    n_fp = np.empty(n_samples, dtype=np.int64)
    n_fn = np.empty(n_samples, dtype=np.int64)
    mean_dt = np.empty(n_samples)
    draws = []
    for i in range(n_samples):
        score, label = score_fn(i)
        samples[i] = score.cost
        n_tp[i] = score.n_tp
        n_fp[i] = score.n_fp
        n_fn[i] = score.n_fn
        mean_dt[i] = score.mean_dt
        draws.append(label)
    return samples, n_tp, n_fp, n_fn, mean_dt, tuple(draws)


def _fleet_distribution(seed, per_turbine, turbines, n_samples):
    """Sum per-turbine samples after an independent shuffle per turbine."""
    total = np.zeros(n_samples)
    tp = np.zeros(n_samples, dtype=np.int64)
    fp = np.zeros(n_samples, dtype=np.int64)
    fn = np.zeros(n_samples, dtype=np.int64)
    dt_sum = np.zeros(n_samples)
    for k, turbine in enumerate(turbines):
        dist = per_turbine[turbine]
        perm = _stream(seed, k).permutation(n_samples)
        total += dist.samples[perm]
        tp += dist.n_tp[perm]
        fp += dist.n_fp[perm]
        fn += dist.n_fn[perm]
        dt_sum += np.where(dist.n_tp[perm] > 0,
                           dist.mean_dt[perm] * dist.n_tp[perm], 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_dt = np.where(tp > 0, dt_sum / tp, np.nan)
    return _distribution("fleet", seed, total, tp, fp, fn, mean_dt)


def plan_hash(plan):
    """Short stable identifier for an inspection plan's dates."""
    text = "|".join(d.isoformat() for d in plan.dates)
    return hashlib.blake2s(text.encode(), digest_size=6).hexdigest()


def monte_carlo_random(seed, failures_by_turbine, period, rules, span,
                       n_samples=10000, n_dates=12):
    """Random-inspection policy: each sample draws a fresh plan per turbine.

    Plans cover the full span; only in-period inspections are scored.
    Returns (per-turbine distributions, fleet distribution), keyed and
    sub-seeded in sorted turbine order.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    turbines = sorted(failures_by_turbine)
    per_turbine = {}
    for k, turbine in enumerate(turbines):
        failures = failures_by_turbine[turbine]

        def draw(i, turbine=turbine, k=k, failures=failures):
            rng = _stream(seed, i, k)
            plan = sample_random_plan(rng, span, n_dates, turbine)
            return score_alarms(plan.dates, failures, rules, period), \
                plan_hash(plan)

        samples, tp, fp, fn, mdt, draws = _collect(n_samples, draw)
        per_turbine[turbine] = _distribution(turbine, seed, samples, tp, fp,
                                             fn, mdt, draws)
    fleet = _fleet_distribution(seed, per_turbine, turbines, n_samples)
    return per_turbine, fleet


def monte_carlo_model(seed, dist, residuals_by_turbine, failures_by_turbine,
                      period, rules, n_samples=10000,
                      wait_days=2, baseline_days=2):
    """Detector policy: each sample draws a threshold per turbine from the
    threshold distribution and runs the alarm engine with it.

    Scores are memoized per distinct threshold, so the cost is bounded by
    the distribution support rather than the sample count.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if dist.h_grid.size == 0:
        raise EmptyDistributionError("threshold distribution has no support")
    turbines = sorted(residuals_by_turbine)
    per_turbine = {}
    for k, turbine in enumerate(turbines):
        residuals = residuals_by_turbine[turbine]
        failures = failures_by_turbine.get(turbine, [])
        cache = {}

        def draw(i, residuals=residuals, failures=failures, k=k,
                 cache=cache):
            rng = _stream(seed, i, k)
            idx = int(rng.choice(dist.h_grid.size, p=dist.mass))
            if idx not in cache:
                h = float(dist.h_grid[idx])
                _, alarms = run_cusum(residuals, failures, h, period,
                                      wait_days=wait_days,
                                      baseline_days=baseline_days)
                cache[idx] = score_alarms(alarms, failures, rules, period)
            return cache[idx], repr(float(dist.h_grid[idx]))

        samples, tp, fp, fn, mdt, draws = _collect(n_samples, draw)
        per_turbine[turbine] = _distribution(turbine, seed, samples, tp, fp,
                                             fn, mdt, draws)
    fleet = _fleet_distribution(seed, per_turbine, turbines, n_samples)
    return per_turbine, fleet


def samples_to_csv(per_turbine, fleet=None, out=None):
    """Per-sample export: sample id, turbine, draw label, cost, counts."""
    buffer = out if out is not None else io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["sample", "turbine", "draw", "cost",
                     "n_tp", "n_fp", "n_fn", "mean_dt"])

    def rows(dist):
        labels = dist.draws if dist.draws is not None \
            else [""] * dist.samples.size
        for i in range(dist.samples.size):
            mdt = dist.mean_dt[i]
            writer.writerow([
                i, dist.turbine, labels[i], repr(float(dist.samples[i])),
                int(dist.n_tp[i]), int(dist.n_fp[i]), int(dist.n_fn[i]),
                "" if math.isnan(mdt) else repr(float(mdt)),
            ])

    for turbine in sorted(per_turbine):
        rows(per_turbine[turbine])
    if fleet is not None:
        rows(fleet)
    if out is None:
        return buffer.getvalue()
    return None
