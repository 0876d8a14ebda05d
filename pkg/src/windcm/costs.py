"""Alarm scoring under the operator's cost rules, cost-vs-threshold
profiles, and the profit-weighted threshold distribution.

Sign convention is loss-positive: detections subtract money, false alarms
and misses add it. An alarm is a true positive when it lands strictly more
than window.lower and at most window.upper whole days before the failure it
is attributed to, and no earlier alarm already claimed that failure.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .detect import run_cusum
from .errors import EmptyDistributionError

ONE_DAY = timedelta(days=1)


@dataclass(frozen=True)
class CostRules:
    """Classification window plus the money attached to each outcome.

    window is an integer-day interval, lower bound exclusive and upper
    inclusive; horizon is the denominator in the reward proration
    tp_rate * dt / horizon.
    """

    tp_rate: float = 17000.0
    fp_cost: float = 2000.0
    fn_cost: float = 20000.0
    window: tuple = (2, 60)
    horizon: int = 60

    def __post_init__(self):
        lo, hi = self.window
        if not 0 < lo < hi <= self.horizon:
            raise ValueError(
                f"window must satisfy 0 < lower < upper <= horizon, "
                f"got {self.window} with horizon {self.horizon}"
            )
        if min(self.tp_rate, self.fp_cost, self.fn_cost) < 0:
            raise ValueError("cost rates must be non-negative")


@dataclass(frozen=True)
class AlarmScore:
    cost: float
    n_tp: int
    n_fp: int
    n_fn: int
    mean_dt: float          # mean whole days of warning over real TPs


def _in_scope(event, period):
    if event.synthetic:
        return period.begin < event.at <= period.end
    return period.contains(event.at)


def score_alarms(alarms, failures, rules, period):
    """Classify alarms against failures and total the cost.

    Each alarm is attributed to the earliest failure at or after it; the
    first alarm whose whole-day lead falls in the window becomes that
    failure's TP, every other alarm is an FP. Failures without a TP are
    FNs. Synthetic failures earn and cost nothing themselves but their FPs
    still charge; counts cover real failures only. Alarms after the last
    failure pay the default FP cost from rules.
    """
    times = sorted(getattr(a, "at", a) for a in alarms)
    times = [t for t in times if period.contains(t)]
    events = sorted((f for f in failures if _in_scope(f, period)),
                    key=lambda f: f.at)

    lo, hi = rules.window
    cost = 0.0
    n_tp = n_fp = n_fn = 0
    dts = []
    taken = [False] * len(events)
    for t in times:
        target = None
        for j, event in enumerate(events):
            if event.at >= t:
                target = j
                break
        if target is None:
            cost += rules.fp_cost
            n_fp += 1
            continue
        event = events[target]
        dt = math.floor((event.at - t) / ONE_DAY)
        if lo < dt <= hi and not taken[target]:
            taken[target] = True
            cost -= event.tp_reward_rate * dt / rules.horizon
            if not event.synthetic:
                n_tp += 1
                dts.append(dt)
        else:
            cost += event.fp_cost
            n_fp += 1
    for j, event in enumerate(events):
        if not taken[j]:
            cost += event.fn_cost
            if not event.synthetic:
                n_fn += 1
    mean_dt = sum(dts) / len(dts) if dts else float("nan")
    return AlarmScore(cost=cost, n_tp=n_tp, n_fp=n_fp, n_fn=n_fn,
                      mean_dt=mean_dt)


@dataclass(frozen=True)
class CostProfile:
    """Cost of operating at each candidate threshold, one turbine."""

    turbine: str
    h_grid: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        if self.h_grid.shape != self.cost.shape or self.h_grid.ndim != 1:
            raise ValueError("h grid and cost must be matching 1-d arrays")
        if np.any(np.diff(self.h_grid) <= 0):
            raise ValueError("h grid must be strictly ascending")
        if not np.all(np.isfinite(self.cost)):
            raise ValueError("profile costs must be finite")
        self.h_grid.setflags(write=False)
        self.cost.setflags(write=False)


def default_h_grid(start=100.0, stop=150000.0, step=100.0):
    return np.arange(start, stop + step / 2, step)


def cost_profile(residuals, failures, rules, period, h_grid,
                 wait_days=2, baseline_days=2):
    """Score the detector at every threshold on the grid.

    Only this turbine's failures take part, both for recalibration and for
    scoring (synthetic events included in the latter).
    """
    h_grid = np.asarray(h_grid, dtype=float)
    if h_grid.ndim != 1 or h_grid.size == 0:
        raise ValueError("h grid must be a non-empty 1-d array")
    if h_grid[0] <= 0 or np.any(np.diff(h_grid) <= 0):
        raise ValueError("h grid must be positive and strictly ascending")
    mine = [f for f in failures if f.turbine == residuals.turbine]
    costs = np.empty(h_grid.size)
    for idx, h in enumerate(h_grid):
        _, alarms = run_cusum(residuals, mine, float(h), period,
                              wait_days=wait_days,
                              baseline_days=baseline_days)
        costs[idx] = score_alarms(alarms, mine, rules, period).cost
    return CostProfile(turbine=residuals.turbine, h_grid=h_grid, cost=costs)


@dataclass(frozen=True)
class ThresholdDistribution:
    """Normalized profit-weighted mass over the threshold grid."""

    h_grid: np.ndarray
    mass: np.ndarray
    turbines: tuple = field(default=())

    def __post_init__(self):
        if self.h_grid.shape != self.mass.shape or self.h_grid.ndim != 1:
            raise ValueError("h grid and mass must be matching 1-d arrays")
        if np.any(self.mass < 0):
            raise ValueError("distribution mass must be non-negative")
        if abs(float(self.mass.sum()) - 1.0) > 1e-9:
            raise ValueError("distribution mass must sum to one")
        self.h_grid.setflags(write=False)
        self.mass.setflags(write=False)


def threshold_distribution(profiles, cap=20000.0):
    """Combine per-turbine profiles into one threshold distribution.

    Profit f_i(h) = max(0, cap - cost_i(h)) is normalized per turbine, the
    per-turbine distributions are averaged over the turbines with any
    acceptable threshold at all, and the result is renormalized.
    """
    if not profiles:
        raise EmptyDistributionError("no cost profiles supplied")
    if cap <= 0:
        raise ValueError("cap must be positive")
    grid = profiles[0].h_grid
    for p in profiles[1:]:
        if not np.array_equal(p.h_grid, grid):
            raise ValueError("all profiles must share one h grid")

    combined = np.zeros(grid.size)
    contributing = []
    for p in profiles:
        profit = np.maximum(0.0, cap - p.cost)
        total = float(profit.sum())
        if total > 0.0:
            combined += profit / total
            contributing.append(p.turbine)
    if not contributing:
        raise EmptyDistributionError(
            "every turbine's profile stays at or above the cap"
        )
    combined /= len(contributing)
    combined /= combined.sum()
    return ThresholdDistribution(h_grid=grid, mass=combined,
                                 turbines=tuple(contributing))


def distribution_moments(dist):
    """Mean and standard deviation of the threshold distribution."""
    mean = float(np.dot(dist.h_grid, dist.mass))
    second = float(np.dot(dist.h_grid ** 2, dist.mass))
    return mean, math.sqrt(max(0.0, second - mean * mean))


def detection_days(h, shift, steps_per_day=144):
    """Days a sustained residual shift needs to accumulate up to h."""
    if shift <= 0 or h <= 0:
        raise ValueError("h and shift must be positive")
    return h / (steps_per_day * shift)


def detectable_shift(h, days, steps_per_day=144):
    """Smallest sustained shift that reaches h within the given days."""
    if days <= 0 or h <= 0:
        raise ValueError("h and days must be positive")
    return h / (steps_per_day * days)


def _two_column_csv(header, xs, ys, out):
    buffer = out if out is not None else io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for x, y in zip(xs.tolist(), ys.tolist()):
        writer.writerow([repr(x), repr(y)])
    if out is None:
        return buffer.getvalue()
    return None


def profile_to_csv(profile, out=None):
    return _two_column_csv(["h", "cost"], profile.h_grid, profile.cost, out)


def distribution_to_csv(dist, out=None):
    return _two_column_csv(["h", "p"], dist.h_grid, dist.mass, out)
