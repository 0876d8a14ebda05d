"""Residual diagnostics and the restarting CUSUM alarm engine.

The detector accumulates C = sum(eps - mu0) over present residuals and
raises an alarm when |C| >= h. After an alarm the ground level is shifted
by the mean drift of the final run (estimated from the last zero crossing)
and accumulation restarts at zero immediately. A real failure aborts the
segment; a fresh 2+2 day calibration follows.
"""

import math
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .errors import CalibrationError

DAY = timedelta(days=1)


@dataclass(frozen=True)
class MovingStats:
    """Trailing-window residual mean/std plus first-3-day reference values."""

    grid: object
    window: timedelta
    mean: np.ndarray
    std: np.ndarray
    eps3: float
    sigma3: float

    def __post_init__(self):
        self.mean.setflags(write=False)
        self.std.setflags(write=False)


def moving_stats(residuals, dd=30):
    """Trailing mean and population std over a dd-day window.

    Statistics are defined (non-NaN) wherever the window holds at least two
    present residuals. eps3/sigma3 summarize the first 3 days of the series.
    """
    if isinstance(dd, timedelta):
        window = dd
    else:
        window = dd * DAY
    if window <= timedelta(0):
        raise ValueError("window must be positive")
    grid = residuals.grid
    values = residuals.values
    present = ~np.isnan(values)
    filled = np.where(present, values, 0.0)

    w = max(1, math.ceil(window / grid.step))
    cnt = np.cumsum(present)
    s1 = np.cumsum(filled)
    s2 = np.cumsum(filled * filled)

    def window_sum(prefix):
        out = prefix.copy()
        out[w:] = prefix[w:] - prefix[:-w]
        return out

    c = window_sum(cnt.astype(float))
    m1 = window_sum(s1)
    m2 = window_sum(s2)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(c >= 2, m1 / c, np.nan)
        var = np.where(c >= 2, m2 / c - (m1 / c) ** 2, np.nan)
    std = np.sqrt(np.clip(var, 0.0, None))

    head = min(grid.count, max(1, math.ceil(3 * DAY / grid.step)))
    first = values[:head]
    first = first[~np.isnan(first)]
    if first.size >= 2:
        eps3 = float(first.mean())
        sigma3 = float(first.std())
    else:
        eps3 = sigma3 = float("nan")
    return MovingStats(grid=grid, window=window, mean=mean, std=std,
                       eps3=eps3, sigma3=sigma3)


@dataclass(frozen=True)
class StabilityReport:
    """Pointwise residual stability checks against the first-3-day levels."""

    mean_bound: float
    std_lower: float
    std_upper: float
    mean_violations: tuple
    std_violations: tuple

    @property
    def mean_ok(self):
        return not self.mean_violations

    @property
    def std_ok(self):
        return not self.std_violations

    @property
    def passed(self):
        return self.mean_ok and self.std_ok


def stability_report(stats):
    """Check |mean(t)| <= eps3 + 3*sigma3 and 0.7*sigma3 <= std(t) <= 2.5*sigma3.

    Bounds are non-strict so that identically-zero residuals pass. Points
    where the moving statistics are undefined are not checked.
    """
    mean_bound = stats.eps3 + 3.0 * stats.sigma3
    std_lo = 0.7 * stats.sigma3
    std_hi = 2.5 * stats.sigma3
    grid = stats.grid

    defined = ~np.isnan(stats.mean)
    mean_bad = defined & (np.abs(stats.mean) > mean_bound)
    std_defined = ~np.isnan(stats.std)
    std_bad = std_defined & ((stats.std < std_lo) | (stats.std > std_hi))
    return StabilityReport(
        mean_bound=mean_bound,
        std_lower=std_lo,
        std_upper=std_hi,
        mean_violations=tuple(grid.timestamp(int(k))
                              for k in np.flatnonzero(mean_bad)),
        std_violations=tuple(grid.timestamp(int(k))
                             for k in np.flatnonzero(std_bad)),
    )


def calibrate(residuals, t0, wait_days=2, baseline_days=2):
    """Ground level after a quiet wait: mean residual over the baseline window.

    Returns (mu0, cusum_start_time) with the start at t0 + wait + baseline.
    """
    grid = residuals.grid
    wait = wait_days * DAY
    baseline = baseline_days * DAY
    start = t0 + wait + baseline
    if start > grid.end:
        raise CalibrationError(
            f"calibration window after {t0} runs past the end of data"
        )
    lo, hi = grid.index_range(t0 + wait, start)
    window = residuals.values[lo:hi]
    window = window[~np.isnan(window)]
    if window.size == 0:
        raise CalibrationError(f"no residuals in baseline window after {t0}")
    return float(window.mean()), start


@dataclass(frozen=True)
class CusumSegment:
    id: int
    start_index: int
    mu: float
    indices: np.ndarray     # grid indices of accumulated (present) steps
    values: np.ndarray      # C after each accumulated step
    end_cause: str          # "alarm" | "failure" | "end-of-data"


@dataclass(frozen=True)
class AlarmEvent:
    at: object              # timestamp
    threshold: float
    sign: int
    segment: int


@dataclass(frozen=True)
class CusumTrace:
    turbine: str
    h: float
    wait_days: float
    baseline_days: float
    segments: tuple


def run_cusum(residuals, failures, h, period, wait_days=2, baseline_days=2):
    """Two-sided restarting CUSUM over one evaluation period.

    Calibration happens at the period start and again after every real
    failure; if the 4 calibration days run past the next failure or the
    period end, that stretch produces no segment. Alarms restart the
    accumulator at zero immediately, with the ground level shifted by
    C_alarm/(i_a - i0) where i0 is the last zero crossing (in present-step
    counts).
    """
    if h <= 0:
        raise ValueError("threshold h must be positive")
    grid = residuals.grid
    values = residuals.values
    real_failures = sorted(
        f.at for f in failures
        if not f.synthetic and period.contains(f.at)
        and f.turbine == residuals.turbine
    )

    segments = []
    alarms = []
    seg_id = 0
    t0 = period.begin
    pending = list(real_failures)

    while True:
        boundary = pending[0] if pending else period.end
        try:
            mu, start = calibrate(residuals, t0, wait_days, baseline_days)
        except CalibrationError:
            mu, start = None, None
        if start is not None and start < boundary:
            lo = grid.index_range(start, boundary)[0]
            hi = grid.index_range(period.begin, boundary)[1]
            seg_id, segs, seg_alarms = _accumulate(
                grid, values, lo, hi, mu, h, seg_id,
                "failure" if pending else "end-of-data",
            )
            segments.extend(segs)
            alarms.extend(seg_alarms)
        if not pending:
            break
        t0 = pending.pop(0)

    trace = CusumTrace(
        turbine=residuals.turbine,
        h=h,
        wait_days=wait_days,
        baseline_days=baseline_days,
        segments=tuple(segments),
    )
    return trace, alarms


def _accumulate(grid, values, lo, hi, mu, h, next_id, end_cause):
    """Run one calibrated stretch [lo, hi); alarms split it into segments."""
    segments = []
    alarms = []
    c = 0.0
    steps = 0
    i0 = 0
    seg_start = lo
    idx_buf = []
    val_buf = []

    for k in range(lo, hi):
        v = values[k]
        if math.isnan(v):
            continue
        prev = c
        c += v - mu
        steps += 1
        if c == 0.0 or (prev != 0.0 and (prev > 0.0) != (c > 0.0)):
            i0 = steps
        idx_buf.append(k)
        val_buf.append(c)
        if abs(c) >= h:
            alarms.append(AlarmEvent(
                at=grid.timestamp(k),
                threshold=h,
                sign=1 if c > 0 else -1,
                segment=next_id,
            ))
            segments.append(CusumSegment(
                id=next_id,
                start_index=seg_start,
                mu=mu,
                indices=np.array(idx_buf, dtype=np.int64),
                values=np.array(val_buf, dtype=float),
                end_cause="alarm",
            ))
            next_id += 1
            mu = mu + c / max(1, steps - i0)
            c = 0.0
            steps = 0
            i0 = 0
            seg_start = k + 1
            idx_buf = []
            val_buf = []
    segments.append(CusumSegment(
        id=next_id,
        start_index=seg_start,
        mu=mu,
        indices=np.array(idx_buf, dtype=np.int64),
        values=np.array(val_buf, dtype=float),
        end_cause=end_cause,
    ))
    next_id += 1
    return next_id, segments, alarms


def trace_to_csv(trace, grid, out=None):
    """CSV export (timestamp, segment id, C, ground level) for plotting."""
    import csv
    import io

    from .ingest import format_timestamp

    buffer = out if out is not None else io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["timestamp", "segment", "cusum", "ground_level"])
    for seg in trace.segments:
        for k, c in zip(seg.indices.tolist(), seg.values.tolist()):
            writer.writerow([
                format_timestamp(grid.timestamp(k)), seg.id, repr(c),
                repr(seg.mu),
            ])
    if out is None:
        return buffer.getvalue()
    return None


def random_walk_bound(sigma, n, kappa=2.0):
    """Drift-free CUSUM scales: (sigma*sqrt(n), kappa*sigma*sqrt(n),
    kappa*sigma/sqrt(n)).

    The first is the RMS excursion of an n-step random walk, the second a
    no-drift alarm bound, the third the smallest sustained mean shift such
    a bound can reveal within n steps.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    root = math.sqrt(n)
    return sigma * root, kappa * sigma * root, kappa * sigma / root


def iterated_log_factor(n):
    """sqrt(2 * log(log n)), the growth factor in the law of the iterated
    logarithm."""
    if n <= math.e:
        raise ValueError("n must exceed e")
    return math.sqrt(2.0 * math.log(math.log(n)))
