"""Healthy fleet reference ("Frankenstein" turbine).

Pre-failure windows are masked out per turbine, and the per-timestamp
median over the remaining healthy turbines forms a patchwork reference
turbine used to train the normal behaviour model.
"""

import warnings
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .errors import UnknownIdError
from .ingest import FailureEvent

DAY = timedelta(days=1)


@dataclass(frozen=True)
class HealthMask:
    """Boolean healthy flag per (turbine, grid index)."""

    grid: object
    turbines: tuple
    healthy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "turbines", tuple(self.turbines))
        expected = (len(self.turbines), self.grid.count)
        if self.healthy.shape != expected:
            raise ValueError(f"mask shape {self.healthy.shape} != {expected}")
        self.healthy.setflags(write=False)


@dataclass(frozen=True)
class MedianTurbine:
    """Per-timestamp median over healthy turbines.

    coverage counts how many turbines were healthy at each grid index;
    values are absent wherever coverage is zero.
    """

    grid: object
    sensors: tuple
    values: np.ndarray
    coverage: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.values.shape != (len(self.sensors), self.grid.count):
            raise ValueError("median values shape mismatch")
        if self.coverage.shape != (self.grid.count,):
            raise ValueError("coverage shape mismatch")
        self.values.setflags(write=False)
        self.coverage.setflags(write=False)

    def series(self, sensor):
        try:
            return self.values[self.sensors.index(sensor)]
        except ValueError:
            raise UnknownIdError(f"unknown sensor {sensor!r}") from None


def build_health_mask(failures, grid, turbines, cut_days=60):
    """Mark [t_f - cut_days, t_f] unhealthy for every real failure.

    Both window ends are inclusive; overlapping windows merge naturally.
    Synthetic terminal failures are a scoring fiction and do not mask
    anything.
    """
    if cut_days <= 0:
        raise ValueError("cut_days must be positive")
    turbines = tuple(turbines)
    index = {t: i for i, t in enumerate(turbines)}
    healthy = np.ones((len(turbines), grid.count), dtype=bool)
    cut = cut_days * DAY
    for event in failures:
        if event.synthetic:
            continue
        if event.turbine not in index:
            raise UnknownIdError(
                f"failure references unknown turbine {event.turbine!r}"
            )
        lo_off = (event.at - cut) - grid.start
        hi_off = event.at - grid.start
        q, r = divmod(lo_off, grid.step)
        i_lo = q if not r else q + 1
        i_hi, _ = divmod(hi_off, grid.step)
        i_lo = max(0, int(i_lo))
        i_hi = min(grid.count - 1, int(i_hi))
        if i_lo <= i_hi:
            healthy[index[event.turbine], i_lo:i_hi + 1] = False
    return HealthMask(grid=grid, turbines=turbines, healthy=healthy)


def build_median_turbine(panel, mask):
    """Per-timestamp, per-sensor median over healthy turbines with data.

    An even number of contributing values yields the mean of the two
    middle ones.
    """
    if mask.turbines != panel.turbines:
        raise ValueError("panel and mask turbines differ")
    if mask.grid != panel.grid:
        raise ValueError("panel and mask grids differ")
    masked = np.where(mask.healthy[:, None, :], panel.values, np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices
        values = np.nanmedian(masked, axis=0)
    coverage = mask.healthy.sum(axis=0).astype(np.int64)
    return MedianTurbine(
        grid=panel.grid,
        sensors=panel.sensors,
        values=values,
        coverage=coverage,
    )


def median_to_csv(median, out=None):
    """Serialize the median turbine as timestamp, coverage, sensor columns."""
    import csv
    import io
    import math

    from .ingest import format_timestamp

    buffer = out if out is not None else io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["timestamp", "coverage", *median.sensors])
    for k, ts in enumerate(median.grid.timestamps()):
        cells = [
            "" if math.isnan(v) else repr(v)
            for v in median.values[:, k].tolist()
        ]
        writer.writerow([format_timestamp(ts), int(median.coverage[k]),
                         *cells])
    if out is None:
        return buffer.getvalue()
    return None


def append_terminal_failure(failures, period, turbines, fp_cost=2000.0):
    """Append one synthetic zero-reward failure per turbine at period end.

    The fake event forgives the first end-of-period alarm (zero-reward
    true positive) while still charging fp_cost for any further ones, so
    threshold training does not punish alarms building up toward the data
    boundary.
    """
    extra = [
        FailureEvent(
            turbine=turbine,
            at=period.end,
            component="TERMINAL",
            remarks=f"synthetic terminal failure for period {period.name}",
            tp_reward_rate=0.0,
            fn_cost=0.0,
            fp_cost=fp_cost,
            synthetic=True,
        )
        for turbine in turbines
    ]
    return list(failures) + extra
