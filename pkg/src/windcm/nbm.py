"""Normal behaviour model for a single target sensor.

The prediction is a constant plus daily and yearly Fourier terms plus a
linear combination of every other sensor:

    yhat_i(t) = c + D(t) + Y(t) + sum_{j != i} beta_j * y_j(t)

Coefficients come from a ridge-penalized least squares fit on the healthy
median turbine and are frozen afterwards. Raw, unnormalized values are
used throughout.
"""

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import InsufficientDataError, SingularityError, UnknownIdError
from .ingest import parse_timestamp

DAILY_PERIOD = timedelta(days=1)
YEARLY_PERIOD = timedelta(days=365.25)


def fourier_features(t, order, period):
    """Fourier basis [cos(2*pi*n*t/P), sin(2*pi*n*t/P)] for n = 1..order.

    t is elapsed time from the model epoch, in seconds (scalar or array);
    period may be a number of seconds or a timedelta. order 0 returns an
    empty feature block.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if isinstance(period, timedelta):
        period = period.total_seconds()
    if period <= 0:
        raise ValueError("period must be positive")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty((t.size, 2 * order))
    for n in range(1, order + 1):
        phase = 2.0 * np.pi * n * t / period
        out[:, 2 * (n - 1)] = np.cos(phase)
        out[:, 2 * (n - 1) + 1] = np.sin(phase)
    return out[0] if scalar else out


@dataclass(frozen=True)
class SeasonalRegressionModel:
    target: str
    trend: float
    n_daily: int
    n_yearly: int
    daily_a: tuple      # cosine coefficients, n = 1..n_daily
    daily_b: tuple      # sine coefficients
    yearly_c: tuple
    yearly_d: tuple
    regressors: tuple   # sensor names, excludes the target
    beta: tuple
    ridge: float
    epoch: datetime
    p_daily: timedelta = DAILY_PERIOD
    p_yearly: timedelta = YEARLY_PERIOD

    def __post_init__(self):
        if self.target in self.regressors:
            raise ValueError("target cannot appear among its regressors")
        if len(self.regressors) != len(self.beta):
            raise ValueError("beta length must match regressor names")
        if len(self.daily_a) != self.n_daily or len(self.daily_b) != self.n_daily:
            raise ValueError("daily coefficient count must equal n_daily")
        if len(self.yearly_c) != self.n_yearly or len(self.yearly_d) != self.n_yearly:
            raise ValueError("yearly coefficient count must equal n_yearly")
        if self.ridge < 0:
            raise ValueError("ridge strength must be >= 0")

    def seasonal(self, t_seconds):
        """Trend + daily + yearly components at elapsed seconds from epoch."""
        t = np.atleast_1d(np.asarray(t_seconds, dtype=float))
        out = np.full(t.shape, self.trend)
        if self.n_daily:
            feats = fourier_features(t, self.n_daily, self.p_daily)
            coeffs = np.empty(2 * self.n_daily)
            coeffs[0::2] = self.daily_a
            coeffs[1::2] = self.daily_b
            out += feats @ coeffs
        if self.n_yearly:
            feats = fourier_features(t, self.n_yearly, self.p_yearly)
            coeffs = np.empty(2 * self.n_yearly)
            coeffs[0::2] = self.yearly_c
            coeffs[1::2] = self.yearly_d
            out += feats @ coeffs
        return out


@dataclass(frozen=True)
class ResidualSeries:
    """Measured minus predicted target values on a grid; NaN = absent."""

    grid: object
    turbine: str
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.count,):
            raise ValueError("residual series shape mismatch")
        self.values.setflags(write=False)


def _elapsed_seconds(grid, epoch):
    step = grid.step.total_seconds()
    t0 = (grid.start - epoch).total_seconds()
    return t0 + step * np.arange(grid.count)


def _design_matrix(t_seconds, n_daily, n_yearly, regressor_values):
    """Columns: constant, daily Fourier, yearly Fourier, regressors."""
    blocks = [np.ones((t_seconds.size, 1))]
    if n_daily:
        blocks.append(fourier_features(t_seconds, n_daily, DAILY_PERIOD))
    if n_yearly:
        blocks.append(fourier_features(t_seconds, n_yearly, YEARLY_PERIOD))
    if regressor_values.size:
        blocks.append(regressor_values.T)
    return np.hstack(blocks)


def fit_nbm(median, target, n_daily=1, n_yearly=1, ridge=None, period=None):
    """Fit the normal behaviour model on the healthy median turbine.

    Rows with a missing target or any missing regressor are dropped. The
    time epoch is the fit period start (grid start when no period is
    given). ridge=None picks 1e-8 times the mean diagonal of the normal
    matrix; ridge=0 requires a full-rank design.
    """
    if target not in median.sensors:
        raise UnknownIdError(f"unknown target sensor {target!r}")
    regressors = tuple(s for s in median.sensors if s != target)
    if not regressors:
        raise InsufficientDataError("need at least one regressor sensor")

    grid = median.grid
    if period is not None:
        lo, hi = grid.index_range(period.begin, period.end)
        epoch = period.begin
    else:
        lo, hi = 0, grid.count
        epoch = grid.start

    t_idx = median.sensors.index(target)
    r_idx = [median.sensors.index(s) for s in regressors]
    y_all = median.values[t_idx, lo:hi]
    x_all = median.values[r_idx, lo:hi]
    keep = ~np.isnan(y_all) & ~np.isnan(x_all).any(axis=0)

    t_seconds = _elapsed_seconds(grid, epoch)[lo:hi][keep]
    design = _design_matrix(t_seconds, n_daily, n_yearly, x_all[:, keep])
    y = y_all[keep]
    n_rows, n_cols = design.shape
    if n_rows < n_cols:
        raise InsufficientDataError(
            f"{n_rows} complete rows for {n_cols} coefficients"
        )

    if ridge is None:
        diag = np.einsum("ij,ij->j", design, design)
        ridge = 1e-8 * float(diag.mean())
    if ridge < 0:
        raise ValueError("ridge strength must be >= 0")

    if ridge > 0:
        aug = np.vstack([design, np.sqrt(ridge) * np.eye(n_cols)])
        rhs = np.concatenate([y, np.zeros(n_cols)])
        coeffs, _, _, _ = np.linalg.lstsq(aug, rhs, rcond=None)
    else:
        coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < n_cols:
            raise SingularityError(
                f"design rank {rank} < {n_cols}; set ridge > 0 to regularize"
            )

    pos = 1
    daily = coeffs[pos:pos + 2 * n_daily]
    pos += 2 * n_daily
    yearly = coeffs[pos:pos + 2 * n_yearly]
    pos += 2 * n_yearly
    beta = coeffs[pos:]
    return SeasonalRegressionModel(
        target=target,
        trend=float(coeffs[0]),
        n_daily=n_daily,
        n_yearly=n_yearly,
        daily_a=tuple(daily[0::2].tolist()),
        daily_b=tuple(daily[1::2].tolist()),
        yearly_c=tuple(yearly[0::2].tolist()),
        yearly_d=tuple(yearly[1::2].tolist()),
        regressors=regressors,
        beta=tuple(beta.tolist()),
        ridge=float(ridge),
        epoch=epoch,
    )


def _predict_on_grid(model, grid, regressor_lookup):
    """regressor_lookup maps sensor name -> value array over the grid."""
    t_seconds = _elapsed_seconds(grid, model.epoch)
    yhat = model.seasonal(t_seconds)
    for name, weight in zip(model.regressors, model.beta):
        yhat = yhat + weight * regressor_lookup(name)
    return yhat


def predict(model, panel, turbine):
    """Model prediction for one turbine; NaN where any regressor is missing."""
    ti = panel.turbine_index(turbine)

    def lookup(name):
        return panel.values[ti, panel.sensor_index(name)]

    return _predict_on_grid(model, panel.grid, lookup)


def predict_median(model, median):
    """Model prediction on the median turbine itself (used by the scan)."""

    def lookup(name):
        return median.series(name)

    return _predict_on_grid(model, median.grid, lookup)


def residuals(panel, turbine, model):
    """Measured minus predicted target for one turbine."""
    measured = panel.series(turbine, model.target)
    return ResidualSeries(
        grid=panel.grid,
        turbine=turbine,
        values=measured - predict(model, panel, turbine),
    )


def median_residuals(median, model):
    t_idx = median.sensors.index(model.target)
    return median.values[t_idx] - predict_median(model, median)


@dataclass(frozen=True)
class ScanRow:
    n_daily: int
    n_yearly: int
    period: str
    mean: float
    std: float
    error: str = ""


def scan_seasonality(median, target, orders, ridge=None, train=None,
                     eval_periods=()):
    """Fit each (daily, yearly) order pair on train, report residual stats.

    orders is an iterable of (n_daily, n_yearly) pairs. Rows come out
    ordered by (n_daily, n_yearly, period). Failed cells are recorded and
    the scan continues.
    """
    rows = []
    periods = list(eval_periods)
    if train is not None and not periods:
        periods = [train]
    for n_daily, n_yearly in sorted(set(orders)):
        try:
            model = fit_nbm(median, target, n_daily, n_yearly, ridge,
                            period=train)
            eps = median_residuals(median, model)
        except Exception as exc:  # recorded, scan continues
            for p in periods or [None]:
                rows.append(ScanRow(
                    n_daily=n_daily, n_yearly=n_yearly,
                    period=p.name if p is not None else "all",
                    mean=float("nan"), std=float("nan"),
                    error=f"{type(exc).__name__}: {exc}",
                ))
            continue
        if periods:
            for p in periods:
                lo, hi = median.grid.index_range(p.begin, p.end)
                chunk = eps[lo:hi]
                present = chunk[~np.isnan(chunk)]
                rows.append(_scan_row(n_daily, n_yearly, p.name, present))
        else:
            present = eps[~np.isnan(eps)]
            rows.append(_scan_row(n_daily, n_yearly, "all", present))
    return rows


def _scan_row(n_daily, n_yearly, period_name, present):
    if present.size == 0:
        return ScanRow(n_daily=n_daily, n_yearly=n_yearly, period=period_name,
                       mean=float("nan"), std=float("nan"),
                       error="no residuals in period")
    return ScanRow(
        n_daily=n_daily, n_yearly=n_yearly, period=period_name,
        mean=float(present.mean()), std=float(present.std()),
    )


# ---- serialization ---------------------------------------------------------

def serialize_model(model):
    """Flat key=value text form, bit-exact on the decimal representation."""
    lines = [
        f"target={model.target}",
        f"n_daily={model.n_daily}",
        f"n_yearly={model.n_yearly}",
        f"p_daily_seconds={model.p_daily.total_seconds()!r}",
        f"p_yearly_seconds={model.p_yearly.total_seconds()!r}",
        f"ridge={model.ridge!r}",
        f"epoch={model.epoch.astimezone(timezone.utc).isoformat()}",
        f"trend={model.trend!r}",
    ]
    for n, (a, b) in enumerate(zip(model.daily_a, model.daily_b), start=1):
        lines.append(f"daily_a_{n}={a!r}")
        lines.append(f"daily_b_{n}={b!r}")
    for n, (c, d) in enumerate(zip(model.yearly_c, model.yearly_d), start=1):
        lines.append(f"yearly_c_{n}={c!r}")
        lines.append(f"yearly_d_{n}={d!r}")
    for name, weight in zip(model.regressors, model.beta):
        lines.append(f"beta.{name}={weight!r}")
    return "\n".join(lines) + "\n"


def parse_model(text):
    pairs = {}
    order = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
        order.append(key.strip())
    try:
        n_daily = int(pairs["n_daily"])
        n_yearly = int(pairs["n_yearly"])
        regressors = [k[len("beta."):] for k in order if k.startswith("beta.")]
        return SeasonalRegressionModel(
            target=pairs["target"],
            trend=float(pairs["trend"]),
            n_daily=n_daily,
            n_yearly=n_yearly,
            daily_a=tuple(float(pairs[f"daily_a_{n}"]) for n in range(1, n_daily + 1)),
            daily_b=tuple(float(pairs[f"daily_b_{n}"]) for n in range(1, n_daily + 1)),
            yearly_c=tuple(float(pairs[f"yearly_c_{n}"]) for n in range(1, n_yearly + 1)),
            yearly_d=tuple(float(pairs[f"yearly_d_{n}"]) for n in range(1, n_yearly + 1)),
            regressors=tuple(regressors),
            beta=tuple(float(pairs[f"beta.{name}"]) for name in regressors),
            ridge=float(pairs["ridge"]),
            epoch=parse_timestamp(pairs["epoch"]),
            p_daily=timedelta(seconds=float(pairs["p_daily_seconds"])),
            p_yearly=timedelta(seconds=float(pairs["p_yearly_seconds"])),
        )
    except KeyError as exc:
        raise ValueError(f"model document missing key {exc}") from None
