"""End-to-end orchestration on top of one parsed configuration.

A Workspace lazily parses the input files and caches every derived
artifact (aligned panel, health mask, median turbine, fitted model,
per-turbine residuals) so that compound operations such as the report
reuse the same objects instead of re-reading the inputs.  All operations
are deterministic functions of (config, input files, seed); nothing read
from the output directory ever feeds back into a computation.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

from windcm.costs import (
    cost_profile,
    distribution_moments,
    threshold_distribution,
)
from windcm.detect import moving_stats, run_cusum, stability_report
from windcm.errors import ConfigError, UnknownIdError
from windcm.fleet import (
    append_terminal_failure,
    build_health_mask,
    build_median_turbine,
)
from windcm.ingest import (
    PeriodSplit,
    drop_dead_sensors,
    format_timestamp,
    parse_failures,
    parse_scada,
    resolve_period,
)
from windcm.nbm import fit_nbm, residuals, scan_seasonality
from windcm.policies import (
    maximal_savings,
    monte_carlo_model,
    monte_carlo_random,
    reactive_cost,
    truncated_savings_bound,
)
from windcm.report import (
    ReferenceLines,
    build_report,
    emit_histogram,
    maximal_row,
    reactive_row,
    row_from_distribution,
)

SCAN_MAX_ORDER = 15
REPORT_POLICIES = ("reactive", "random", "model", "maximal")


@dataclass(frozen=True)
class BaselineResult:
    """Deterministic policy cost with its per-turbine breakdown (euros)."""

    policy: str
    period: str
    total: float
    per_turbine: dict
    truncated_total: float | None = None


@dataclass(frozen=True)
class ReportBundle:
    """Everything the report subcommand emits, still in memory."""

    period: str
    document: dict
    distributions: dict       # policy -> (per_turbine, fleet)
    histograms: dict          # policy -> SVG text


class Workspace:
    """Caches inputs and derived artifacts for one configuration."""

    def __init__(self, config):
        self.config = config
        self._cache = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # -- inputs ------------------------------------------------------------

    def panel(self):
        return self._get("panel", self._load_panel)

    def _load_panel(self):
        path = self.config.paths.scada
        if not os.path.isfile(path):
            raise ConfigError(f"SCADA file not found: {path}")
        panel = parse_scada(path, column_map=self.config.column_map())
        if self.config.dead_sensors:
            panel = drop_dead_sensors(panel, self.config.dead_sensors)
        if self.config.target not in panel.sensors:
            raise ConfigError(
                f"target sensor {self.config.target!r} not in data "
                f"(have {', '.join(panel.sensors)})")
        return panel

    def failures(self):
        return self._get("failures", self._load_failures)

    def _load_failures(self):
        path = self.config.paths.failures
        if not os.path.isfile(path):
            raise ConfigError(f"failure log not found: {path}")
        return parse_failures(path, known_turbines=self.panel().turbines)

    def period(self, name):
        return resolve_period(name, self.config.periods or None)

    def full_span(self):
        """Earliest period begin to latest period end, as one span."""
        periods = [self.period(n) for n in ("train", "test1", "test2")]
        return PeriodSplit(name="span",
                           begin=min(p.begin for p in periods),
                           end=max(p.end for p in periods))

    # -- fleet reference and model ----------------------------------------

    def mask(self):
        return self._get("mask", lambda: build_health_mask(
            self.failures(), self.panel().grid, self.panel().turbines,
            cut_days=self.config.cut_days))

    def median(self):
        return self._get("median", lambda: build_median_turbine(
            self.panel(), self.mask()))

    def model(self):
        return self._get("model", lambda: fit_nbm(
            self.median(), self.config.target,
            n_daily=self.config.nbm.daily_order,
            n_yearly=self.config.nbm.yearly_order,
            ridge=self.config.nbm.ridge,
            period=self.period("train")))

    def scan(self, max_order=SCAN_MAX_ORDER):
        orders = [(d, y) for d in range(max_order + 1)
                  for y in range(max_order + 1)]
        periods = tuple(self.period(n) for n in ("train", "test1", "test2"))
        return scan_seasonality(
            self.median(), self.config.target, orders,
            ridge=self.config.nbm.ridge, train=self.period("train"),
            eval_periods=periods)

    def residual_series(self, turbine):
        if turbine not in self.panel().turbines:
            raise UnknownIdError(f"unknown turbine {turbine!r}")
        return self._get(("residuals", turbine), lambda: residuals(
            self.panel(), turbine, self.model()))

    def residuals_by_turbine(self):
        return {t: self.residual_series(t) for t in self.panel().turbines}

    def stability(self, turbine):
        """Moving-window residual stability checks for one turbine."""
        stats = moving_stats(self.residual_series(turbine),
                             dd=self.config.ma_window_days)
        return stability_report(stats)

    # -- detection and costing --------------------------------------------

    def cusum(self, turbine, h, period_name):
        """Returns (trace, alarms) for one turbine at one threshold."""
        cal = self.config.calibration
        return run_cusum(
            self.residual_series(turbine), self.failures(), h,
            self.period(period_name),
            wait_days=cal.wait_days, baseline_days=cal.baseline_days)

    def profiles(self, period_name="train"):
        return self._get(("profiles", period_name),
                         lambda: self._build_profiles(period_name))

    def _build_profiles(self, period_name):
        period = self.period(period_name)
        rules = self.config.cost_rules()
        events = append_terminal_failure(
            self.failures(), period, self.panel().turbines,
            fp_cost=rules.fp_cost)
        grid = self.config.h_values()
        cal = self.config.calibration
        return [
            cost_profile(self.residual_series(t), events, rules, period, grid,
                         wait_days=cal.wait_days,
                         baseline_days=cal.baseline_days)
            for t in self.panel().turbines
        ]

    def distribution(self):
        rules = self.config.cost_rules()
        return self._get("distribution", lambda: threshold_distribution(
            self.profiles("train"), cap=rules.fn_cost))

    def moments(self):
        return distribution_moments(self.distribution())

    # -- policy simulation -------------------------------------------------

    def _failures_by_turbine(self):
        events = self.failures()
        return {t: [f for f in events if f.turbine == t]
                for t in self.panel().turbines}

    def simulate(self, period_name, seed=None, n_samples=None):
        seed = self.config.sampling.seed if seed is None else seed
        n = self.config.sampling.n_samples if n_samples is None else n_samples
        key = ("simulate", period_name, seed, n)
        cal = self.config.calibration
        return self._get(key, lambda: monte_carlo_model(
            seed, self.distribution(), self.residuals_by_turbine(),
            self._failures_by_turbine(), self.period(period_name),
            self.config.cost_rules(), n_samples=n,
            wait_days=cal.wait_days, baseline_days=cal.baseline_days))

    def random_policy(self, period_name, seed=None, n_samples=None):
        seed = self.config.sampling.seed if seed is None else seed
        n = self.config.sampling.n_samples if n_samples is None else n_samples
        key = ("random", period_name, seed, n)
        return self._get(key, lambda: monte_carlo_random(
            seed, self._failures_by_turbine(), self.period(period_name),
            self.config.cost_rules(), self.full_span(),
            n_samples=n, n_dates=self.config.sampling.n_dates))

    def baseline(self, policy, period_name):
        period = self.period(period_name)
        rules = self.config.cost_rules()
        by_turbine = self._failures_by_turbine()
        if policy == "reactive":
            per = {t: reactive_cost(fs, period, rules)
                   for t, fs in by_turbine.items()}
            return BaselineResult(
                policy, period_name, reactive_cost(self.failures(), period,
                                                   rules), per)
        if policy == "maximal":
            per = {t: maximal_savings(fs, period, rules)
                   for t, fs in by_turbine.items()}
            return BaselineResult(
                policy, period_name,
                maximal_savings(self.failures(), period, rules), per,
                truncated_total=truncated_savings_bound(
                    self.failures(), period, rules))
        raise ConfigError(f"unknown baseline policy {policy!r}")

    def _n_real_failures(self, period):
        return sum(1 for f in self.failures()
                   if not f.synthetic and period.begin <= f.at < period.end)

    # -- report ------------------------------------------------------------

    def report(self, period_name, seed=None, n_samples=None):
        seed = self.config.sampling.seed if seed is None else seed
        n = self.config.sampling.n_samples if n_samples is None else n_samples
        period = self.period(period_name)
        rules = self.config.cost_rules()
        n_fail = self._n_real_failures(period)
        reactive = self.baseline("reactive", period_name)
        maximal = self.baseline("maximal", period_name)
        random_mc = self.random_policy(period_name, seed, n)
        model_mc = self.simulate(period_name, seed, n)
        rows = [
            reactive_row(period_name, reactive.total, n_fail),
            row_from_distribution("random", period_name, random_mc[1]),
            row_from_distribution("model", period_name, model_mc[1]),
            maximal_row(period_name, maximal.total, n_fail, rules),
        ]
        document = build_report(period_name, rows, seed=seed, n_samples=n)
        guides = ReferenceLines(reactive=reactive.total, maximal=maximal.total)
        histograms = {
            policy: emit_histogram(
                mc[1].samples, guides,
                title=f"{policy} maintenance cost, {period_name}")
            for policy, mc in (("random", random_mc), ("model", model_mc))
        }
        return ReportBundle(
            period=period_name, document=document,
            distributions={"random": random_mc, "model": model_mc},
            histograms=histograms)


# -- tabular serialization helpers -----------------------------------------

def scan_to_csv(rows, out=None):
    """Serialize seasonality scan rows as CSV (NaN cells left empty)."""
    buffer = out if out is not None else io.StringIO()
    buffer.write("n_daily,n_yearly,period,mean,std,error\n")
    for row in rows:
        mean = "" if row.mean != row.mean else repr(row.mean)
        std = "" if row.std != row.std else repr(row.std)
        error = (row.error or "").replace(",", ";")
        buffer.write(f"{row.n_daily},{row.n_yearly},{row.period},"
                     f"{mean},{std},{error}\n")
    return None if out is not None else buffer.getvalue()


def residuals_to_csv(series, out=None):
    """Serialize one turbine's residual series as timestamp,residual CSV."""
    buffer = out if out is not None else io.StringIO()
    buffer.write("timestamp,residual\n")
    for i in range(series.grid.count):
        value = series.values[i]
        text = "" if value != value else repr(float(value))
        buffer.write(f"{format_timestamp(series.grid.timestamp(i))},{text}\n")
    return None if out is not None else buffer.getvalue()
