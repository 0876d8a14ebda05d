"""Policy comparison reports: JSON tables and SVG cost histograms.

Money enters as float euros and is serialized as integer euro cents so the
report file carries no floating-point noise; axis labels round to whole euros.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from windcm.policies import CostDistribution


def euros_to_cents(value):
    """Round a euro amount to the nearest cent and return it as an int."""
    return int(round(float(value) * 100))


@dataclass(frozen=True)
class ReportRow:
    """One policy's cost summary over one period, in float euros."""

    policy: str
    period: str
    mean: float
    std: float
    min: float
    mean_dt: float | None   # mean alarm lead time in days; None if no TPs
    n_fp: float             # mean false alarms per sample
    n_fn: float             # mean missed failures per sample


def row_from_distribution(policy, period, dist: CostDistribution) -> ReportRow:
    """Summarize a Monte Carlo cost distribution into a report row."""
    dts = dist.mean_dt[~np.isnan(dist.mean_dt)]
    return ReportRow(
        policy=policy,
        period=period,
        mean=dist.stats.mean,
        std=dist.stats.std,
        min=dist.stats.min,
        mean_dt=float(dts.mean()) if dts.size else None,
        n_fp=float(dist.n_fp.mean()),
        n_fn=float(dist.n_fn.mean()),
    )


def reactive_row(period, cost, n_failures) -> ReportRow:
    """Deterministic row for run-to-failure operation: every failure missed."""
    return ReportRow("reactive", period, float(cost), 0.0, float(cost),
                     None, 0.0, float(n_failures))


def maximal_row(period, savings, n_failures, rules) -> ReportRow:
    """Deterministic row for the best possible outcome under the cost rules."""
    dt = float(rules.horizon) if n_failures else None
    return ReportRow("maximal", period, float(savings), 0.0, float(savings),
                     dt, 0.0, 0.0)


def build_report(period, rows, seed=None, n_samples=None):
    """Assemble the JSON-ready report document (money in integer cents)."""
    return {
        "period": period,
        "currency": "EUR-cents",
        "seed": seed,
        "n_samples": n_samples,
        "rows": [
            {
                "policy": r.policy,
                "period": r.period,
                "mean_cents": euros_to_cents(r.mean),
                "std_cents": euros_to_cents(r.std),
                "min_cents": euros_to_cents(r.min),
                "mean_dt_days": None if r.mean_dt is None else float(r.mean_dt),
                "n_fp": float(r.n_fp),
                "n_fn": float(r.n_fn),
            }
            for r in rows
        ],
    }


def render_report(document):
    """Serialize a report document to stable, diffable JSON text."""
    return json.dumps(document, indent=2) + "\n"


def report_schema():
    """Parsed JSON schema the report document is published against."""
    text = resources.files("windcm").joinpath("report_schema.json").read_text()
    return json.loads(text)


# --------------------------------------------------------------------------
# SVG histogram
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceLines:
    """Vertical guide lines drawn over a cost histogram (euro values)."""

    reactive: float | None = None   # dashed
    maximal: float | None = None    # dotted


_MARGIN_L = 62.0
_MARGIN_R = 18.0
_MARGIN_T = 26.0
_MARGIN_B = 42.0


def _fmt(x):
    return f"{x:.2f}"


def _euro_label(x):
    return f"{x:,.0f}"


def emit_histogram(samples, reference=None, bins=None,
                   width=640, height=400, title=""):
    """Render a cost histogram as a self-contained SVG document string.

    The x-range always covers the samples and any reference lines, so a
    guide line can never fall off the plot.  ``bins`` defaults to
    ceil(sqrt(n)).
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("samples must be a non-empty 1-d array")
    if not np.isfinite(values).all():
        raise ValueError("samples must be finite")
    if reference is None:
        reference = ReferenceLines()
    if bins is None:
        bins = math.ceil(math.sqrt(values.size))
    if bins < 1:
        raise ValueError("bins must be >= 1")

    guides = [g for g in (reference.reactive, reference.maximal)
              if g is not None]
    lo = min([float(values.min())] + guides)
    hi = max([float(values.max())] + guides)
    if hi == lo:
        lo -= 0.5
        hi += 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    peak = int(counts.max())

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B
    base_y = _MARGIN_T + plot_h

    def sx(v):
        return _MARGIN_L + (v - lo) / (hi - lo) * plot_w

    def sy(count):
        return base_y - count / peak * plot_h if peak else base_y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="17" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>')

    for i, count in enumerate(counts):
        if count == 0:
            continue
        x0, x1 = sx(edges[i]), sx(edges[i + 1])
        y = sy(int(count))
        parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y)}" width="{_fmt(x1 - x0)}" '
            f'height="{_fmt(base_y - y)}" fill="#7da7d9" stroke="#3c6ca8" '
            f'stroke-width="0.5"/>')

    parts.append(
        f'<line x1="{_fmt(_MARGIN_L)}" y1="{_fmt(base_y)}" '
        f'x2="{_fmt(_MARGIN_L + plot_w)}" y2="{_fmt(base_y)}" '
        f'stroke="black" stroke-width="1"/>')
    parts.append(
        f'<line x1="{_fmt(_MARGIN_L)}" y1="{_fmt(_MARGIN_T)}" '
        f'x2="{_fmt(_MARGIN_L)}" y2="{_fmt(base_y)}" '
        f'stroke="black" stroke-width="1"/>')

    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        x = sx(v)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(base_y)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(base_y + 4)}" stroke="black" stroke-width="1"/>')
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(base_y + 17)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f'{_euro_label(v)}</text>')
    parts.append(
        f'<text x="{_fmt(_MARGIN_L + plot_w / 2)}" '
        f'y="{_fmt(base_y + 33)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">cost (EUR)</text>')
    parts.append(
        f'<text x="{_fmt(_MARGIN_L - 6)}" y="{_fmt(_MARGIN_T + 4)}" '
        f'text-anchor="end" font-family="sans-serif" font-size="10">'
        f'{peak}</text>')

    if reference.reactive is not None:
        x = sx(reference.reactive)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(_MARGIN_T)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(base_y)}" stroke="#c03020" stroke-width="1.5" '
            f'stroke-dasharray="7 4"><title>reactive</title></line>')
    if reference.maximal is not None:
        x = sx(reference.maximal)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(_MARGIN_T)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(base_y)}" stroke="#208040" stroke-width="1.5" '
            f'stroke-dasharray="1.5 3.5"><title>maximal</title></line>')

    mean = float(values.mean())
    mx = sx(mean)
    parts.append(
        f'<polygon points="{_fmt(mx - 5)},{_fmt(base_y - 1)} '
        f'{_fmt(mx + 5)},{_fmt(base_y - 1)} {_fmt(mx)},{_fmt(base_y - 9)}" '
        f'fill="black"><title>mean {_euro_label(mean)}</title></polygon>')

    parts.append('</svg>')
    return "\n".join(parts) + "\n"
