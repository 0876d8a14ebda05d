"""SCADA CSV ingestion onto a fixed 10-minute grid.

Long-format sensor CSVs (one row per turbine and timestamp) are aligned
onto a shared TimeGrid, missing cells stay missing, and the failure log
becomes a sorted list of FailureEvent records. Period boundaries for the
train / test1 / test2 splits live here as well.
"""

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import (
    AlignmentError,
    ParseError,
    PeriodRangeError,
    SchemaError,
    UnknownIdError,
)

TEN_MINUTES = timedelta(minutes=10)

DEFAULT_PERIODS = {
    "train": ("2016-01-01T00:00:00Z", "2017-01-01T00:00:00Z"),
    "test1": ("2017-01-01T00:00:00Z", "2017-09-01T00:00:00Z"),
    "test2": ("2017-09-01T00:00:00Z", "2018-01-01T00:00:00Z"),
}


def parse_timestamp(text):
    """Parse an ISO 8601 timestamp; naive values are taken as UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ParseError(f"bad timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts):
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TimeGrid:
    """Regular timestamp lattice: start + k*step for k in [0, count)."""

    start: datetime
    step: timedelta = TEN_MINUTES
    count: int = 1

    def __post_init__(self):
        if self.step <= timedelta(0):
            raise ValueError("grid step must be positive")
        if self.count < 1:
            raise ValueError("grid count must be positive")
        if self.start.tzinfo is None:
            object.__setattr__(
                self, "start", self.start.replace(tzinfo=timezone.utc)
            )

    @property
    def end(self):
        """First timestamp after the grid (exclusive)."""
        return self.start + self.count * self.step

    def timestamp(self, k):
        if not 0 <= k < self.count:
            raise IndexError(f"grid index {k} outside [0, {self.count})")
        return self.start + k * self.step

    def timestamps(self):
        return [self.start + k * self.step for k in range(self.count)]

    def index_of(self, ts, snap=False):
        """Map a timestamp to its grid index.

        With snap=True, off-grid timestamps within half a step land on the
        nearest grid point; exactly half a step away is ambiguous and
        rejected.
        """
        offset = ts - self.start
        k, rem = divmod(offset, self.step)
        if rem:
            if not snap:
                raise AlignmentError(f"timestamp {format_timestamp(ts)} off grid")
            if 2 * rem < self.step:
                pass
            elif 2 * rem > self.step:
                k += 1
            else:
                raise AlignmentError(
                    f"timestamp {format_timestamp(ts)} exactly between grid points"
                )
        if not 0 <= k < self.count:
            raise AlignmentError(
                f"timestamp {format_timestamp(ts)} outside grid span"
            )
        return int(k)

    def index_range(self, begin, end):
        """Half-open index range [i0, i1) covering grid points in [begin, end)."""
        i0 = max(0, math.ceil((begin - self.start) / self.step))
        i1 = min(self.count, math.ceil((end - self.start) / self.step))
        return i0, max(i0, i1)


@dataclass(frozen=True)
class SensorPanel:
    """Aligned sensor values, shape (turbine, sensor, grid index), NaN = missing."""

    grid: TimeGrid
    turbines: tuple
    sensors: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "turbines", tuple(self.turbines))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        expected = (len(self.turbines), len(self.sensors), self.grid.count)
        if self.values.shape != expected:
            raise ValueError(
                f"panel values shape {self.values.shape} != {expected}"
            )
        if len(set(self.sensors)) != len(self.sensors):
            raise ValueError("duplicate sensor names")
        if len(set(self.turbines)) != len(self.turbines):
            raise ValueError("duplicate turbine ids")
        self.values.setflags(write=False)

    def turbine_index(self, turbine):
        try:
            return self.turbines.index(turbine)
        except ValueError:
            raise UnknownIdError(f"unknown turbine {turbine!r}") from None

    def sensor_index(self, sensor):
        try:
            return self.sensors.index(sensor)
        except ValueError:
            raise UnknownIdError(f"unknown sensor {sensor!r}") from None

    def series(self, turbine, sensor):
        """Sensor series for one turbine over the full grid (read-only)."""
        return self.values[self.turbine_index(turbine), self.sensor_index(sensor)]


@dataclass(frozen=True)
class FailureEvent:
    turbine: str
    at: datetime
    component: str = ""
    remarks: str = ""
    tp_reward_rate: float = 17000.0
    fn_cost: float = 20000.0
    fp_cost: float = 2000.0
    synthetic: bool = False

    def __post_init__(self):
        if min(self.tp_reward_rate, self.fn_cost, self.fp_cost) < 0:
            raise ValueError("failure cost fields must be non-negative")
        if self.synthetic and (self.tp_reward_rate != 0 or self.fn_cost != 0):
            raise ValueError("synthetic failures carry zero TP reward and FN cost")
        if self.at.tzinfo is None:
            object.__setattr__(self, "at", self.at.replace(tzinfo=timezone.utc))


@dataclass(frozen=True)
class PeriodSplit:
    """Named half-open evaluation window [begin, end)."""

    name: str
    begin: datetime
    end: datetime

    def __post_init__(self):
        for attr in ("begin", "end"):
            ts = getattr(self, attr)
            if ts.tzinfo is None:
                object.__setattr__(self, attr, ts.replace(tzinfo=timezone.utc))
        if self.begin >= self.end:
            raise ValueError(f"period {self.name!r}: begin must precede end")

    def contains(self, ts):
        return self.begin <= ts < self.end

    @property
    def days(self):
        return (self.end - self.begin) / timedelta(days=1)


@dataclass(frozen=True)
class ColumnMap:
    """Names of the timestamp/turbine columns and the sensor column mapping.

    sensors maps CSV column name -> canonical sensor name; None means every
    remaining header column is a sensor under its own name.
    """

    timestamp: str = "timestamp"
    turbine: str = "turbine"
    sensors: dict = None


def _open_source(csv_source):
    if hasattr(csv_source, "read"):
        return csv_source, False
    return open(os.fspath(csv_source), newline=""), True


def parse_scada(csv_source, column_map=None, step=TEN_MINUTES, grid=None):
    """Parse a long-format SCADA CSV into a SensorPanel.

    Rows are snapped to the nearest grid point when within half a step.
    Duplicate (turbine, timestamp) rows keep the last occurrence; a row
    earlier than the previous one for the same turbine is rejected. When no
    grid is given, one is inferred from the data on a wall-clock aligned
    lattice.
    """
    cmap = column_map or ColumnMap()
    handle, owned = _open_source(csv_source)
    try:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty SCADA CSV: missing header row") from None
        header = [h.strip() for h in header]
        for name in (cmap.timestamp, cmap.turbine):
            if name not in header:
                raise SchemaError(f"missing column {name!r} in SCADA header")
        ts_col = header.index(cmap.timestamp)
        tb_col = header.index(cmap.turbine)
        if cmap.sensors is None:
            sensor_cols = [
                (i, name)
                for i, name in enumerate(header)
                if i not in (ts_col, tb_col)
            ]
        else:
            for col in cmap.sensors:
                if col not in header:
                    raise SchemaError(f"mapped sensor column {col!r} not in header")
            sensor_cols = [
                (header.index(col), canon) for col, canon in cmap.sensors.items()
            ]
        if not sensor_cols:
            raise SchemaError("SCADA CSV has no sensor columns")
        sensors = tuple(name for _, name in sensor_cols)
        if len(set(sensors)) != len(sensors):
            raise SchemaError("duplicate sensor names in column map")

        rows = []
        n_cols = len(header)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise ParseError(
                    f"expected {n_cols} columns, found {len(row)}", line=line_no
                )
            try:
                ts = parse_timestamp(row[ts_col])
            except ParseError as exc:
                raise ParseError(str(exc), line=line_no) from None
            turbine = row[tb_col].strip()
            if not turbine:
                raise ParseError("empty turbine id", line=line_no)
            vals = []
            for i, _ in sensor_cols:
                cell = row[i].strip()
                if not cell:
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"bad numeric value {row[i]!r}", line=line_no
                    ) from None
            rows.append((line_no, ts, turbine, vals))

        if grid is None:
            if not rows:
                raise SchemaError("SCADA CSV has no data rows")
            grid = _infer_grid(rows, step)

        turbines = []
        t_index = {}
        last_seen = {}
        cells = {}
        for line_no, ts, turbine, vals in rows:
            try:
                k = grid.index_of(ts, snap=True)
            except AlignmentError as exc:
                raise AlignmentError(str(exc), line=line_no) from None
            if turbine not in t_index:
                t_index[turbine] = len(turbines)
                turbines.append(turbine)
            prev = last_seen.get(turbine)
            if prev is not None and k < prev:
                raise AlignmentError(
                    f"timestamps for turbine {turbine} go backwards", line=line_no
                )
            last_seen[turbine] = k
            cells[(t_index[turbine], k)] = vals

        values = np.full((len(turbines), len(sensors), grid.count), np.nan)
        for (ti, k), vals in cells.items():
            values[ti, :, k] = vals
        return SensorPanel(grid=grid, turbines=tuple(turbines), sensors=sensors,
                           values=values)
    finally:
        if owned:
            handle.close()


def _infer_grid(rows, step):
    """Wall-clock aligned grid covering all row timestamps."""
    lo = min(ts for _, ts, _, _ in rows)
    hi = max(ts for _, ts, _, _ in rows)
    anchor = lo.replace(hour=0, minute=0, second=0, microsecond=0)
    probe = TimeGrid(start=anchor - step, step=step,
                     count=int((hi - anchor) / step) + 3)
    i_lo = probe.index_of(lo, snap=True)
    i_hi = probe.index_of(hi, snap=True)
    return TimeGrid(start=probe.timestamp(i_lo), step=step,
                    count=i_hi - i_lo + 1)


def panel_to_csv(panel, out=None):
    """Serialize a panel back to the SCADA CSV schema.

    Every (turbine, grid point) row is written, including all-missing ones,
    so that reparsing reproduces the panel exactly. Floats use the shortest
    round-trip decimal representation.
    """
    import io

    buffer = out if out is not None else io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["timestamp", "turbine", *panel.sensors])
    stamps = [format_timestamp(ts) for ts in panel.grid.timestamps()]
    for ti, turbine in enumerate(panel.turbines):
        block = panel.values[ti]
        for k, stamp in enumerate(stamps):
            cells = [
                "" if math.isnan(v) else repr(v) for v in block[:, k].tolist()
            ]
            writer.writerow([stamp, turbine, *cells])
    if out is None:
        return buffer.getvalue()
    return None


def parse_failures(csv_source, known_turbines=None):
    """Parse the failure log CSV into FailureEvents sorted by (time, turbine)."""
    required = ("timestamp", "turbine", "component", "remarks")
    handle, owned = _open_source(csv_source)
    try:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("empty failure CSV: missing header row") from None
        for name in required:
            if name not in header:
                raise SchemaError(f"missing column {name!r} in failure header")
        idx = {name: header.index(name) for name in required}
        events = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} columns, found {len(row)}",
                    line=line_no,
                )
            try:
                ts = parse_timestamp(row[idx["timestamp"]])
            except ParseError as exc:
                raise ParseError(str(exc), line=line_no) from None
            turbine = row[idx["turbine"]].strip()
            if not turbine:
                raise ParseError("empty turbine id", line=line_no)
            if known_turbines is not None and turbine not in known_turbines:
                raise UnknownIdError(
                    f"line {line_no}: unknown turbine {turbine!r} in failure log"
                )
            events.append(
                FailureEvent(
                    turbine=turbine,
                    at=ts,
                    component=row[idx["component"]].strip(),
                    remarks=row[idx["remarks"]].strip(),
                )
            )
        events.sort(key=lambda e: (e.at, e.turbine))
        return events
    finally:
        if owned:
            handle.close()


def drop_dead_sensors(panel, names):
    """Remove the named sensors from a panel; everything else is untouched."""
    names = list(names)
    for name in names:
        if name not in panel.sensors:
            raise UnknownIdError(f"cannot drop unknown sensor {name!r}")
    if not names:
        return panel
    keep = [i for i, s in enumerate(panel.sensors) if s not in names]
    return SensorPanel(
        grid=panel.grid,
        turbines=panel.turbines,
        sensors=tuple(panel.sensors[i] for i in keep),
        values=panel.values[:, keep, :].copy(),
    )


def period_boundaries(overrides=None):
    """Resolve period name -> (begin, end) datetimes, with optional overrides."""
    table = dict(DEFAULT_PERIODS)
    if overrides:
        table.update(overrides)
    out = {}
    for name, (begin, end) in table.items():
        begin = begin if isinstance(begin, datetime) else parse_timestamp(begin)
        end = end if isinstance(end, datetime) else parse_timestamp(end)
        out[name] = (begin, end)
    return out


def resolve_period(name, boundaries=None):
    """Look up a period by name; "test1+2" is the union of test1 and test2."""
    table = period_boundaries(boundaries)
    if name in table:
        begin, end = table[name]
        return PeriodSplit(name=name, begin=begin, end=end)
    if name == "test1+2" and "test1" in table and "test2" in table:
        t1b, t1e = table["test1"]
        t2b, t2e = table["test2"]
        if t1e != t2b:
            raise PeriodRangeError("test1 and test2 are not adjacent")
        return PeriodSplit(name="test1+2", begin=t1b, end=t2e)
    raise PeriodRangeError(f"unknown period {name!r}")


def split_periods(grid, boundaries=None, names=("train", "test1", "test2")):
    """Materialize the named periods and check they fit the grid.

    Periods must lie within the grid span and be pairwise disjoint.
    """
    periods = []
    for name in names:
        p = resolve_period(name, boundaries)
        if p.begin < grid.start or p.end > grid.end:
            raise PeriodRangeError(
                f"period {name!r} [{format_timestamp(p.begin)}, "
                f"{format_timestamp(p.end)}) exceeds grid span"
            )
        periods.append(p)
    for i, a in enumerate(periods):
        for b in periods[i + 1:]:
            if a.begin < b.end and b.begin < a.end:
                raise PeriodRangeError(f"periods {a.name!r} and {b.name!r} overlap")
    return periods
