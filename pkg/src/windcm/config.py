"""Run configuration: one YAML document collecting every pipeline knob.

All numeric ranges are validated up front so later stages can trust the
values. Relative input paths are resolved against the config file's own
directory.
"""

from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, \
    field_validator, model_validator

from .costs import CostRules
from .errors import ConfigError
from .ingest import ColumnMap, parse_timestamp


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsConfig(_Section):
    scada: str
    failures: str
    out: str = "out"


class ColumnsConfig(_Section):
    timestamp: str = "timestamp"
    turbine: str = "turbine"
    sensors: dict = Field(default_factory=dict)


class NbmConfig(_Section):
    daily_order: int = Field(default=1, ge=0)
    yearly_order: int = Field(default=1, ge=0)
    ridge: Optional[float] = Field(default=None, ge=0.0)


class CalibrationConfig(_Section):
    wait_days: float = Field(default=2.0, ge=0.0)
    baseline_days: float = Field(default=2.0, gt=0.0)


class CostConfig(_Section):
    tp_rate: float = Field(default=17000.0, ge=0.0)
    fp_cost: float = Field(default=2000.0, ge=0.0)
    fn_cost: float = Field(default=20000.0, ge=0.0)
    window: tuple = (2, 60)
    horizon: int = Field(default=60, gt=0)

    @model_validator(mode="after")
    def _check_window(self):
        try:
            self.to_rules()
        except (ValueError, TypeError) as exc:
            raise ValueError(str(exc)) from None
        return self

    def to_rules(self):
        lo, hi = self.window
        return CostRules(tp_rate=self.tp_rate, fp_cost=self.fp_cost,
                         fn_cost=self.fn_cost, window=(int(lo), int(hi)),
                         horizon=self.horizon)


class HGridConfig(_Section):
    min: float = Field(default=100.0, gt=0.0)
    max: float = Field(default=150000.0, gt=0.0)
    step: float = Field(default=100.0, gt=0.0)

    @model_validator(mode="after")
    def _check_order(self):
        if self.max < self.min:
            raise ValueError("h_grid.max must be at least h_grid.min")
        return self


class SamplingConfig(_Section):
    n_samples: int = Field(default=10000, ge=1)
    n_dates: int = Field(default=12, ge=0)
    seed: int = Field(default=42, ge=0, lt=2 ** 64)


def _as_utc(value):
    if isinstance(value, datetime):
        if value.tzinfo is None:
            return value.replace(tzinfo=timezone.utc)
        return value.astimezone(timezone.utc)
    if isinstance(value, date):
        return datetime(value.year, value.month, value.day,
                        tzinfo=timezone.utc)
    return parse_timestamp(str(value))


class PipelineConfig(_Section):
    paths: PathsConfig
    target: str
    columns: ColumnsConfig = Field(default_factory=ColumnsConfig)
    dead_sensors: list = Field(default_factory=list)
    periods: dict = Field(default_factory=dict)
    cut_days: int = Field(default=60, gt=0)
    nbm: NbmConfig = Field(default_factory=NbmConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    ma_window_days: float = Field(default=30.0, gt=0.0)
    costs: CostConfig = Field(default_factory=CostConfig)
    h_grid: HGridConfig = Field(default_factory=HGridConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)

    @field_validator("periods")
    @classmethod
    def _normalize_periods(cls, value):
        out = {}
        for name, bounds in value.items():
            try:
                begin, end = bounds
            except (TypeError, ValueError):
                raise ValueError(
                    f"period {name!r} must be a [begin, end] pair"
                ) from None
            try:
                begin, end = _as_utc(begin), _as_utc(end)
            except Exception as exc:
                raise ValueError(f"period {name!r}: {exc}") from None
            if begin >= end:
                raise ValueError(f"period {name!r} must have begin < end")
            out[str(name)] = (begin, end)
        return out

    def cost_rules(self):
        return self.costs.to_rules()

    def column_map(self):
        sensors = {str(k): str(v) for k, v in self.columns.sensors.items()}
        return ColumnMap(timestamp=self.columns.timestamp,
                         turbine=self.columns.turbine,
                         sensors=sensors or None)

    def h_values(self):
        import numpy as np

        return np.arange(self.h_grid.min, self.h_grid.max + self.h_grid.step / 2,
                         self.h_grid.step)

    def resolve_paths(self, base_dir):
        base = Path(base_dir)
        resolved = {
            key: str((base / value)) if not Path(value).is_absolute()
            else value
            for key, value in (("scada", self.paths.scada),
                               ("failures", self.paths.failures),
                               ("out", self.paths.out))
        }
        return self.model_copy(
            update={"paths": PathsConfig(**resolved)}, deep=True
        )


def parse_config(document):
    """Validate a YAML document (text or mapping) into a PipelineConfig."""
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from None
    if not isinstance(document, dict):
        raise ConfigError("config must be a YAML mapping")
    try:
        return PipelineConfig.model_validate(document)
    except ValidationError as exc:
        issues = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
            for err in exc.errors()
        )
        raise ConfigError(f"invalid config: {issues}") from None


def load_config(path):
    """Read, validate, and path-resolve a config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    config = parse_config(text)
    return config.resolve_paths(path.parent)
