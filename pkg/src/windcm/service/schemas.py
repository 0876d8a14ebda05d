"""Request and response bodies for the HTTP service.

Tabular payloads travel as CSV text inside JSON fields: the CSV formats
are the artifact formats the CLI writes to disk, and the service is the
single place they are produced.  Deterministic money totals are integer
euro cents; sample statistics stay float euros.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class ScanRequest(BaseModel):
    max_order: int = Field(default=15, ge=0, le=15)


class ResidualsRequest(BaseModel):
    turbine: str


class CusumRequest(BaseModel):
    turbine: str
    h: float = Field(gt=0)
    period: str = "train"


class ProfileRequest(BaseModel):
    period: str = "train"


class SimulateRequest(BaseModel):
    period: str
    seed: int | None = Field(default=None, ge=0, lt=2 ** 64)
    n_samples: int | None = Field(default=None, ge=1)


class BaselineRequest(SimulateRequest):
    policy: Literal["reactive", "random", "maximal"]


class ReportRequest(SimulateRequest):
    pass


class HealthResponse(BaseModel):
    status: str
    target: str


class FrankensteinResponse(BaseModel):
    csv: str
    turbines: list[str]


class FitResponse(BaseModel):
    document: str
    target: str
    n_daily: int
    n_yearly: int
    regressors: list[str]


class ScanResponse(BaseModel):
    csv: str


class ResidualsResponse(BaseModel):
    csv: str
    turbine: str


class AlarmInfo(BaseModel):
    at: str
    sign: int
    threshold: float


class CusumResponse(BaseModel):
    csv: str
    alarms: list[AlarmInfo]


class ProfileResponse(BaseModel):
    period: str
    profiles: dict[str, str]    # turbine -> CSV text


class DistResponse(BaseModel):
    csv: str
    mean_h: float
    std_h: float
    turbines: list[str]


class StatsInfo(BaseModel):
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float


class SimulateResponse(BaseModel):
    csv: str
    period: str
    seed: int
    n_samples: int
    fleet: StatsInfo
    per_turbine: dict[str, StatsInfo]


class BaselineResponse(BaseModel):
    policy: str
    period: str
    total_cents: int | None = None
    per_turbine_cents: dict[str, int] | None = None
    truncated_total_cents: int | None = None
    csv: str | None = None
    fleet: StatsInfo | None = None


class ReportResponse(BaseModel):
    document: dict
    histograms: dict[str, str]  # policy -> SVG text
    samples: dict[str, str]     # policy -> CSV text
