"""HTTP service exposing the pipeline; one workspace per configuration.

The CLI talks to this app in-process, so every artifact format (CSV, SVG,
report JSON) is produced here exactly once and written to disk unchanged
by whichever client asked for it.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from windcm.costs import distribution_moments, distribution_to_csv, profile_to_csv
from windcm.detect import trace_to_csv
from windcm.errors import CATEGORY_CONFIG, WindcmError
from windcm.fleet import median_to_csv
from windcm.ingest import format_timestamp
from windcm.nbm import serialize_model
from windcm.pipeline import Workspace, residuals_to_csv, scan_to_csv
from windcm.policies import samples_to_csv
from windcm.report import euros_to_cents
from windcm.service import schemas as sc


def _stats(dist):
    s = dist.stats
    return sc.StatsInfo(mean=s.mean, std=s.std, min=s.min,
                        q1=s.q1, median=s.median, q3=s.q3)


def create_app(config):
    app = FastAPI(title="windcm", version="0.1.0")
    app.state.workspace = Workspace(config)

    @app.exception_handler(WindcmError)
    async def windcm_error(request, exc):
        status = 422 if exc.category == CATEGORY_CONFIG else 400
        return JSONResponse(status_code=status,
                            content={"detail": str(exc),
                                     "category": exc.category})

    def ws() -> Workspace:
        return app.state.workspace

    @app.get("/health", response_model=sc.HealthResponse)
    def health():
        return sc.HealthResponse(status="ok", target=config.target)

    @app.post("/frankenstein", response_model=sc.FrankensteinResponse)
    def frankenstein():
        median = ws().median()
        return sc.FrankensteinResponse(
            csv=median_to_csv(median),
            turbines=list(ws().panel().turbines))

    @app.post("/fit", response_model=sc.FitResponse)
    def fit():
        model = ws().model()
        return sc.FitResponse(
            document=serialize_model(model), target=model.target,
            n_daily=model.n_daily, n_yearly=model.n_yearly,
            regressors=list(model.regressors))

    @app.post("/scan", response_model=sc.ScanResponse)
    def scan(req: sc.ScanRequest):
        return sc.ScanResponse(csv=scan_to_csv(ws().scan(req.max_order)))

    @app.post("/residuals", response_model=sc.ResidualsResponse)
    def residuals(req: sc.ResidualsRequest):
        series = ws().residual_series(req.turbine)
        return sc.ResidualsResponse(csv=residuals_to_csv(series),
                                    turbine=req.turbine)

    @app.post("/cusum", response_model=sc.CusumResponse)
    def cusum(req: sc.CusumRequest):
        trace, alarms = ws().cusum(req.turbine, req.h, req.period)
        return sc.CusumResponse(
            csv=trace_to_csv(trace, ws().panel().grid),
            alarms=[sc.AlarmInfo(at=format_timestamp(a.at), sign=a.sign,
                                 threshold=a.threshold) for a in alarms])

    @app.post("/profile", response_model=sc.ProfileResponse)
    def profile(req: sc.ProfileRequest):
        profiles = ws().profiles(req.period)
        return sc.ProfileResponse(
            period=req.period,
            profiles={p.turbine: profile_to_csv(p) for p in profiles})

    @app.post("/dist", response_model=sc.DistResponse)
    def dist():
        d = ws().distribution()
        mean_h, std_h = distribution_moments(d)
        return sc.DistResponse(csv=distribution_to_csv(d), mean_h=mean_h,
                               std_h=std_h, turbines=list(d.turbines))

    def _mc_response(req, per_turbine, fleet):
        return sc.SimulateResponse(
            csv=samples_to_csv(per_turbine, fleet),
            period=req.period,
            seed=config.sampling.seed if req.seed is None else req.seed,
            n_samples=(config.sampling.n_samples if req.n_samples is None
                       else req.n_samples),
            fleet=_stats(fleet),
            per_turbine={t: _stats(d) for t, d in per_turbine.items()})

    @app.post("/simulate", response_model=sc.SimulateResponse)
    def simulate(req: sc.SimulateRequest):
        per_turbine, fleet = ws().simulate(req.period, req.seed,
                                           req.n_samples)
        return _mc_response(req, per_turbine, fleet)

    @app.post("/baseline", response_model=sc.BaselineResponse)
    def baseline(req: sc.BaselineRequest):
        if req.policy == "random":
            per_turbine, fleet = ws().random_policy(req.period, req.seed,
                                                    req.n_samples)
            return sc.BaselineResponse(
                policy="random", period=req.period,
                csv=samples_to_csv(per_turbine, fleet), fleet=_stats(fleet))
        result = ws().baseline(req.policy, req.period)
        truncated = result.truncated_total
        return sc.BaselineResponse(
            policy=req.policy, period=req.period,
            total_cents=euros_to_cents(result.total),
            per_turbine_cents={t: euros_to_cents(v)
                               for t, v in result.per_turbine.items()},
            truncated_total_cents=(None if truncated is None
                                   else euros_to_cents(truncated)))

    @app.post("/report", response_model=sc.ReportResponse)
    def report(req: sc.ReportRequest):
        bundle = ws().report(req.period, req.seed, req.n_samples)
        samples = {policy: samples_to_csv(mc[0], mc[1])
                   for policy, mc in bundle.distributions.items()}
        return sc.ReportResponse(document=bundle.document,
                                 histograms=bundle.histograms,
                                 samples=samples)

    return app
