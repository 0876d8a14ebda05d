"""Command-line front end.

Every subcommand is a thin client: it builds the HTTP app in-process from
the configuration (or, with --server, connects to a running instance),
performs one request, and writes the returned artifacts to the output
directory.  Files are written atomically (temp file, then rename).

Exit codes: 0 success, 2 configuration or usage problems, 3 data problems.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from windcm.errors import CATEGORY_CONFIG, WindcmError

EXIT_CODES = {CATEGORY_CONFIG: 2}
DEFAULT_OUT = "out"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="windcm",
        description="Cost-aware condition monitoring for wind turbine fleets")
    parser.add_argument("--config", help="pipeline configuration (YAML)")
    parser.add_argument("--out", help="output directory "
                        "(default: paths.out from the configuration)")
    parser.add_argument("--server",
                        help="base URL of a running service; when given, "
                        "requests go there instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("frankenstein",
                   help="write the fleet-median reference turbine CSV")
    sub.add_parser("fit", help="fit the normal-behaviour model")
    scan = sub.add_parser("scan", help="scan seasonality orders")
    scan.add_argument("--max-order", type=int, default=15)

    residuals = sub.add_parser("residuals",
                               help="write one turbine's residual series")
    residuals.add_argument("--turbine", required=True)

    cusum = sub.add_parser("cusum", help="run the alarm engine")
    cusum.add_argument("--turbine", required=True)
    cusum.add_argument("--h", type=float, required=True,
                       help="alarm threshold")
    cusum.add_argument("--period", default="train",
                       help="train|test1|test2|test1+2")

    profile = sub.add_parser("profile",
                             help="cost-versus-threshold profile per turbine")
    profile.add_argument("--period", default="train")

    sub.add_parser("dist", help="threshold distribution and its moments")

    simulate = sub.add_parser("simulate",
                              help="Monte Carlo of the detector policy")
    _sampling_args(simulate)

    baseline = sub.add_parser("baseline", help="baseline policies")
    baseline.add_argument("policy",
                          choices=["reactive", "random", "maximal"])
    _sampling_args(baseline)

    report = sub.add_parser("report",
                            help="policy comparison report and histograms")
    _sampling_args(report)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _sampling_args(sub):
    sub.add_argument("--period", required=True,
                     help="train|test1|test2|test1+2")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--n-samples", type=int)


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _euros(cents):
    return f"{cents / 100:,.0f} EUR"


class CliFailure(Exception):
    """Carries the exit code alongside the diagnostic."""

    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class Client:
    """One request path for both in-process and remote operation."""

    def __init__(self, args):
        self.out = args.out
        if args.server:
            import httpx

            self.http = httpx.Client(base_url=args.server, timeout=120.0)
            self.out = self.out or DEFAULT_OUT
        else:
            from fastapi.testclient import TestClient

            from windcm.config import load_config
            from windcm.service import create_app

            if not args.config:
                raise CliFailure(
                    "--config is required unless --server is given", 2)
            config = load_config(args.config)
            self.http = TestClient(create_app(config))
            self.out = self.out or config.paths.out

    def post(self, endpoint, body=None):
        response = self.http.post(endpoint, json=body or {})
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            raise CliFailure(str(detail),
                             2 if response.status_code == 422 else 3)
        return response.json()

    def write(self, name, text):
        atomic_write(Path(self.out) / name, text)
        print(f"wrote {Path(self.out) / name}")


def _body(args, period=True):
    body = {}
    if period:
        body["period"] = args.period
    if getattr(args, "seed", None) is not None:
        body["seed"] = args.seed
    if getattr(args, "n_samples", None) is not None:
        body["n_samples"] = args.n_samples
    return body


def run(args):
    if args.command == "serve":
        import uvicorn

        from windcm.config import load_config
        from windcm.service import create_app

        if not args.config:
            raise CliFailure("--config is required for serve", 2)
        uvicorn.run(create_app(load_config(args.config)),
                    host=args.host, port=args.port)
        return 0

    client = Client(args)
    if args.command == "frankenstein":
        body = client.post("/frankenstein")
        client.write("frankenstein.csv", body["csv"])
    elif args.command == "fit":
        body = client.post("/fit")
        client.write("model.nbm", body["document"])
        print(f"fitted {body['target']} ~ daily:{body['n_daily']} "
              f"yearly:{body['n_yearly']} + {len(body['regressors'])} "
              "regressors")
    elif args.command == "scan":
        body = client.post("/scan", {"max_order": args.max_order})
        client.write("scan.csv", body["csv"])
    elif args.command == "residuals":
        body = client.post("/residuals", {"turbine": args.turbine})
        client.write(f"residuals_{args.turbine}.csv", body["csv"])
    elif args.command == "cusum":
        body = client.post("/cusum", {"turbine": args.turbine, "h": args.h,
                                      "period": args.period})
        client.write(f"cusum_{args.turbine}.csv", body["csv"])
        for alarm in body["alarms"]:
            sign = "+" if alarm["sign"] > 0 else "-"
            print(f"alarm {alarm['at']} ({sign}, h={alarm['threshold']:g})")
        print(f"{len(body['alarms'])} alarm(s)")
    elif args.command == "profile":
        body = client.post("/profile", {"period": args.period})
        for turbine, csv_text in sorted(body["profiles"].items()):
            client.write(f"profile_{turbine}.csv", csv_text)
    elif args.command == "dist":
        body = client.post("/dist")
        client.write("dist.csv", body["csv"])
        print(f"mean h: {body['mean_h']:.1f}  std h: {body['std_h']:.1f}")
    elif args.command == "simulate":
        body = client.post("/simulate", _body(args))
        client.write(f"samples_model_{args.period}.csv", body["csv"])
        fleet = body["fleet"]
        print(f"fleet mean {fleet['mean']:,.0f} EUR  "
              f"std {fleet['std']:,.0f} EUR  min {fleet['min']:,.0f} EUR")
    elif args.command == "baseline":
        request = _body(args)
        request["policy"] = args.policy
        body = client.post("/baseline", request)
        if args.policy == "random":
            client.write(f"samples_random_{args.period}.csv", body["csv"])
            fleet = body["fleet"]
            print(f"fleet mean {fleet['mean']:,.0f} EUR  "
                  f"std {fleet['std']:,.0f} EUR")
        else:
            for turbine, cents in sorted(body["per_turbine_cents"].items()):
                print(f"{turbine}: {_euros(cents)}")
            print(f"total: {_euros(body['total_cents'])}")
            if body.get("truncated_total_cents") is not None:
                print("truncated bound: "
                      f"{_euros(body['truncated_total_cents'])}")
    elif args.command == "report":
        body = client.post("/report", _body(args))
        from windcm.report import render_report

        client.write(f"report_{args.period}.json",
                     render_report(body["document"]))
        for policy, svg in sorted(body["histograms"].items()):
            client.write(f"hist_{policy}_{args.period}.svg", svg)
        for policy, csv_text in sorted(body["samples"].items()):
            client.write(f"samples_{policy}_{args.period}.csv", csv_text)
        for row in body["document"]["rows"]:
            dt = row["mean_dt_days"]
            print(f"{row['policy']:>9}  mean {_euros(row['mean_cents']):>12}  "
                  f"std {_euros(row['std_cents']):>12}  "
                  f"min {_euros(row['min_cents']):>12}  "
                  f"dt {'-' if dt is None else f'{dt:.1f}d':>6}  "
                  f"fp {row['n_fp']:.2f}  fn {row['n_fn']:.2f}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except CliFailure as exc:
        print(f"windcm: error: {exc}", file=sys.stderr)
        return exc.code
    except WindcmError as exc:
        print(f"windcm: error: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 3)


if __name__ == "__main__":
    sys.exit(main())
