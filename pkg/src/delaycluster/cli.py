"""Command-line entry point.

Every command is deterministic given its flags.  JSON outputs carry a
``schema_version``; CSV outputs keep their documented headers and, when
written to a file, get a ``<file>.meta.json`` sidecar with the same metadata.

Exit codes: 0 success, 2 invalid input or parameters outside a domain of
validity, 3 a verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._common import DEFAULT_SEED, DomainError
from .bounds import (
    EpsilonRangeWarning,
    a_eps,
    b1_of_delta,
    b_eps,
    bound_report,
    epsilon0,
    eta_inverse,
    hypothesis_constants,
)
from .cluster import ClusterConfig, cluster_sum, z_direct
from .ergodicity import clt_check, estimate_covariance, green_kubo_variance, observable
from .inequalities import inequality_suite, verify_generalized_hoelder
from .optimize import TABLE_LAMBDAS, conjecture_check, reproduce_table
from .ou import OUParams, SamplePath, m_delta
from .sim import DRIFT_KINDS, DriftSpec, SimConfig, simulate_delay, simulate_reference

SCHEMA_VERSION = 1
EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY = 0, 2, 3
IDENTITY_TOL = 1e-6

DEFAULTS = {
    "lambda": 1.0,
    "sigma": math.sqrt(2.0),
    "delta": 2.0,
    "epsilon": 1.0,
    "a": 6.0,
    "t0": 1.0,
    "amplitude": 0.05,
    "dt": 0.01,
    "n_samples": 10_000,
    "seed": DEFAULT_SEED,
    "output": None,
    "format": None,
    # command specific
    "which": "mdelta",
    "range": None,
    "points": 100,
    "lambdas": None,
    "drift": "occupation_time",
    "lo": None,
    "hi": None,
    "horizon": 1000.0,
    "burn_in": None,
    "reference": False,
    "max_lag": 10.0,
    "observable": "identity",
    "replicas": 0,
    "n_blocks": 1,
    "trials": 10_000,
}

FIGURE_RANGES = {"mdelta": (2.0, 10.0), "beps": (0.1, 10.0), "b1": (2.0, 4.0)}


class VerificationFailure(RuntimeError):
    pass


def _add_common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("common")
    g.add_argument("--lambda", dest="lambda", type=float, help="mean-reversion rate (default 1)")
    g.add_argument("--sigma", type=float, help="noise intensity (default sqrt 2)")
    g.add_argument("--delta", type=float, help="hypercontractivity time delta (default 2)")
    g.add_argument("--epsilon", type=float, help="cluster-estimate level (default 1)")
    g.add_argument("--a", type=float, help="block length (default 6)")
    g.add_argument("--t0", type=float, help="drift delay (default 1)")
    g.add_argument("--amplitude", type=float, help="sup-norm of the drift (default 0.05)")
    g.add_argument("--dt", type=float, help="time step (default 0.01)")
    g.add_argument("--n-samples", dest="n_samples", type=int, help="Monte Carlo samples (default 10000)")
    g.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    g.add_argument("--output", help="output file (default stdout)")
    g.add_argument("--format", choices=("csv", "json"), help="output format")
    g.add_argument("--config", help="JSON file of parameter defaults; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delaycluster", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="explicit constants of the cluster estimate (JSON)")
    _add_common(p)

    p = sub.add_parser("figures", help="curve data as x,y CSV")
    _add_common(p)
    p.add_argument("--which", choices=sorted(FIGURE_RANGES))
    p.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--points", type=int)

    p = sub.add_parser("table", help="optimal delta and b1 for a list of lambdas")
    _add_common(p)
    p.add_argument("--lambdas", help="comma-separated list (default: the reference eight)")

    for name, helptext in (
        ("simulate", "one path of the delay SDE (t,x CSV)"),
        ("decorrelate", "covariance decay and Green-Kubo variance"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--drift", choices=DRIFT_KINDS)
        p.add_argument("--lo", type=float, help="lower end of the drift's set A")
        p.add_argument("--hi", type=float, help="upper end of the drift's set A")
        p.add_argument("--horizon", type=float)
        p.add_argument("--burn-in", dest="burn_in", type=float)
        p.add_argument("--reference", action="store_true", default=None, help="exact OU path, no drift")
        if name == "decorrelate":
            p.add_argument("--max-lag", dest="max_lag", type=float)
            p.add_argument("--observable", choices=("identity", "square", "positive", "zero"))
            p.add_argument("--replicas", type=int, help="also run the CLT check with this many replicas")

    p = sub.add_parser("cluster-verify", help="compare the cluster sum with direct Monte Carlo")
    _add_common(p)
    p.add_argument("--n-blocks", dest="n_blocks", type=int)
    p.add_argument("--drift", choices=DRIFT_KINDS)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)

    p = sub.add_parser("ineq-check", help="randomised inequality suites")
    _add_common(p)
    p.add_argument("--trials", type=int)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the --config file, then explicit flags.

    Only the parameters the chosen command accepts are kept, so a shared
    config file may hold keys for other commands.
    """
    accepted = set(vars(args)) - {"command", "config"}
    params = {k: DEFAULTS[k] for k in accepted}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise DomainError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        params.update({k: v for k, v in cfg.items() if k in accepted})
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        params[key] = value
    return params


def _metadata(command: str, params: dict) -> dict:
    shown = {k: v for k, v in params.items() if k not in ("output", "format")}
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": shown,
        "versions": {"delaycluster": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


def _csv(header: str, rows, fmt=repr) -> str:
    """CSV text; floats use ``fmt`` (shortest round-trip form by default)."""
    lines = [header]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, params: dict, meta: dict | None = None) -> None:
    out = params.get("output")
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    if meta is not None:
        Path(str(path) + ".meta.json").write_text(_dump_json(meta))


def _ou(params) -> OUParams:
    return OUParams(float(params["lambda"]), float(params["sigma"]))


def _drift(params, kind=None) -> DriftSpec:
    extra = {k: float(params[k]) for k in ("lo", "hi") if params.get(k) is not None}
    return DriftSpec(kind or params["drift"], float(params["t0"]), float(params["amplitude"]), extra)


def cmd_bounds(params) -> int:
    p = _ou(params)
    delta, eps = float(params["delta"]), float(params["epsilon"])
    h = hypothesis_constants(p, delta)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EpsilonRangeWarning)
        report = bound_report(eps, h)
    payload = _metadata("bounds", params)
    payload["report"] = asdict(report) | {"m_delta": h.m_delta, "c_p": h.c_p}
    payload["warnings"] = [str(w.message) for w in caught]
    _emit(_dump_json(payload), params)
    return EXIT_OK


def _figure_rows(which: str, params, lo: float, hi: float, points: int):
    p = _ou(params)
    if which == "beps":
        h = hypothesis_constants(p, float(params["delta"]))
        xs = np.linspace(lo, hi, points)
        if lo <= 0:
            raise DomainError("epsilon range must be positive")
        return [(float(x), b_eps(float(x), h)) for x in xs]
    xs = np.linspace(lo, hi, points)
    if which == "mdelta":
        ys = [m_delta(float(x), p) for x in xs]
        if any(math.isinf(y) for y in ys):
            raise DomainError(f"M_delta is infinite below delta = ln(7)/lambda = {math.log(7) / p.lam:.6g}")
        return [(float(x), y) for x, y in zip(xs, ys)]
    return [(float(x), b1_of_delta(float(x), p)) for x in xs]


def cmd_figures(params) -> int:
    which = params["which"]
    if which not in FIGURE_RANGES:
        raise DomainError(f"unknown figure {which!r}")
    lo, hi = params["range"] or FIGURE_RANGES[which]
    points = int(params["points"])
    if points < 2 or not lo < hi:
        raise DomainError("need at least two points and lo < hi")
    rows = _figure_rows(which, params, float(lo), float(hi), points)
    if params["format"] == "json":
        payload = _metadata("figures", params) | {"x": [r[0] for r in rows], "y": [r[1] for r in rows]}
        _emit(_dump_json(payload), params)
    else:
        _emit(_csv("x,y", rows), params, _metadata("figures", params))
    return EXIT_OK


def _lambdas(params):
    raw = params["lambdas"]
    if raw is None:
        return TABLE_LAMBDAS
    if isinstance(raw, str):
        try:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError as exc:
            raise DomainError(f"cannot parse lambdas {raw!r}") from exc
    return tuple(float(v) for v in raw)


def cmd_table(params) -> int:
    lambdas = _lambdas(params)
    if not lambdas:
        raise DomainError("empty lambda list")
    records = reproduce_table(lambdas)
    rows = [(r.lam, r.delta_star, r.b1_star) for r in records]
    if params["format"] == "json":
        payload = _metadata("table", params)
        payload["rows"] = [dict(zip(("lambda", "delta_star", "b1_star"), r)) for r in rows]
        if len(records) >= 2:
            payload["scale_free"] = asdict(conjecture_check(records))
        _emit(_dump_json(payload), params)
    else:
        _emit(_csv("lambda,delta_star,b1_star", rows), params, _metadata("table", params))
    return EXIT_OK


def _sim_config(params) -> SimConfig:
    return SimConfig(
        dt=float(params["dt"]),
        horizon=float(params["horizon"]),
        burn_in=None if params["burn_in"] is None else float(params["burn_in"]),
        seed=int(params["seed"]),
    )


def _path(params) -> SamplePath:
    p, cfg = _ou(params), _sim_config(params)
    if params["reference"]:
        return simulate_reference(p, cfg)
    return simulate_delay(p, _drift(params), cfg)


def cmd_simulate(params) -> int:
    path = _path(params)
    if params["format"] == "json":
        payload = _metadata("simulate", params)
        payload["path"] = {
            "start_time": path.start_time,
            "dt": path.dt,
            "mean": float(path.values.mean()),
            "variance": float(path.values.var()),
            "values": path.values,
        }
        _emit(_dump_json(payload), params)
    else:
        rows = [(float(t), float(x)) for t, x in zip(path.times, path.values)]
        _emit(_csv("t,x", rows, lambda v: f"{v:.17g}"), params, _metadata("simulate", params))
    return EXIT_OK


def cmd_decorrelate(params) -> int:
    path = _path(params)
    f = observable(params["observable"])
    curve = estimate_covariance(path, f, f, float(params["max_lag"]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        gk = green_kubo_variance(curve)
    summary = {
        "fit": asdict(curve.fit),
        "green_kubo": asdict(gk),
        "cov0": float(curve.cov[0]),
        "warnings": [str(w.message) for w in caught],
    }
    if int(params["replicas"]) > 0:
        spec = DriftSpec("zero", float(params["t0"]), 0.0) if params["reference"] else _drift(params)
        report = clt_check(_ou(params), spec, _sim_config(params), f, int(params["replicas"]))
        summary["clt"] = report.to_dict()
    if params["format"] == "csv":
        rows = [(float(l), float(c), float(s)) for l, c, s in zip(curve.lags, curve.cov, curve.se)]
        _emit(_csv("lag,cov,se", rows), params, _metadata("decorrelate", params) | {"summary": summary})
    else:
        _emit(_dump_json(_metadata("decorrelate", params) | {"summary": summary}), params)
    return EXIT_OK


def cmd_cluster_verify(params) -> int:
    p = _ou(params)
    spec = _drift(params)
    cfg = ClusterConfig(int(params["n_blocks"]), float(params["a"]), float(params["t0"]), float(params["dt"]))
    n, seed = int(params["n_samples"]), int(params["seed"])
    result = cluster_sum(cfg, spec, p, n, seed)
    direct = z_direct(cfg, spec, p, n, seed)
    diff = result.total.mean - direct.mean
    combined = math.hypot(result.total.std_error, direct.std_error)
    if result.total.method == "quadrature":
        verified = abs(result.total.mean - 1.0) <= IDENTITY_TOL and direct.mean == 1.0
        tolerance = IDENTITY_TOL
    else:
        verified = abs(diff) <= 3.0 * combined
        tolerance = 3.0 * combined
    report = {
        "cluster_sum": asdict(result.total),
        "z_direct": asdict(direct),
        "difference": diff,
        "combined_se": combined,
        "tolerance": tolerance,
        "verified": verified,
        "n_families": len(result.families),
        "gammas": [dict(zip(("tau_lo", "tau_hi", "gamma_mean", "gamma_se"), r)) for r in result.table_rows()],
    }
    if spec.amplitude > 0:
        try:
            h = hypothesis_constants(p, float(params["delta"]))
            eta = eta_inverse(spec.amplitude, h)
            report["eta"] = eta
            report["a_eps_eta"] = a_eps(eta, h)
            report["epsilon0"] = epsilon0(h)
        except DomainError as exc:
            report["eta"] = None
            report["eta_note"] = str(exc)
    meta = _metadata("cluster-verify", params) | {"report": report}
    if params["format"] == "csv":
        _emit(_csv("tau_lo,tau_hi,gamma_mean,gamma_se", result.table_rows()), params, meta)
    else:
        _emit(_dump_json(meta), params)
    if not verified:
        raise VerificationFailure(f"cluster sum and direct estimate differ by {diff:.3g} (tolerance {tolerance:.3g})")
    return EXIT_OK


def cmd_ineq(params) -> int:
    trials, seed = int(params["trials"]), int(params["seed"])
    elementary = inequality_suite(trials, seed)
    hoelder = verify_generalized_hoelder(trials, seed)
    payload = _metadata("ineq-check", params)
    payload["elementary"] = elementary.to_dict()
    payload["hoelder"] = hoelder.to_dict()
    payload["violations"] = elementary.violations + hoelder.violations
    _emit(_dump_json(payload), params)
    if payload["violations"]:
        raise VerificationFailure(f"{payload['violations']} inequality violations")
    return EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "figures": cmd_figures,
    "table": cmd_table,
    "simulate": cmd_simulate,
    "decorrelate": cmd_decorrelate,
    "cluster-verify": cmd_cluster_verify,
    "ineq-check": cmd_ineq,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = resolve(args)
        return COMMANDS[args.command](params)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
