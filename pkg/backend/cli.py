"""
Command-line entry point: one subcommand per operation, JSON reports with a
provenance block, exit codes 1 (parse), 2 (input invariant), 3 (numerical).

    python cli.py classify --operator zoo:laplacian_scalar --n 2
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from config import TOOL_NAME, TOOL_VERSION, configure_logging
from errors import CellipticError, InputInvariantError, InputParseError, OrderMismatchError
from fine_properties import (EPS_SLOPE, RADIUS_FACTORS, continuity_check_k_eq_n, gradient_continuity_check_k_gt_n,
                             lebesgue_scan, linfty_bound_check, verdicts_to_csv)
from grid_calculus import dyadic_profile, poincare_ratio
from grid_store import (load_grid_file, load_measure_file, save_grid_file, save_measure_file, sidecar_path,
                        write_report)
from measures import fractional_maximal, restrict, riesz_potential
from models import MeasureFile, PolynomialModel, ProjectionReportModel, Provenance, RunConfig
from operator_core import Operator, ensure_valid
from poly_nullspace import stabilized_nullspace
from regions import Region, l1_stability_ratio, project_l2
from symbol_analysis import c_ellipticity_classify
from synth import KINDS, synthesize_test_function
from zoo import zoo_operator

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("classify", "nullspace", "project", "riesz", "maximal", "profile",
               "lebesgue-scan", "continuity-check", "linfty-check", "synth")


def resolve_operator(spec: Optional[str], n: int, order: Optional[int] = None) -> Operator:
    """`zoo:name` or a path to an operator JSON file"""
    if not spec:
        raise InputParseError("an --operator is required")
    if spec.startswith("zoo:"):
        op = zoo_operator(spec, n, order)
    else:
        if not os.path.exists(spec):
            raise InputParseError(f"operator file not found: {spec}")
        with open(spec) as f:
            op = Operator.from_json(f.read())
    return ensure_valid(op)


def _region(params: Dict[str, Any]) -> Region:
    lam = float(params.get("lambda") or 0.0)
    kind = "annulus" if lam > 0 or params.get("annulus") else "ball"
    return Region(kind, params["center"], params["radius"], lam)


def _classify(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    p = config.params
    report = c_ellipticity_classify(op, d_max=p.get("dmax"), restarts=p.get("restarts", 32),
                                    tol=p.get("tol", 1e-8), seed=config.seed, grid_depth=p.get("depth", 4))
    return report.to_model()


def _nullspace(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    return stabilized_nullspace(op, config.params.get("dmax", 8)).to_model()


def _project(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    u = load_grid_file(config.grid)
    region = _region(config.params)
    result = stabilized_nullspace(op, config.params.get("dmax", max(8, op.k + 2)))
    if not result.stabilized:
        raise InputInvariantError("the operator's polynomial nullspace does not stabilize; no projection exists")
    projection = project_l2(u, result.basis, region)
    lhs, rhs, _ = poincare_ratio(op, u, region, result.basis)
    return ProjectionReportModel(
        region=region.to_model(),
        projection=PolynomialModel(**projection.to_dict()),
        l1_stability_ratio=l1_stability_ratio(u, result.basis, region),
        poincare_lhs=lhs,
        poincare_rhs=rhs,
    )


def _riesz(config: RunConfig) -> Any:
    mu = load_measure_file(config.measure)
    p = config.params
    if p.get("radius"):
        mu = restrict(mu, Region.ball(p["x0"], p["radius"]))
    return riesz_potential(mu, p["s"], p["x0"]).to_model()


def _maximal(config: RunConfig) -> Any:
    mu = load_measure_file(config.measure)
    p = config.params
    value = fractional_maximal(mu, p["k"], p["x0"], p.get("radii") or None)
    return {"k": p["k"], "x0": p["x0"], "value": value}


def _profile(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    u = load_grid_file(config.grid)
    p = config.params
    return dyadic_profile(u, op, p["x0"], p["r"], p.get("jmax", 6)).to_model()


def _lebesgue_scan(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    ladder = [load_grid_file(path) for path in config.grids]
    p = config.params
    verdicts = lebesgue_scan(op, ladder, p["points"], p["r"], p.get("jmax", 6), p.get("eps_slope", EPS_SLOPE),
                             p.get("radius_factors") or RADIUS_FACTORS)
    if config.csv:
        verdicts_to_csv(verdicts, config.csv)
    return [v.to_model() for v in verdicts]


def _continuity_check(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    u = load_grid_file(config.grid)
    p = config.params
    centers = p.get("centers") or None
    if op.k == op.n:
        report = continuity_check_k_eq_n(op, u, p["r"], centers=centers)
    elif op.k > op.n:
        report = gradient_continuity_check_k_gt_n(op, u, p["r"], centers=centers)
    else:
        raise OrderMismatchError(f"continuity checks need k >= n, got k={op.k}, n={op.n}")
    return report.to_model()


def _linfty_check(config: RunConfig) -> Any:
    op = resolve_operator(config.operator, config.n, config.order)
    u = load_grid_file(config.grid)
    p = config.params
    return linfty_bound_check(op, u, Region.ball(p["center"], p["radius"])).to_model()


def _synth(config: RunConfig) -> Any:
    p = config.params
    if not config.out:
        raise InputParseError("synth needs --out for the grid file")
    if p.get("measure_out") and os.path.abspath(p["measure_out"]) == os.path.abspath(sidecar_path(config.out)):
        raise InputParseError(f"--measure-out would overwrite the grid sidecar {sidecar_path(config.out)}")
    u = synthesize_test_function(p["kind"], p["lower"], p["upper"], p["h"], p.get("kind_params"))
    save_grid_file(u, config.out, {"kind": p["kind"], "params": p.get("kind_params") or {}})
    report = {
        "grid": os.path.basename(config.out),
        "shape": list(u.shape),
        "dim": u.dim,
        "h": u.h,
        "mean": np.mean(u.flat_values(), axis=0).tolist(),
    }
    if p.get("measure_out"):
        rel = os.path.relpath(os.path.abspath(config.out), os.path.dirname(os.path.abspath(p["measure_out"])))
        save_measure_file(MeasureFile(atoms=[], density_ref=rel), p["measure_out"])
        report["measure"] = os.path.basename(p["measure_out"])
    return report


HANDLERS = {
    "classify": _classify,
    "nullspace": _nullspace,
    "project": _project,
    "riesz": _riesz,
    "maximal": _maximal,
    "profile": _profile,
    "lebesgue-scan": _lebesgue_scan,
    "continuity-check": _continuity_check,
    "linfty-check": _linfty_check,
    "synth": _synth,
}


def _report_path(config: RunConfig) -> Optional[str]:
    # synth writes its grid to --out; its report goes to --report
    if config.subcommand == "synth":
        return config.params.get("report")
    return config.out


def run(config: RunConfig) -> int:
    """Dispatch one subcommand, write its report, return the exit code"""
    provenance = Provenance(tool=TOOL_NAME, version=TOOL_VERSION, seed=config.seed,
                            config=config.model_dump(mode="json"))
    logger.info("%s: starting", config.subcommand)
    try:
        handler = HANDLERS.get(config.subcommand)
        if handler is None:
            raise InputParseError(f"unknown subcommand '{config.subcommand}'")
        try:
            result = handler(config)
        except KeyError as e:
            raise InputParseError(f"missing parameter {e}")
        payload = {"provenance": provenance.model_dump(mode="json"), "report": _plain(result)}
        code = 0
    except CellipticError as e:
        logger.error("%s failed: %s", config.subcommand, e.detail)
        payload = {
            "provenance": provenance.model_dump(mode="json"),
            "error": {"type": type(e).__name__, "detail": e.detail, "exit_code": e.exit_code},
        }
        code = e.exit_code
    text = write_report(payload, _report_path(config))
    if not _report_path(config):
        sys.stdout.write(text)
    logger.info("%s: finished with exit code %d", config.subcommand, code)
    return code


def _plain(result: Any) -> Any:
    if isinstance(result, list):
        return [_plain(r) for r in result]
    if hasattr(result, "model_dump"):
        return result.model_dump(mode="json", by_alias=True)
    return result


def _load_json_arg(text: Optional[str]) -> Any:
    if text is None:
        return None
    if os.path.exists(text):
        with open(text) as f:
            text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputParseError(f"cannot parse JSON argument: {e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="C-elliptic operators and fine properties of BV^A functions")
    parser.add_argument("--log-level", default=None, help="override CELLIPTIC_LOG_LEVEL")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, operator=True):
        if operator:
            p.add_argument("--operator", required=True, help="zoo:<name> or operator JSON file")
            p.add_argument("--n", type=int, default=2)
            p.add_argument("--order", type=int, default=None, help="order for zoo:higher_gradient")
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("classify")
    common(p)
    p.add_argument("--dmax", type=int, default=None)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--depth", type=int, default=4)

    p = sub.add_parser("nullspace")
    common(p)
    p.add_argument("--dmax", type=int, default=8)

    p = sub.add_parser("project")
    common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--center", type=float, nargs="+", required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)

    p = sub.add_parser("riesz")
    common(p, operator=False)
    p.add_argument("--measure", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--x0", type=float, nargs="+", required=True)
    p.add_argument("--radius", type=float, default=None, help="restrict to B(x0, radius) first")

    p = sub.add_parser("maximal")
    common(p, operator=False)
    p.add_argument("--measure", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x0", type=float, nargs="+", required=True)
    p.add_argument("--radii", type=float, nargs="*", default=None)

    p = sub.add_parser("profile")
    common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--x0", type=float, nargs="+", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--jmax", type=int, default=6)

    p = sub.add_parser("lebesgue-scan")
    common(p)
    p.add_argument("--grids", nargs="+", required=True, help="resolution ladder, coarse to fine")
    p.add_argument("--x0", type=float, nargs="+", action="append", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--jmax", type=int, default=6)
    p.add_argument("--eps-slope", type=float, default=EPS_SLOPE)
    p.add_argument("--radius-factors", type=float, nargs="+", default=None,
                   help="tested radii as fractions of --r (default 1 0.5 0.25)")
    p.add_argument("--csv", default=None)

    p = sub.add_parser("continuity-check")
    common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--center", type=float, nargs="+", action="append", default=None)

    p = sub.add_parser("linfty-check")
    common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--center", type=float, nargs="+", required=True)
    p.add_argument("--radius", type=float, required=True)

    p = sub.add_parser("synth")
    common(p, operator=False)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--lower", type=float, nargs="+", required=True)
    p.add_argument("--upper", type=float, nargs="+", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--params", default=None, help="JSON object or file with kind parameters")
    p.add_argument("--measure-out", default=None)
    p.add_argument("--report", default=None)
    return parser


PARAM_FIELDS = {
    "classify": ("dmax", "restarts", "tol", "depth"),
    "nullspace": ("dmax",),
    "project": ("center", "radius", "lam"),
    "riesz": ("s", "x0", "radius"),
    "maximal": ("k", "x0", "radii"),
    "profile": ("x0", "r", "jmax"),
    "lebesgue-scan": ("x0", "r", "jmax", "eps_slope", "radius_factors"),
    "continuity-check": ("r", "center"),
    "linfty-check": ("center", "radius"),
    "synth": ("kind", "lower", "upper", "h", "params", "measure_out", "report"),
}

RENAMES = {"lam": "lambda", "params": "kind_params"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params: Dict[str, Any] = {}
    for name in PARAM_FIELDS[args.subcommand]:
        value = getattr(args, name, None)
        if name == "params":
            value = _load_json_arg(value)
        params[RENAMES.get(name, name)] = value
    if args.subcommand == "lebesgue-scan":
        params["points"] = params.pop("x0")
    if args.subcommand == "continuity-check":
        params["centers"] = params.pop("center")
    grids: List[str] = getattr(args, "grids", None) or []
    return RunConfig(
        subcommand=args.subcommand,
        operator=getattr(args, "operator", None),
        n=getattr(args, "n", 2),
        order=getattr(args, "order", None),
        grid=getattr(args, "grid", None),
        grids=grids,
        measure=getattr(args, "measure", None),
        params={k: v for k, v in params.items() if v is not None},
        out=args.out,
        csv=getattr(args, "csv", None),
        seed=args.seed,
    )


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors, which is the invariant code here
        return 0 if e.code in (0, None) else InputParseError.exit_code
    configure_logging((args.log_level or os.getenv("CELLIPTIC_LOG_LEVEL", "INFO")).upper())
    try:
        config = config_from_args(args)
    except CellipticError as e:
        logger.error("%s", e.detail)
        return e.exit_code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
