"""Command-line front end: ``sideways {forward,trace,cauchy,full,study}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, GridError, InvalidEpsilon, NoConvergence, NonContractive
from .forward_solver import picard_solve
from .grid_spectral import GridFunction, l2_norm, sup_norm, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NONCONTRACTIVE, EXIT_NOCONVERGENCE = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--eps", type=float, nargs="+", help="noise level(s); single-run commands use the first")
    common.add_argument("--seed", type=int, help="noise seed")
    common.add_argument("--grid-n", type=int, help="x points")
    common.add_argument("--grid-m", type=int, help="y points of the exterior grid")
    common.add_argument("--x-half-width", type=float, help="x truncation X of [-X, X]")
    common.add_argument("--y-max", type=float, help="y truncation of the exterior grid")

    parser = argparse.ArgumentParser(prog="sideways", description="Sideways heat problem solvers and studies.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", parents=[common], help="solve the exterior problem y > 1 (noise-free trace)")
    sub.add_parser("trace", parents=[common], help="derivative trace psi_eps from a noisy trace")
    sub.add_parser("cauchy", parents=[common], help="regularized harmonic part v_eps on 0 < y < 1")
    sub.add_parser("full", parents=[common], help="regularized solution u_eps = v_eps + w_eps")
    sub.add_parser("study", parents=[common], help="eps sweep with error table and rate fits")
    return parser


def resolve_config(args) -> harness.StudyConfig:
    cfg = harness.StudyConfig()
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = harness.config_from_json(data, cfg)
    overrides = {}
    for flag, key in (("grid_n", "n"), ("grid_m", "m"), ("x_half_width", "x"), ("y_max", "y_max"), ("seed", "seed")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    if args.eps is not None:
        overrides["eps"] = tuple(args.eps)
    return harness._replace(cfg, **overrides) if overrides else cfg


def _forward(cfg, out: Path):
    problem = harness.manufacture_problem1()
    phi = GridFunction.from_callable(cfg.x_grid, problem.phi)
    u, rep = picard_solve(phi, problem.src, cfg.problem1)
    exact = GridFunction.from_callable(cfg.exterior_grid, problem.exact_u)
    xr, yr = harness.WINDOW_EXTERIOR
    harness.write_surface(u, out / "surface_forward_u.csv", xr, yr)
    rel = sup_norm(u - exact, xr, yr) / sup_norm(exact, xr, yr)
    return {"report": rep.to_dict(), "relative_sup_error": rel}


def _single(cfg, out: Path, stage: str):
    eps = cfg.eps[0]
    problem = harness.manufacture_problem2()
    res = harness.run_pipeline(cfg, eps, cfg.seed, problem)
    xr, yr = harness.WINDOW_STRIP
    payload = {"eps": eps, "reports": {"trace": res.reports["trace"].to_dict()}}
    if stage == "trace":
        write_csv(res.psi_eps, out / "trace_psi.csv")
        payload["psi_err"] = l2_norm(res.psi_eps - harness.reference_psi(cfg, problem))
        return payload
    payload["reports"]["cauchy"] = res.reports["cauchy"].to_dict()
    V = GridFunction.from_callable(cfg.strip_grid, problem.exact_v)
    harness.write_surface(res.v_eps, out / "surface_v_eps.csv", xr, yr)
    payload["v_rel"] = l2_norm(res.v_eps - V, xr, yr) / l2_norm(V, xr, yr)
    if stage == "full":
        payload["reports"]["nonlinear"] = res.reports["nonlinear"].to_dict()
        U = GridFunction.from_callable(cfg.strip_grid, problem.exact_u)
        harness.write_surface(res.u_eps, out / "surface_u_eps.csv", xr, yr)
        payload["u_rel"] = l2_norm(res.u_eps - U, xr, yr) / l2_norm(U, xr, yr)
    return payload


def run(args) -> int:
    cfg = resolve_config(args)
    if args.command == "study":
        result = harness.run_study(cfg)
        for p in harness.emit_outputs(result, args.out):
            print(p)
        return EXIT_OK
    out = harness._open_dir(args.out)
    if args.command == "forward":
        payload = {"forward": _forward(cfg, out)}
    else:
        payload = _single(cfg, out, args.command)
    harness.write_report(out / "report.json", {"command": args.command, "config": cfg.to_json(), **payload})
    print(out / "report.json")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ConfigError, InvalidEpsilon, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonContractive as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONTRACTIVE
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
