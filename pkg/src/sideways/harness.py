"""Manufactured test problems, noise injection, epsilon sweeps and output files."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .cauchy_harmonic import EPS_MAX, CauchyData, RegParams, regularize
from .errors import ConfigError, InsufficientRows, InvalidEpsilon
from .forward_solver import HeatSource, Problem1Config, build_psi, picard_solve, truncate_measured
from .grid_spectral import Grid1D, Grid2D, GridFunction, l2_norm, sup_norm, window_mask
from .nonlinear_cauchy import CutoffParams, FixedPointConfig, WField, assemble_u, fixed_point_w
from .reports import SolveReport, _jsonable

C0 = 4.0 / math.sqrt(2.0 * math.pi)
SCHEMA_VERSION = "1"
WINDOW_EXTERIOR = ((-4.0, 4.0), (1.0, 4.0))
WINDOW_STRIP = ((-4.0, 4.0), (0.0, 1.0))


# --------------------------------------------------------------------------
# manufactured problems


def _u_exact(x, y):
    return C0 / (np.asarray(x) ** 2 + 4.0) + 0.0 * np.asarray(y)


def _laplace_u(x):
    x2 = np.asarray(x) ** 2
    return C0 * (6.0 * x2 - 8.0) / (x2 + 4.0) ** 3


def _g(x, y):
    x2 = np.asarray(x) ** 2
    return _laplace_u(x) - np.arctan(C0 / (x2 + 4.0) + x2 + np.asarray(y) ** 2)


def _f(x, y, u):
    return np.arctan(np.abs(u) + np.asarray(x) ** 2 + np.asarray(y) ** 2) + _g(x, y)


def _p(x, y):
    # |d/du arctan(|u| + s)| = 1/(1 + (|u| + s)^2) <= 1/(1 + s^2), s = x^2 + y^2
    return 1.0 / (1.0 + (np.asarray(x) ** 2 + np.asarray(y) ** 2) ** 2)


def uncorrected_g(x, y):
    """An earlier, incorrect form of the source term (kept for the residual evidence)."""
    x = np.asarray(x)
    x2 = x**2
    return 4 * C0 * x / (x2 + 4.0) ** 3 - 2 * C0 / (x2 + 4.0) ** 2 - np.arctan(C0 / (x2 + 4.0) + x2 + np.asarray(y) ** 2)


def uncorrected_g_residual(x, y=2.0):
    """``Delta u - f(x, y, u)`` with :func:`uncorrected_g`; equals ``C (8x^2 - 4x)/(x^2+4)^3``."""
    f_wrong = np.arctan(_u_exact(x, y) + np.asarray(x) ** 2 + np.asarray(y) ** 2) + uncorrected_g(x, y)
    return _laplace_u(x) - f_wrong


def _v_exact(x, y):
    x2 = np.asarray(x) ** 2
    y = np.asarray(y)
    return 0.25 * C0 * ((3.0 - y) / (x2 + (3.0 - y) ** 2) + (1.0 + y) / (x2 + (1.0 + y) ** 2))


def uncorrected_v_trace_ratio(x=0.0) -> float:
    """Trace ratio at ``y = 1`` of the strip solution with prefactor ``1/(2 sqrt(2 pi))`` (0.5: that prefactor is wrong)."""
    wrong = (1.0 / (2.0 * math.sqrt(2.0 * math.pi))) * 2.0 * 2.0 / (x * x + 4.0)
    return float(wrong / (C0 / (x * x + 4.0)))


@dataclass(frozen=True, eq=False)
class ManufacturedProblem:
    name: str
    exact_u: Callable
    phi: Callable
    psi: Callable
    src: HeatSource
    exact_v: Callable | None = None
    exact_w: Callable | None = None


_SRC = HeatSource(_f, _p, 1.0)


def manufacture_problem1() -> ManufacturedProblem:
    """Exterior problem with exact solution ``u = C/(x^2+4)``, ``C = 4/sqrt(2 pi)``."""
    return ManufacturedProblem(
        name="exterior",
        exact_u=_u_exact,
        phi=lambda x: _u_exact(x, 1.0),
        psi=lambda x: np.zeros(np.shape(x)),
        src=_SRC,
    )


def manufacture_problem2() -> ManufacturedProblem:
    """Strip problem on ``0 < y < 1`` sharing the traces and source of :func:`manufacture_problem1`."""
    return ManufacturedProblem(
        name="strip",
        exact_u=_u_exact,
        phi=lambda x: _u_exact(x, 1.0),
        psi=lambda x: np.zeros(np.shape(x)),
        src=_SRC,
        exact_v=_v_exact,
        exact_w=lambda x, y: _u_exact(x, y) - _v_exact(x, y),
    )


def five_point_residual(func: Callable, f: Callable | None, x_grid: Grid1D, y_min: float, y_max: float, m: int) -> float:
    """``sup |Delta_h func - f(x, y, func)|`` over the interior nodes of a verification grid.

    ``f=None`` checks harmonicity.
    """
    grid = Grid2D(x_grid, y_min, y_max, m)
    X, Y = grid.mesh()
    U = np.broadcast_to(func(X, Y), X.shape)
    dx, dy = x_grid.dx, grid.dy
    lap = (U[1:-1, 2:] - 2 * U[1:-1, 1:-1] + U[1:-1, :-2]) / dx**2 + (U[2:, 1:-1] - 2 * U[1:-1, 1:-1] + U[:-2, 1:-1]) / dy**2
    rhs = 0.0 if f is None else f(X[1:-1, 1:-1], Y[1:-1, 1:-1], U[1:-1, 1:-1])
    return float(np.max(np.abs(lap - rhs)))


# --------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    seed: int
    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise ConfigError(f"noise level must be positive, got {self.level}")


def inject_noise(f: GridFunction, spec: NoiseSpec) -> GridFunction:
    """Add seeded Gaussian noise rescaled to discrete L2 norm ``0.9 * level``."""
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(f.values.shape)
    noise *= 0.9 * spec.level / l2_norm(GridFunction(f.grid, noise))
    return GridFunction(f.grid, f.values + noise)


# --------------------------------------------------------------------------
# study configuration


@dataclass(frozen=True)
class StudyConfig:
    n: int = 256
    m: int = 128
    x: float = 8.0
    y_max: float = 9.0
    strip_m: int = 65
    eps: tuple[float, ...] = (1e-2, 1e-4, 1e-6)
    seed: int = 0
    seeds: int = 1
    picard_tol: float = 1e-8
    fixed_point_tol: float = 1e-8

    def __post_init__(self):
        if not self.eps:
            raise ConfigError("eps list is empty")
        if any(not 0.0 < e < EPS_MAX for e in self.eps):
            raise InvalidEpsilon(f"every eps must lie in (0, exp(-3)), got {list(self.eps)}")
        if any(a <= b for a, b in zip(self.eps, self.eps[1:])):
            raise ConfigError("eps list must be strictly decreasing")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D(self.x, self.n)

    @property
    def exterior_grid(self) -> Grid2D:
        return Grid2D(self.x_grid, 1.0, self.y_max, self.m)

    @property
    def strip_grid(self) -> Grid2D:
        return Grid2D(self.x_grid, 0.0, 1.0, self.strip_m)

    @property
    def problem1(self) -> Problem1Config:
        return Problem1Config(self.exterior_grid, picard_tol=self.picard_tol)

    @property
    def fixed_point(self) -> FixedPointConfig:
        return FixedPointConfig(fp_tol=self.fixed_point_tol)

    def to_json(self) -> dict[str, Any]:
        return {
            "problem": "section5",
            "grid": {"n": self.n, "m": self.m, "x": self.x, "y_max": self.y_max, "strip_m": self.strip_m},
            "eps": list(self.eps),
            "seed": self.seed,
            "seeds": self.seeds,
            "tolerances": {"picard": self.picard_tol, "fixed_point": self.fixed_point_tol},
        }


_TOP_KEYS = {"problem", "grid", "eps", "seed", "seeds", "tolerances"}
_GRID_KEYS = {"n", "m", "x", "y_max", "strip_m"}
_TOL_KEYS = {"picard", "fixed_point"}


def config_from_json(data: dict[str, Any], base: StudyConfig | None = None) -> StudyConfig:
    """Merge a JSON config over ``base``; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    base = base or StudyConfig()
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if data.get("problem", "section5") != "section5":
        raise ConfigError(f"unsupported problem {data['problem']!r}")
    kw: dict[str, Any] = {}
    grid = data.get("grid", {})
    if not isinstance(grid, dict) or set(grid) - _GRID_KEYS:
        raise ConfigError(f"bad grid section: {grid!r}")
    tol = data.get("tolerances", {})
    if not isinstance(tol, dict) or set(tol) - _TOL_KEYS:
        raise ConfigError(f"bad tolerances section: {tol!r}")
    try:
        for k in ("n", "m", "strip_m"):
            if k in grid:
                kw[k] = _as_int(grid[k], k)
        for k in ("x", "y_max"):
            if k in grid:
                kw[k] = float(grid[k])
        if "eps" in data:
            eps = data["eps"]
            kw["eps"] = tuple(float(e) for e in (eps if isinstance(eps, list) else [eps]))
        if "seed" in data:
            kw["seed"] = _as_int(data["seed"], "seed")
        if "seeds" in data:
            kw["seeds"] = _as_int(data["seeds"], "seeds")
        if "picard" in tol:
            kw["picard_tol"] = float(tol["picard"])
        if "fixed_point" in tol:
            kw["fixed_point_tol"] = float(tol["fixed_point"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return _replace(base, **kw)


def _as_int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return v


def _replace(cfg: StudyConfig, **kw) -> StudyConfig:
    d = asdict(cfg)
    d.update(kw)
    d["eps"] = tuple(d["eps"])
    return StudyConfig(**d)


# --------------------------------------------------------------------------
# pipeline


@dataclass
class PipelineResult:
    eps: float
    seed: int
    psi_eps: GridFunction
    v_eps: GridFunction
    w_eps: GridFunction
    u_eps: GridFunction
    reports: dict[str, SolveReport]
    w_field: WField | None = None


def reference_psi(cfg: StudyConfig, problem: ManufacturedProblem | None = None) -> GridFunction:
    """Derivative trace from the noise-free data on the working grid."""
    problem = problem or manufacture_problem1()
    phi = GridFunction.from_callable(cfg.x_grid, problem.phi)
    psi, _ = build_psi(phi, problem.src, cfg.problem1, None)
    return psi


def run_pipeline(cfg: StudyConfig, eps: float, seed: int, problem: ManufacturedProblem | None = None) -> PipelineResult:
    """Noisy trace -> psi_eps -> v_eps -> w_eps -> u_eps for one noise level and seed."""
    problem = problem or manufacture_problem2()
    xg = cfg.x_grid
    phi = GridFunction.from_callable(xg, problem.phi)
    phi_eps = inject_noise(phi, NoiseSpec(seed, eps))
    psi_eps, rep_psi = build_psi(phi_eps, problem.src, cfg.problem1, eps)
    phi_t = truncate_measured(phi_eps, eps)
    v_eps, rep_v = regularize(CauchyData(phi_t, psi_eps), RegParams(eps), cfg.strip_grid)
    w_eps, rep_w = fixed_point_w(v_eps, problem.src, CutoffParams.from_eps(eps, xg), cfg.fixed_point)
    u_eps = assemble_u(v_eps, w_eps)
    reports = {"trace": rep_psi, "cauchy": rep_v, "nonlinear": rep_w}
    return PipelineResult(eps, seed, psi_eps, v_eps, w_eps.values, u_eps, reports, w_eps)


COLUMNS = (
    "eps",
    "alpha",
    "cutoff",
    "psi_err",
    "v_err",
    "w_err",
    "u_err",
    "v_rel",
    "u_rel",
    "picard_iterations",
    "fp_iterations",
)


@dataclass
class ErrorRow:
    eps: float
    alpha: float
    cutoff: float
    psi_err: float
    v_err: float
    w_err: float
    u_err: float
    v_rel: float
    u_rel: float
    picard_iterations: int
    fp_iterations: int
    runtime_ms: float = 0.0


@dataclass
class ErrorTable:
    rows: list[ErrorRow] = field(default_factory=list)

    def __post_init__(self):
        self._check()

    def _check(self):
        e = [r.eps for r in self.rows]
        if any(a <= b for a, b in zip(e, e[1:])):
            raise ConfigError("error table rows must have strictly decreasing eps")

    def append(self, row: ErrorRow):
        self.rows.append(row)
        self._check()

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)


@dataclass
class StudyResult:
    config: StudyConfig
    table: ErrorTable
    first: PipelineResult
    forward_u: GridFunction
    forward_report: SolveReport


def _strip_errors(res: PipelineResult, problem: ManufacturedProblem, psi_ref: GridFunction):
    grid = res.v_eps.grid
    (xr, yr) = WINDOW_STRIP
    V = GridFunction.from_callable(grid, problem.exact_v)
    W = GridFunction.from_callable(grid, problem.exact_w)
    U = GridFunction.from_callable(grid, problem.exact_u)
    win = dict(x_range=xr, y_range=yr)
    v_err = l2_norm(res.v_eps - V, **win)
    u_err = l2_norm(res.u_eps - U, **win)
    return dict(
        psi_err=l2_norm(res.psi_eps - psi_ref),
        v_err=v_err,
        w_err=l2_norm(res.w_eps - W, **win),
        u_err=u_err,
        v_rel=v_err / l2_norm(V, **win),
        u_rel=u_err / l2_norm(U, **win),
    )


def run_study(cfg: StudyConfig) -> StudyResult:
    """Full pipeline per eps; each row holds the median over ``cfg.seeds`` consecutive seeds."""
    problem = manufacture_problem2()
    xg = cfg.x_grid
    phi = GridFunction.from_callable(xg, problem.phi)
    forward_u, forward_report = picard_solve(phi, problem.src, cfg.problem1)
    psi_ref = reference_psi(cfg, problem)
    table = ErrorTable()
    first = None
    for eps in cfg.eps:
        t0 = time.perf_counter()
        runs = [run_pipeline(cfg, eps, cfg.seed + s, problem) for s in range(cfg.seeds)]
        first = first or runs[0]
        errs = [_strip_errors(r, problem, psi_ref) for r in runs]
        med = {k: float(np.median([e[k] for e in errs])) for k in errs[0]}
        table.append(
            ErrorRow(
                eps=eps,
                alpha=CutoffParams.from_eps(eps, xg).alpha,
                cutoff=RegParams(eps).cutoff,
                picard_iterations=int(np.median([r.reports["trace"].iterations for r in runs])),
                fp_iterations=int(np.median([r.reports["nonlinear"].iterations for r in runs])),
                runtime_ms=1e3 * (time.perf_counter() - t0),
                **med,
            )
        )
    return StudyResult(cfg, table, first, forward_u, forward_report)


# --------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_log_rate(table: ErrorTable, column: str, abscissa: str = "log_eps") -> RateFit:
    """Least-squares line through ``log(column)`` against ``log eps`` or ``log ln(1/eps)``."""
    if len(table) < 3:
        raise InsufficientRows(f"rate fit needs >= 3 rows, got {len(table)}")
    eps = table.column("eps")
    if abscissa == "log_eps":
        xs = np.log(eps)
    elif abscissa == "log_log_inv_eps":
        xs = np.log(np.log(1.0 / eps))
    else:
        raise ConfigError(f"unknown abscissa {abscissa!r}")
    ys = np.log(table.column(column))
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = float(np.sqrt(np.sum((A @ np.array([slope, intercept]) - ys) ** 2)))
    return RateFit(float(slope), float(intercept), resid)


# --------------------------------------------------------------------------
# output files


def write_surface(f: GridFunction, path: Path, x_range, y_range) -> None:
    """``x,y,value`` rows of a 2D grid function restricted to a probe window."""
    cols, rows = window_mask(f.grid, x_range, y_range)
    x, y = f.grid.x[cols], f.grid.y[rows]
    vals = f.values[np.ix_(rows, cols)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for i, yi in enumerate(y):
            for j, xj in enumerate(x):
                w.writerow([repr(float(xj)), repr(float(yi)), repr(float(vals[i, j]))])


def write_error_table(table: ErrorTable, path: Path) -> None:
    """Error table without the wall-clock column, so reruns are byte-identical."""
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in table.rows:
            w.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c) for c in COLUMNS])


def typo_evidence() -> dict[str, float]:
    return {
        "uncorrected_g_residual_at_x1": float(uncorrected_g_residual(1.0)),
        "uncorrected_g_residual_expected": 4.0 * C0 / 125.0,
        "uncorrected_v_trace_ratio": uncorrected_v_trace_ratio(),
    }


def write_report(path: Path, payload: dict[str, Any]) -> None:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")


def _open_dir(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def emit_outputs(result: StudyResult, out_dir) -> list[Path]:
    """Write surfaces, the error table and ``report.json`` for a study."""
    out = _open_dir(out_dir)
    problem = manufacture_problem2()
    cfg = result.config
    strip = cfg.strip_grid
    surfaces = {
        "forward_u": (result.forward_u, WINDOW_EXTERIOR),
        "v_eps": (result.first.v_eps, WINDOW_STRIP),
        "u_eps": (result.first.u_eps, WINDOW_STRIP),
        "exact_v": (GridFunction.from_callable(strip, problem.exact_v), WINDOW_STRIP),
        "exact_u": (GridFunction.from_callable(strip, problem.exact_u), WINDOW_STRIP),
    }
    written = []
    for name, (f, (xr, yr)) in surfaces.items():
        p = out / f"surface_{name}.csv"
        write_surface(f, p, xr, yr)
        written.append(p)
    p = out / "error_table.csv"
    write_error_table(result.table, p)
    written.append(p)

    exact = GridFunction.from_callable(cfg.exterior_grid, problem.exact_u)
    xr, yr = WINDOW_EXTERIOR
    forward_rel = sup_norm(result.forward_u - exact, xr, yr) / sup_norm(exact, xr, yr)
    rows = [{c: getattr(r, c) for c in COLUMNS} for r in result.table.rows]
    payload = {
        "config": cfg.to_json(),
        "forward": {"report": result.forward_report.to_dict(), "relative_sup_error": forward_rel},
        "reports": {k: v.to_dict() for k, v in result.first.reports.items()},
        "table": rows,
        "typo_evidence": typo_evidence(),
    }
    if len(result.table) >= 3:
        payload["rates"] = {
            "psi_vs_log_eps": asdict(fit_log_rate(result.table, "psi_err")),
            "v_vs_log_log_inv_eps": asdict(fit_log_rate(result.table, "v_err", "log_log_inv_eps")),
            "u_vs_log_log_inv_eps": asdict(fit_log_rate(result.table, "u_err", "log_log_inv_eps")),
        }
    p = out / "report.json"
    write_report(p, payload)
    written.append(p)
    return written
