"""Nonlinear part of the Cauchy problem on ``0 < y < 1``.

With ``u = v + w`` and ``v`` the (regularized) harmonic part, ``w`` solves
``Delta w = f(x, y, v + w)`` with ``w = w_y = 0`` on ``y = 1``.  Restricted to
frequencies ``|zeta| <= alpha`` this becomes the integral equation

    w_hat(zeta, y) = int_y^1 sinh((eta - y)|zeta|)/|zeta| * f_hat(zeta, eta) d eta,

whose right-hand side ``T`` has a contracting power; its fixed point is found
by plain iteration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .cauchy_harmonic import EPS_MAX, OVERFLOW_EXPONENT
from .errors import GridError, InvalidEpsilon, InvalidSource, NoConvergence
from .forward_solver import HeatSource, midpoint_values
from .grid_spectral import Grid1D, Grid2D, GridFunction, SpectralField, fft_forward, fft_inverse, layer_l2_norms
from .kernels import sinhc
from .reports import SolveReport


def alpha_from_eps(eps: float, x_grid: Grid1D | None = None) -> float:
    """Global cutoff ``alpha = ln(ln(1/eps)) / 2``, clamped to the grid Nyquist when a grid is given."""
    if not 0.0 < eps < EPS_MAX:
        raise InvalidEpsilon(f"need 0 < eps < exp(-3) ~ {EPS_MAX:.4f}, got {eps}")
    alpha = 0.5 * math.log(math.log(1.0 / eps))
    if x_grid is not None:
        alpha = min(alpha, x_grid.nyquist)
    return alpha


@dataclass(frozen=True)
class CutoffParams:
    eps: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.eps < EPS_MAX:
            raise InvalidEpsilon(f"need 0 < eps < exp(-3) ~ {EPS_MAX:.4f}, got {self.eps}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise GridError(f"alpha must be positive and finite, got {self.alpha}")

    @classmethod
    def from_eps(cls, eps: float, x_grid: Grid1D | None = None) -> "CutoffParams":
        return cls(eps, alpha_from_eps(eps, x_grid))

    def check_grid(self, x_grid: Grid1D):
        if self.alpha > x_grid.nyquist:
            raise GridError(f"alpha = {self.alpha} exceeds the grid Nyquist {x_grid.nyquist}")


@dataclass(frozen=True)
class FixedPointConfig:
    fp_tol: float = 1e-8
    fp_max_iter: int = 500

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise GridError("fp_tol must be positive")
        if self.fp_max_iter < 1:
            raise GridError("fp_max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class WField:
    """Band-limited field on the strip: grid values plus the spectrum they came from."""

    values: GridFunction
    spectrum: SpectralField
    alpha: float

    @property
    def grid(self) -> Grid2D:
        return self.values.grid

    @classmethod
    def zeros(cls, grid: Grid2D, alpha: float) -> "WField":
        return cls(GridFunction(grid, np.zeros(grid.shape)), SpectralField(grid, np.zeros(grid.shape), alpha), alpha)

    @classmethod
    def from_spectrum(cls, grid: Grid2D, spec: np.ndarray, alpha: float) -> "WField":
        """Build from per-layer spectra; modes with ``|zeta| > alpha`` are zeroed first."""
        spec = np.where(band_mask(grid.x_grid, alpha)[None, :], spec, 0.0)
        vals = fft_inverse(spec, grid.x_grid).real
        return cls(GridFunction(grid, vals), SpectralField(grid, spec, alpha), alpha)


def band_mask(x_grid: Grid1D, alpha: float) -> np.ndarray:
    """Modes kept by the operator: the closed band ``|zeta| <= alpha``."""
    return np.abs(x_grid.frequencies) <= alpha * (1.0 + 1e-12)


def strip_norm(values: np.ndarray, grid: Grid2D) -> float:
    """``sup_y ||w(., y)||_L2``."""
    return float(np.max(layer_l2_norms(values, grid.x_grid)))


def _check_strip(grid: Grid2D):
    if grid.y_max != 1.0 or grid.y_min < 0.0:
        raise GridError("the strip grid must cover y in [y_min, 1] with y_min >= 0")


def _kernel(grid: Grid2D, c: np.ndarray) -> np.ndarray:
    """``K[i, j, k] = deta * sinh((eta_j - y_i) c_k)/c_k`` for ``eta_j > y_i``, else 0."""
    y, eta = grid.y, grid.eta
    diff = eta[None, :] - y[:, None]
    ker = grid.dy * sinhc(diff[:, :, None], c[None, None, :])
    return np.where((diff > 0)[:, :, None], ker, 0.0)


def apply_T(w: WField, v_eps: GridFunction, src: HeatSource, params: CutoffParams) -> WField:
    """One application of the truncated operator to ``w`` (``v_eps`` fixed)."""
    grid = w.grid
    _check_strip(grid)
    if v_eps.grid != grid:
        raise GridError("w and v_eps must share one grid")
    params.check_grid(grid.x_grid)
    xi, eta = np.meshgrid(grid.x, grid.eta)
    u_mid = midpoint_values(w.values.values + v_eps.values)
    F = np.asarray(src.f(xi, eta, u_mid), dtype=float)
    if not np.all(np.isfinite(F)):
        raise InvalidSource("heat source returned non-finite values")
    keep = band_mask(grid.x_grid, params.alpha)
    c = np.abs(grid.x_grid.frequencies[keep])
    F_hat = fft_forward(F, grid.x_grid)[:, keep]
    spec = np.zeros(grid.shape, dtype=complex)
    spec[:, keep] = np.einsum("ijk,jk->ik", _kernel(grid, c), F_hat)
    spec[-1] = 0.0
    out = WField.from_spectrum(grid, spec, params.alpha)
    vals = np.array(out.values.values)
    vals[-1] = 0.0
    return WField(GridFunction(grid, vals), out.spectrum, params.alpha)


def contraction_power(k: float, alpha: float, max_m: int = 10_000) -> int:
    """Least ``m`` with ``(k^2 e^{2 alpha})^m / m! < 1``."""
    q = k * k * math.exp(2.0 * alpha)
    log_q = math.log(q) if q > 0 else -math.inf
    for m in range(1, max_m + 1):
        if m * log_q - math.lgamma(m + 1) < 0:
            return m
    raise GridError(f"no contracting power below {max_m}")


def smoothness_diagnostic(u: GridFunction, src: HeatSource) -> float:
    """``sup_eta ||exp(3|zeta|) f_hat(., eta)||_L2`` with the exponent clipped at 700 (diagnostic only)."""
    grid = u.grid
    xi, eta = np.meshgrid(grid.x, grid.eta)
    F_hat = fft_forward(np.asarray(src.f(xi, eta, midpoint_values(u.values)), dtype=float), grid.x_grid)
    weight = np.exp(np.minimum(3.0 * np.abs(grid.x_grid.frequencies), OVERFLOW_EXPONENT))
    layer = np.sqrt(grid.x_grid.dzeta * np.sum(np.abs(F_hat * weight) ** 2, axis=-1))
    return float(np.max(layer))


def fixed_point_w(
    v_eps: GridFunction, src: HeatSource, params: CutoffParams, cfg: FixedPointConfig = FixedPointConfig()
) -> tuple[WField, SolveReport]:
    """Iterate ``w <- T w`` from ``w = 0`` until ``sup_y ||dw||_2 < fp_tol``."""
    t0 = time.perf_counter()
    grid = v_eps.grid
    _check_strip(grid)
    w = WField.zeros(grid, params.alpha)
    report = SolveReport(cutoff_radius=params.alpha)
    ratios: list[float] = []
    residual = math.inf
    for _ in range(cfg.fp_max_iter):
        new = apply_T(w, v_eps, src, params)
        residual = strip_norm(new.values.values - w.values.values, grid)
        if report.residuals and report.residuals[-1] > 0:
            ratios.append(residual / report.residuals[-1])
        report.residuals.append(residual)
        w = new
        if residual < cfg.fp_tol:
            break
    report.iterations = len(report.residuals)
    report.final_residual = residual
    report.extra["contraction_ratios"] = ratios
    report.extra["m0"] = contraction_power(src.k_bound, params.alpha) if src.k_bound > 0 else 1
    report.extra["alpha"] = params.alpha
    report.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    if residual >= cfg.fp_tol:
        raise NoConvergence(f"fixed-point iteration stalled at residual {residual:.3e}", report)
    return w, report


def assemble_u(v_eps: GridFunction, w_eps: WField) -> GridFunction:
    """``u_eps = v_eps + w_eps``."""
    if v_eps.grid != w_eps.grid:
        raise GridError("v_eps and w_eps must share one grid")
    return GridFunction(v_eps.grid, v_eps.values + w_eps.values.values)
