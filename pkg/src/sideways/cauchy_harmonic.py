"""Cauchy problem for Laplace's equation on ``0 < y < 1`` with data on ``y = 1``.

In Fourier variables the solution is

    aleph(zeta, y) = phi_hat cosh((1-y)|zeta|) - psi_hat sinh((1-y)|zeta|)/|zeta|,

which amplifies high frequencies like ``exp((1-y)|zeta|)``.  The regularized
solution keeps only ``|zeta| < ln(1/eps)/6``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import GridError, InvalidEpsilon, SidewaysError
from .grid_spectral import (
    Grid2D,
    GridFunction,
    Spectrum,
    SpectralField,
    forward_transform,
    inverse_layers,
    l2_norm_spectral,
    truncate_spectrum,
)
from .kernels import sinhc
from .reports import SolveReport

OVERFLOW_EXPONENT = 700.0
EPS_MAX = math.exp(-3.0)


class PropagatorOverflow(SidewaysError, OverflowError):
    """The untruncated propagator would overflow on the requested grid."""


@dataclass(frozen=True, eq=False)
class CauchyData:
    phi: GridFunction
    psi: GridFunction

    def __post_init__(self):
        if self.phi.is_2d or self.psi.is_2d:
            raise GridError("Cauchy data are traces on y = 1 (1D grid functions)")
        if self.phi.grid != self.psi.grid:
            raise GridError("phi and psi must share one x-grid")


@dataclass(frozen=True)
class RegParams:
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < EPS_MAX:
            raise InvalidEpsilon(f"need 0 < eps < exp(-3) ~ {EPS_MAX:.4f}, got {self.eps}")

    @property
    def cutoff(self) -> float:
        return math.log(1.0 / self.eps) / 6.0


def _propagate(phi_hat: np.ndarray, psi_hat: np.ndarray, zeta: np.ndarray, y: np.ndarray) -> np.ndarray:
    c = np.abs(zeta)[None, :]
    a = (1.0 - y)[:, None]
    active = (np.abs(phi_hat) > 0) | (np.abs(psi_hat) > 0)
    if np.any(active):
        worst = float(np.max(np.abs(a)) * np.max(c[0, active]))
        if worst > OVERFLOW_EXPONENT:
            raise PropagatorOverflow(
                f"(1-y)|zeta| reaches {worst:.1f} > {OVERFLOW_EXPONENT}; truncate the data first"
            )
    with np.errstate(over="raise", invalid="raise"):
        out = phi_hat[None, :] * np.cosh(a * c) - psi_hat[None, :] * sinhc(a, c)
    if not np.all(np.isfinite(out)):
        raise PropagatorOverflow("non-finite propagator values")
    return out


def _check_strip(grid2: Grid2D, data: CauchyData):
    if grid2.x_grid != data.phi.grid:
        raise GridError("Cauchy data and the strip grid must share one x-grid")
    if grid2.y_min < 0.0 or grid2.y_max != 1.0:
        raise GridError("the strip grid must cover y in [y_min, 1] with y_min >= 0")


def aleph(data: CauchyData, grid2: Grid2D) -> SpectralField:
    """Untruncated spectral solution on every layer of ``grid2`` (exact-data path)."""
    _check_strip(grid2, data)
    phi_hat = forward_transform(data.phi)
    psi_hat = forward_transform(data.psi)
    return SpectralField(grid2, _propagate(phi_hat.values, psi_hat.values, phi_hat.zeta, grid2.y))


def regularize(data_noisy: CauchyData, params: RegParams, grid2: Grid2D) -> tuple[GridFunction, SolveReport]:
    """Regularized solution ``v_eps``: both spectra cut at ``params.cutoff``, then propagated."""
    t0 = time.perf_counter()
    _check_strip(grid2, data_noisy)
    r = params.cutoff
    phi_hat = truncate_spectrum(forward_transform(data_noisy.phi), r)
    psi_hat = truncate_spectrum(forward_transform(data_noisy.psi), r)
    field = SpectralField(grid2, _propagate(phi_hat.values, psi_hat.values, phi_hat.zeta, grid2.y), r)
    v = inverse_layers(field, real=True)
    report = SolveReport(cutoff_radius=r, wall_time_ms=1e3 * (time.perf_counter() - t0))
    report.extra["modes_kept"] = int(np.count_nonzero(np.abs(phi_hat.zeta) < r))
    return v, report


def exact_solution_exists_check(data: CauchyData) -> float:
    """``||exp(|zeta|) phi_hat||_2 + ||exp(|zeta|) psi_hat||_2`` with the weight clipped at exp(700).

    Large values flag data that admit no (stable) exact solution.
    """
    out = 0.0
    for f in (data.phi, data.psi):
        s = forward_transform(f)
        weight = np.exp(np.minimum(np.abs(s.zeta), OVERFLOW_EXPONENT))
        # scale before squaring so the norm itself cannot overflow
        vals = s.values * weight
        peak = float(np.max(np.abs(vals)))
        if peak == 0.0:
            continue
        if not math.isfinite(peak):
            return math.inf
        out += peak * l2_norm_spectral(Spectrum(s.grid, vals / peak))
    return out
