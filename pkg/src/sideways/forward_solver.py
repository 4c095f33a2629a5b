"""Exterior problem on ``y > 1``: Picard iteration of the Green-function equation
``u = h(phi) + k(u)`` and construction of the derivative trace ``psi = u_y(., 1)``.

Discretization
--------------
* field nodes: the :class:`Grid2D` nodes, ``y_0 = 1``;
* source nodes: x-midpoints times y-cell midpoints (``grid.eta``), so the
  logarithmic singularity of N is never sampled;
* ``u`` at a cell midpoint is the mean of the two adjacent node values.

The double sum ``sum_jl N(x_k - xi_l; y_i, eta_j) F_jl`` splits into a part
depending on ``i - j`` and a part depending on ``i + j`` (the image term), so
each is a 2D linear convolution evaluated with FFTs.

Source outside the truncated box (``|x| > X`` or ``y > y_max``) is added once
as a far-field term, with ``u`` replaced by 0 there (the decay condition at
infinity).  It is integrated spectrally on a zero-padded x-grid; the
semi-infinite y-tail uses product integration against the exact exponential
weight on a geometrically stretched y-grid.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import GridError, InvalidEpsilon, InvalidSource, NoConvergence, NonContractive
from .grid_spectral import (
    Grid1D,
    Grid2D,
    GridFunction,
    fft_forward,
    fft_inverse,
    forward_transform,
    inverse_transform,
    truncate_spectrum,
)
from .kernels import exp_diff_quotient
from .reports import SolveReport

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class HeatSource:
    """Nonlinear heat source ``f(x, y, u)`` with Lipschitz density ``p`` and bound ``k_bound``.

    ``f`` and ``p`` must broadcast over numpy arrays.
    """

    f: Callable[[Array, Array, Array], Array]
    p: Callable[[Array, Array], Array]
    k_bound: float

    def __call__(self, x, y, u):
        out = np.asarray(self.f(x, y, u), dtype=float)
        if not np.all(np.isfinite(out)):
            raise InvalidSource("heat source returned non-finite values")
        return out

    def lipschitz_violations(self, grid: Grid2D, n_samples: int = 200, seed: int = 0, u_scale: float = 1.0) -> int:
        """Count random triples with ``|f(u1) - f(u2)| > p |u1 - u2|`` (plus round-off slack)."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-grid.x_grid.half_width, grid.x_grid.half_width, n_samples)
        y = rng.uniform(grid.y_min, grid.y_max, n_samples)
        u1 = rng.normal(scale=u_scale, size=n_samples)
        u2 = rng.normal(scale=u_scale, size=n_samples)
        lhs = np.abs(self(x, y, u1) - self(x, y, u2))
        rhs = np.asarray(self.p(x, y)) * np.abs(u1 - u2)
        return int(np.sum(lhs > rhs + 1e-12))


def zero_source() -> HeatSource:
    return HeatSource(lambda x, y, u: np.zeros(np.broadcast(x, y, u).shape), lambda x, y: np.zeros(np.broadcast(x, y).shape), 0.0)


@dataclass(frozen=True)
class Problem1Config:
    grid: Grid2D
    picard_tol: float = 1e-8
    picard_max_iter: int = 200
    far_field: bool = True
    pad: int = 16
    tail_ratio: float = 1.08
    tail_length: float = 5000.0

    def __post_init__(self):
        if self.grid.y_min != 1.0:
            raise GridError("the exterior grid must start at y = 1")
        if not self.picard_tol > 0:
            raise GridError("picard_tol must be positive")
        if self.pad < 1:
            raise GridError("pad must be >= 1")


# --------------------------------------------------------------------------
# box quadrature


class _BoxQuadrature:
    """FFT evaluation of ``-dx deta sum N(x_k, y_i; xi_l, eta_j) F_jl`` on a grid with ``y_min = 1``."""

    def __init__(self, grid: Grid2D):
        self.grid = grid
        n, m = grid.x_grid.n, grid.m
        me = m - 1
        dx, dy = grid.x_grid.dx, grid.dy
        s2 = (np.arange(-(n - 1), n) * dx) ** 2
        d = np.arange(-(me - 1), m)  # i - j
        e = np.arange(0, m + me - 1)  # i + j
        toeplitz = np.log(s2[None, :] + ((d - 0.5) * dy)[:, None] ** 2)
        hankel = np.log(s2[None, :] + ((e + 0.5) * dy)[:, None] ** 2)
        self.shape = (toeplitz.shape[0] + me - 1, toeplitz.shape[1] + n - 1)
        self.fshape = tuple(sfft.next_fast_len(k, real=True) for k in self.shape)
        self.t_hat = sfft.rfft2(toeplitz, self.fshape)
        self.h_hat = sfft.rfft2(hankel, self.fshape)
        self.rows = slice(me - 1, me - 1 + m)
        self.cols = slice(n - 1, 2 * n - 1)
        self.scale = dx * dy / (4.0 * math.pi)

    def apply(self, F: Array) -> Array:
        """``F`` has shape ``(m - 1, n)`` (cell midpoints); returns ``(m, n)`` at the field nodes."""
        fa = sfft.rfft2(F, self.fshape)
        fb = sfft.rfft2(F[::-1], self.fshape)
        conv = sfft.irfft2(self.t_hat * fa - self.h_hat * fb, self.fshape)
        out = self.scale * conv[self.rows, self.cols]
        out[0] = 0.0  # N vanishes identically on y = 1
        return out


@functools.lru_cache(maxsize=8)
def _box_quadrature(grid: Grid2D) -> _BoxQuadrature:
    return _BoxQuadrature(grid)


def _check_exterior(grid: Grid2D):
    if grid.y_min != 1.0:
        raise GridError("the exterior grid must start at y = 1")


def midpoint_values(u: Array) -> Array:
    """Node values -> y-cell midpoint values."""
    return 0.5 * (u[1:] + u[:-1])


# --------------------------------------------------------------------------
# operations


def estimate_K(src: HeatSource, grid: Grid2D) -> float:
    """``max_(x,y) sum |N| p dxi deta`` over the field nodes (N >= 0 for y, eta >= 1)."""
    _check_exterior(grid)
    xi, eta = np.meshgrid(grid.x, grid.eta)
    pv = np.abs(np.broadcast_to(src.p(xi, eta), xi.shape))
    # apply() computes -sum N F; N >= 0 here so |N| p integrates to -apply(p)
    return float(np.max(-_box_quadrature(grid).apply(pv)))


def estimate_L(src: HeatSource, grid: Grid2D) -> float:
    """Constant ``L`` of the derivative-trace estimate, by the same midpoint quadrature (diagnostic)."""
    _check_exterior(grid)
    xg = grid.x_grid
    xi, eta = np.meshgrid(grid.x, grid.eta)
    pv = np.abs(np.broadcast_to(src.p(xi, eta), xi.shape))
    s = np.arange(-(xg.n - 1), xg.n) * xg.dx
    a = (grid.eta - 1.0)[:, None]
    kern = a / (s[None, :] ** 2 + a**2)
    inner = sfft.irfft(
        sfft.rfft(kern, 3 * xg.n, axis=1) * sfft.rfft(pv, 3 * xg.n, axis=1), 3 * xg.n, axis=1
    )[:, xg.n - 1 : 2 * xg.n - 1]
    J = xg.dx * grid.dy * inner.sum(axis=0)
    return float(np.sqrt(xg.dx * np.sum(J**2)))


def _padded_frequencies(xg: Grid1D, pad: int) -> tuple[Grid1D, Array, int]:
    pg = xg.padded(pad)
    c = 2.0 * math.pi * np.fft.rfftfreq(pg.n, d=pg.dx)
    return pg, c, xg.pad_offset(pad)


def harmonic_part(phi: GridFunction, grid: Grid2D, pad: int = 16) -> GridFunction:
    """Poisson extension of ``phi`` into ``y > 1`` via ``h_hat = phi_hat exp(-(y-1)|zeta|)``.

    ``phi`` is zero-padded to ``pad`` times the box width first so the
    spectral product is a linear (not circular) convolution; ``pad=1``
    gives the plain periodic computation.
    """
    _check_exterior(grid)
    if phi.grid != grid.x_grid:
        raise GridError("phi must live on the grid's x-axis")
    xg = grid.x_grid
    pg = xg.padded(pad)
    off = xg.pad_offset(pad)
    big = np.zeros(pg.n)
    big[off : off + xg.n] = phi.values
    spec = fft_forward(big, pg)
    c = np.abs(pg.frequencies)
    layers = spec[None, :] * np.exp(-(grid.y - 1.0)[:, None] * c[None, :])
    vals = fft_inverse(layers, pg).real[:, off : off + xg.n]
    return GridFunction(grid, vals)


def harmonic_normal_derivative(phi: GridFunction, pad: int = 16) -> GridFunction:
    """``h_y(., 1)`` from ``h_y_hat(zeta, 1) = -|zeta| phi_hat(zeta)`` (zero-padded as above)."""
    xg = phi.grid
    pg = xg.padded(pad)
    off = xg.pad_offset(pad)
    big = np.zeros(pg.n)
    big[off : off + xg.n] = phi.values
    spec = -np.abs(pg.frequencies) * fft_forward(big, pg)
    return GridFunction(xg, fft_inverse(spec, pg).real[off : off + xg.n])


def _source_values(u: Array, src: HeatSource, grid: Grid2D) -> Array:
    xi, eta = np.meshgrid(grid.x, grid.eta)
    return src(xi, eta, midpoint_values(u))


def source_part(u: GridFunction, src: HeatSource) -> GridFunction:
    """``-int int N(x, y; xi, eta) f(xi, eta, u) dxi deta`` over the truncated box."""
    grid = u.grid
    if not isinstance(grid, Grid2D):
        raise GridError("source_part expects a 2D grid function")
    _check_exterior(grid)
    F = _source_values(u.values, src, grid)
    return GridFunction(grid, _box_quadrature(grid).apply(F))


@dataclass(frozen=True, eq=False)
class FarField:
    """Contribution of the source outside the box: potential at the field nodes and its y-derivative at y = 1."""

    potential: Array
    normal_derivative: Array


def _tail_nodes(y_max: float, dy: float, ratio: float, length: float) -> Array:
    nodes = [y_max]
    k = 1
    while nodes[-1] < y_max + length:
        nodes.append(y_max + dy * (ratio**k - 1.0) / (ratio - 1.0))
        k += 1
    return np.array(nodes)


def _product_weights(seg: Array, c: Array) -> tuple[Array, Array]:
    """Weights for ``int_0^s exp(-c t) G(t) dt`` with G linear between its end values."""
    s = seg[:, None]
    cs = c[None, :] * s
    safe_c = np.where(c > 0, c, 1.0)[None, :]
    small = cs < 1e-4
    i0 = np.where(small, s * (1 - cs / 2 + cs**2 / 6), -np.expm1(-cs) / safe_c)
    i1 = np.where(small, s**2 * (0.5 - cs / 3 + cs**2 / 8), (1 - np.exp(-cs) * (1 + cs)) / safe_c**2)
    return i0 - i1 / s, i1 / s


def _far_field(src: HeatSource, cfg: Problem1Config) -> FarField:
    grid = cfg.grid
    xg = grid.x_grid
    pg, c, off = _padded_frequencies(xg, cfg.pad)
    xp = pg.nodes
    outside = np.abs(xp) > xg.half_width
    y = grid.y
    eta = grid.eta
    dy = grid.dy

    # side strips: box y-cells, |x| > X
    side = np.array([np.where(outside, src(xp, e, np.zeros_like(xp)), 0.0) for e in eta])
    side_hat = np.fft.rfft(side, axis=1)

    # tail: y > y_max, all x
    tn = _tail_nodes(grid.y_max, dy, cfg.tail_ratio, cfg.tail_length)
    tail_hat = np.fft.rfft(np.array([src(xp, t, np.zeros_like(xp)) for t in tn]), axis=1)
    wa, wb = _product_weights(np.diff(tn), c)
    seg_sum = wa * tail_hat[:-1] + wb * tail_hat[1:]
    start = tn[:-1, None]

    pot = np.zeros((grid.m, xg.n))
    for i, yi in enumerate(y):
        # (1/2c)[exp(-(y+eta-2)c) - exp(-|y-eta|c)] for the strips
        ker = 0.5 * exp_diff_quotient(yi + eta[:, None] - 2.0, np.abs(yi - eta)[:, None], c[None, :])
        acc = dy * np.sum(ker * side_hat, axis=0)
        pre = np.where(c > 0, np.expm1(-2.0 * (yi - 1.0) * c) / (2.0 * np.where(c > 0, c, 1.0)), -(yi - 1.0))
        acc += pre * np.sum(np.exp(-(start - yi) * c[None, :]) * seg_sum, axis=0)
        pot[i] = np.fft.irfft(acc, pg.n)[off : off + xg.n]
    pot[0] = 0.0

    dacc = -dy * np.sum(np.exp(-(eta[:, None] - 1.0) * c[None, :]) * side_hat, axis=0)
    dacc -= np.sum(np.exp(-(start - 1.0) * c[None, :]) * seg_sum, axis=0)
    deriv = np.fft.irfft(dacc, pg.n)[off : off + xg.n]
    return FarField(pot, deriv)


@functools.lru_cache(maxsize=8)
def far_field_part(src: HeatSource, cfg: Problem1Config) -> FarField:
    """Far-field closure for ``src`` on ``cfg.grid`` (cached per source/config pair)."""
    _check_exterior(cfg.grid)
    if not cfg.far_field:
        return FarField(np.zeros(cfg.grid.shape), np.zeros(cfg.grid.x_grid.n))
    return _far_field(src, cfg)


def apply_A(u: GridFunction, h: GridFunction, src: HeatSource, far: FarField | None = None) -> GridFunction:
    """One application of the integral operator ``A u = h + k(u)`` (plus far field)."""
    vals = h.values + source_part(u, src).values
    if far is not None:
        vals = vals + far.potential
    return GridFunction(u.grid, vals)


def picard_solve(phi: GridFunction, src: HeatSource, cfg: Problem1Config) -> tuple[GridFunction, SolveReport]:
    """Successive approximation ``u <- A u`` starting from the harmonic part."""
    t0 = time.perf_counter()
    grid = cfg.grid
    K = estimate_K(src, grid)
    if K >= 1.0:
        raise NonContractive(K)
    report = SolveReport(K_estimate=K, L_estimate=estimate_L(src, grid))
    h = harmonic_part(phi, grid, cfg.pad)
    far = far_field_part(src, cfg)
    quad = _box_quadrature(grid)
    base = h.values + far.potential

    u = h.values
    residual = math.inf
    for it in range(1, cfg.picard_max_iter + 1):
        new = base + quad.apply(_source_values(u, src, grid))
        residual = float(np.max(np.abs(new - u)))
        report.residuals.append(residual)
        u = new
        if residual < cfg.picard_tol:
            break
    report.iterations = len(report.residuals)
    report.final_residual = residual
    report.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    if residual >= cfg.picard_tol:
        raise NoConvergence(f"Picard iteration stalled at residual {residual:.3e}", report)
    return GridFunction(grid, u), report


def truncate_measured(phi_eps: GridFunction, eps: float) -> GridFunction:
    """Drop every Fourier mode of the measurement with ``|zeta| >= eps**-1/2``."""
    if not 0.0 < eps < 1.0:
        raise InvalidEpsilon(f"need 0 < eps < 1, got {eps}")
    spec = truncate_spectrum(forward_transform(phi_eps), eps**-0.5)
    return inverse_transform(spec, real=True)


def source_normal_derivative(u: GridFunction, src: HeatSource, pad: int = 16) -> GridFunction:
    """``k_y(x, 1) = (1/pi) int int (1-eta)/((x-xi)^2+(1-eta)^2) f dxi deta`` over the box.

    Midpoint rule in eta; in xi the Poisson-kernel convolution is applied
    spectrally (``-exp(-(eta-1)|zeta|)``) on a zero-padded grid, which stays
    accurate for the cells nearest to ``y = 1`` where the kernel is narrower
    than the x-spacing.
    """
    grid = u.grid
    xg = grid.x_grid
    pg, c, off = _padded_frequencies(xg, pad)
    F = np.zeros((grid.m - 1, pg.n))
    F[:, off : off + xg.n] = _source_values(u.values, src, grid)
    acc = -grid.dy * np.sum(np.exp(-(grid.eta - 1.0)[:, None] * c[None, :]) * np.fft.rfft(F, axis=1), axis=0)
    return GridFunction(xg, np.fft.irfft(acc, pg.n)[off : off + xg.n])


def build_psi(
    phi_eps: GridFunction, src: HeatSource, cfg: Problem1Config, eps: float | None
) -> tuple[GridFunction, SolveReport]:
    """Derivative trace ``psi_eps = h_eps,y(., 1) + k_eps,y(., 1)`` from a measured trace.

    ``eps=None`` skips the truncation (noise-free reference run).
    """
    phi_t = phi_eps if eps is None else truncate_measured(phi_eps, eps)
    u_eps, report = picard_solve(phi_t, src, cfg)
    far = far_field_part(src, cfg)
    psi = harmonic_normal_derivative(phi_t, cfg.pad).values
    psi = psi + source_normal_derivative(u_eps, src, cfg.pad).values + far.normal_derivative
    report.cutoff_radius = None if eps is None else eps**-0.5
    return GridFunction(phi_eps.grid, psi), report
