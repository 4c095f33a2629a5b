"""Uniform grids on truncated domains and the discrete continuous-Fourier transform.

Transform convention (unitary, angular frequency)::

    fhat(zeta) = 1/sqrt(2 pi) * int f(x) exp(-i x zeta) dx
    f(x)       = 1/sqrt(2 pi) * int fhat(zeta) exp(+i x zeta) dzeta

Both integrals are discretized with the midpoint rule on the grid nodes
``x_j = -X + (j + 1/2) dx`` and the frequency nodes ``zeta_m = m * pi / X``,
``m = -N/2 .. N/2 - 1``.  The FFT is used internally and phase-corrected so
that the result coincides with the direct sums.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import GridError

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Grid1D:
    """Midpoint grid on ``[-half_width, half_width]`` with ``n`` nodes."""

    half_width: float
    n: int

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise GridError(f"half_width must be positive and finite, got {self.half_width}")
        if self.n < 8 or self.n % 2:
            raise GridError(f"point count must be even and >= 8, got {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.n) + 0.5) * self.dx

    @property
    def dzeta(self) -> float:
        return math.pi / self.half_width

    @property
    def modes(self) -> np.ndarray:
        """Integer mode numbers ``-N/2 .. N/2-1``."""
        return np.arange(-self.n // 2, self.n // 2)

    @property
    def frequencies(self) -> np.ndarray:
        return self.modes * self.dzeta

    @property
    def nyquist(self) -> float:
        return math.pi / self.dx

    def padded(self, factor: int) -> "Grid1D":
        """Grid with the same spacing covering ``factor`` times the width.

        The nodes of ``self`` are a contiguous subset of the padded nodes,
        starting at :meth:`pad_offset`.
        """
        if factor < 1:
            raise GridError("pad factor must be >= 1")
        return Grid1D(self.half_width * factor, self.n * factor)

    def pad_offset(self, factor: int) -> int:
        return (self.n * factor - self.n) // 2


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid: midpoint nodes in x, endpoint-inclusive uniform nodes in y.

    Arrays on this grid have shape ``(m, n)``: one row per y-level.
    """

    x_grid: Grid1D
    y_min: float
    y_max: float
    m: int

    def __post_init__(self):
        if not self.y_min < self.y_max:
            raise GridError(f"need y_min < y_max, got {self.y_min}, {self.y_max}")
        if self.m < 3:
            raise GridError(f"y_count must be >= 3, got {self.m}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.x_grid.n)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.m)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.m - 1)

    @property
    def eta(self) -> np.ndarray:
        """Cell midpoints in y, offset half a cell from the nodes (``m - 1`` values)."""
        return self.y_min + (np.arange(self.m - 1) + 0.5) * self.dy

    @property
    def x(self) -> np.ndarray:
        return self.x_grid.nodes

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` arrays of shape ``(m, n)``."""
        return np.meshgrid(self.x, self.y)


AnyGrid = Union[Grid1D, Grid2D]


def _shape(grid: AnyGrid) -> tuple[int, ...]:
    return grid.shape if isinstance(grid, Grid2D) else (grid.n,)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on a 1D or 2D grid."""

    grid: AnyGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != _shape(self.grid):
            raise GridError(f"value shape {vals.shape} does not match grid shape {_shape(self.grid)}")
        if not np.all(np.isfinite(vals)):
            raise GridError("grid function contains non-finite values")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: AnyGrid, func) -> "GridFunction":
        if isinstance(grid, Grid2D):
            X, Y = grid.mesh()
            return cls(grid, np.broadcast_to(func(X, Y), grid.shape).astype(float))
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.n,)).astype(float))

    @property
    def is_2d(self) -> bool:
        return isinstance(self.grid, Grid2D)

    @property
    def x_grid(self) -> Grid1D:
        return self.grid.x_grid if self.is_2d else self.grid

    def layer(self, i: int) -> "GridFunction":
        if not self.is_2d:
            raise GridError("layer() needs a 2D grid function")
        return GridFunction(self.grid.x_grid, self.values[i])

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise GridError("grid mismatch")
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise GridError("grid mismatch")
        return GridFunction(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier samples at ``grid.frequencies``; ``cutoff`` records a truncation radius."""

    grid: Grid1D
    values: np.ndarray
    cutoff: float | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise GridError(f"spectrum shape {vals.shape} does not match {self.grid.n} modes")
        if not np.all(np.isfinite(vals)):
            raise GridError("spectrum contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def zeta(self) -> np.ndarray:
        return self.grid.frequencies


@dataclass(frozen=True, eq=False)
class SpectralField:
    """One spectrum per y-level of a :class:`Grid2D`, shape ``(m, n)``."""

    grid: Grid2D
    values: np.ndarray
    cutoff: float | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise GridError(f"spectral field shape {vals.shape} does not match {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("spectral field contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def zeta(self) -> np.ndarray:
        return self.grid.x_grid.frequencies

    def layer(self, i: int) -> Spectrum:
        return Spectrum(self.grid.x_grid, self.values[i], self.cutoff)


# --------------------------------------------------------------------------
# raw array kernels (operate along the last axis)


def _phase(grid: Grid1D) -> np.ndarray:
    # exp(-i x_j zeta_m) = (-1)^m exp(-i pi m / N) exp(-2 pi i m j / N)
    m = grid.modes
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    return sign * np.exp(-1j * np.pi * m / grid.n)


def fft_forward(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Midpoint-rule transform of ``values`` along the last axis."""
    values = np.asarray(values)
    n = grid.n
    scale = grid.dx / SQRT_2PI
    phase = _phase(grid)
    if np.isrealobj(values):
        # half spectrum, then mirror so that fhat(-zeta) == conj(fhat(zeta)) exactly
        half = np.fft.rfft(values, axis=-1)  # m = 0 .. n/2
        pos = half[..., : n // 2] * phase[n // 2 :] * scale  # m = 0 .. n/2-1
        top = half[..., n // 2] * phase[0] * scale  # m = -n/2
        out = np.empty(values.shape[:-1] + (n,), dtype=complex)
        out[..., n // 2 :] = pos
        out[..., 1 : n // 2] = np.conj(pos[..., :0:-1])
        out[..., 0] = top
        return out
    dft = np.fft.fft(values, axis=-1)
    return np.fft.fftshift(dft, axes=-1) * phase * scale


def fft_inverse(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Midpoint-rule inverse transform along the last axis (complex result)."""
    values = np.asarray(values, dtype=complex)
    n = grid.n
    scale = grid.dzeta / SQRT_2PI
    # exp(+i x_j zeta_m) = conj(phase_m) exp(+2 pi i m j / N)
    weighted = values * np.conj(_phase(grid))
    return np.fft.ifft(np.fft.ifftshift(weighted, axes=-1), axis=-1) * (n * scale)


def direct_forward(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """O(N^2) reference evaluation of the midpoint sum (used as a test oracle)."""
    x = grid.nodes
    z = grid.frequencies
    return (grid.dx / SQRT_2PI) * np.exp(-1j * np.outer(z, x)) @ np.asarray(values)


# --------------------------------------------------------------------------
# public operations


def forward_transform(f: GridFunction) -> Spectrum:
    """Discrete Fourier transform of a 1D grid function."""
    if f.is_2d:
        raise GridError("forward_transform expects a 1D grid function; use forward_layers")
    return Spectrum(f.grid, fft_forward(f.values, f.grid))


def forward_layers(f: GridFunction) -> SpectralField:
    """Transform every y-layer of a 2D grid function."""
    if not f.is_2d:
        raise GridError("forward_layers expects a 2D grid function")
    return SpectralField(f.grid, fft_forward(f.values, f.grid.x_grid))


def inverse_transform(s: Spectrum, real: bool = False) -> GridFunction:
    """Inverse transform back to grid samples.

    With ``real=True`` the imaginary round-off is discarded, which is the
    right thing for conjugate-symmetric spectra of real functions.
    """
    vals = fft_inverse(s.values, s.grid)
    return GridFunction(s.grid, vals.real if real else vals)


def inverse_layers(s: SpectralField, real: bool = False) -> GridFunction:
    vals = fft_inverse(s.values, s.grid.x_grid)
    return GridFunction(s.grid, vals.real if real else vals)


def truncation_mask(zeta: np.ndarray, radius: float) -> np.ndarray:
    """Modes kept by a hard cutoff: ``|zeta| < radius``."""
    return np.abs(zeta) < radius


def truncate_spectrum(s: Spectrum, radius: float) -> Spectrum:
    """Zero every mode with ``|zeta| >= radius``."""
    if radius < 0:
        raise GridError("truncation radius must be non-negative")
    kept = np.where(truncation_mask(s.zeta, radius), s.values, 0.0)
    cutoff = radius if s.cutoff is None else min(radius, s.cutoff)
    return Spectrum(s.grid, kept, cutoff)


def _y_weights(grid: Grid2D, rows: np.ndarray | None = None) -> np.ndarray:
    """Trapezoid weights over the (contiguous) selected y-rows."""
    m = grid.m if rows is None else len(rows)
    w = np.full(m, grid.dy)
    if m > 1:
        w[0] = w[-1] = grid.dy / 2
    return w


def window_mask(grid: AnyGrid, x_range=None, y_range=None) -> tuple[np.ndarray, np.ndarray | None]:
    """Boolean column mask (x) and row mask (y) for a rectangular probe window."""
    x = grid.x if isinstance(grid, Grid2D) else grid.nodes
    tol = 1e-12
    cols = np.ones(x.shape, bool) if x_range is None else (x >= x_range[0] - tol) & (x <= x_range[1] + tol)
    if not isinstance(grid, Grid2D):
        return cols, None
    y = grid.y
    rows = np.ones(y.shape, bool) if y_range is None else (y >= y_range[0] - tol) & (y <= y_range[1] + tol)
    return cols, rows


def l2_norm(f: GridFunction, x_range=None, y_range=None) -> float:
    """Discrete L2 norm: midpoint rule in x, trapezoid rule in y.

    Optional ranges restrict the norm to a probe window.
    """
    cols, rows = window_mask(f.grid, x_range, y_range)
    dx = f.x_grid.dx
    if not f.is_2d:
        return float(np.sqrt(dx * np.sum(np.abs(f.values[cols]) ** 2)))
    sub = np.abs(f.values[np.ix_(rows, cols)]) ** 2
    w = _y_weights(f.grid, np.flatnonzero(rows))
    return float(np.sqrt(dx * np.sum(w @ sub)))


def sup_norm(f: GridFunction, x_range=None, y_range=None) -> float:
    cols, rows = window_mask(f.grid, x_range, y_range)
    if not f.is_2d:
        sub = f.values[cols]
    else:
        sub = f.values[np.ix_(rows, cols)]
    return float(np.max(np.abs(sub))) if sub.size else 0.0


def l2_norm_spectral(s: Spectrum) -> float:
    return float(np.sqrt(s.grid.dzeta * np.sum(np.abs(s.values) ** 2)))


def layer_l2_norms(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Per-row discrete L2 norms of a ``(m, n)`` array."""
    return np.sqrt(grid.dx * np.sum(np.abs(values) ** 2, axis=-1))


# --------------------------------------------------------------------------
# CSV I/O


def write_csv(f: GridFunction, path: str | Path) -> None:
    """Write ``x,value`` (1D) or ``x,y,value`` (2D) rows with round-trip precision."""
    if np.iscomplexobj(f.values):
        raise GridError("CSV export supports real-valued grid functions only")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if f.is_2d:
            w.writerow(["x", "y", "value"])
            x, y = f.grid.x, f.grid.y
            for i, yi in enumerate(y):
                for j, xj in enumerate(x):
                    w.writerow([repr(float(xj)), repr(float(yi)), repr(float(f.values[i, j]))])
        else:
            w.writerow(["x", "value"])
            for xj, vj in zip(f.grid.nodes, f.values):
                w.writerow([repr(float(xj)), repr(float(vj))])


def read_csv(path: str | Path, grid: AnyGrid) -> GridFunction:
    """Read a grid function written by :func:`write_csv`, validating it against ``grid``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise GridError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    is_2d = isinstance(grid, Grid2D)
    expected = ["x", "y", "value"] if is_2d else ["x", "value"]
    if header != expected:
        raise GridError(f"{path}: header {header} does not match {expected}")
    n_expected = int(np.prod(_shape(grid)))
    if len(body) != n_expected:
        raise GridError(f"{path}: {len(body)} rows, grid has {n_expected} nodes")
    data = np.array(body, dtype=float)
    if is_2d:
        X, Y = grid.mesh()
        coords_ok = np.allclose(data[:, 0], X.ravel(), atol=1e-12) and np.allclose(data[:, 1], Y.ravel(), atol=1e-12)
        vals = data[:, 2].reshape(grid.shape)
    else:
        coords_ok = np.allclose(data[:, 0], grid.nodes, atol=1e-12)
        vals = data[:, 1]
    if not coords_ok:
        raise GridError(f"{path}: node coordinates do not match the grid")
    return GridFunction(grid, vals)
