"""Closed-form kernels of the half-plane problems and their Fourier transforms.

All functions broadcast over numpy arrays.  Spatial kernels raise
:class:`~sideways.errors.SingularPointError` instead of returning infinities.
Transforms follow the ``1/sqrt(2 pi)`` convention of :mod:`grid_spectral`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SingularPointError

_TINY = 1e-300
_SERIES = 1e-6
SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI_2 = math.sqrt(math.pi / 2.0)


def _check_distance(d2, what: str):
    if np.any(np.asarray(d2) < _TINY):
        raise SingularPointError(f"{what}: evaluation point coincides with a singular point")


def exp_diff_quotient(a, b, c):
    """``(exp(-a c) - exp(-b c)) / c`` with the limit ``b - a`` at ``c = 0``.

    Evaluated as ``exp(-b c) * expm1(-(a - b) c) / c``; a second-order series
    takes over for ``|c| < 1e-6``.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    small = np.abs(c) < _SERIES
    safe_c = np.where(small, 1.0, c)
    d = a - b
    regular = np.exp(-b * c) * np.expm1(-d * c) / safe_c
    # exp(-bc)(-d c + d^2 c^2/2)/c ~ -d + (d^2/2 + b d) c
    series = -d + (0.5 * d * d + b * d) * c
    return np.where(small, series, regular)


def sinhc(a, c):
    """``sinh(a c) / c`` with the limit ``a`` at ``c = 0`` (no cancellation for small ``a c``)."""
    a, c = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(c, dtype=float))
    t = a * c
    small = np.abs(t) < 1e-4
    safe_c = np.where(c == 0.0, 1.0, c)
    return np.where(small, a * (1.0 + t * t / 6.0), np.sinh(t) / safe_c)


# --------------------------------------------------------------------------
# spatial kernels


def kernel_N(x, y, xi, eta):
    """Dirichlet Green function of the half-plane ``y > 1``."""
    dx2 = (np.asarray(x) - xi) ** 2
    # distances measured from the boundary, so that N is exactly 0 on it
    a, b = np.asarray(y) - 1.0, np.asarray(eta) - 1.0
    d1 = dx2 + (a - b) ** 2
    d2 = dx2 + (a + b) ** 2
    _check_distance(d1, "kernel_N")
    _check_distance(d2, "kernel_N")
    return -np.log(d1 / d2) / (4.0 * math.pi)


def kernel_N_eta_at1(x, y, xi):
    """Normal derivative of N at the line ``eta = 1``: the Poisson kernel for ``y > 1``."""
    a = np.asarray(y, dtype=float) - 1.0
    d2 = (np.asarray(x) - xi) ** 2 + a**2
    if np.any((d2 < _TINY)):
        raise SingularPointError("kernel_N_eta_at1: y = 1 and x = xi")
    return a / (math.pi * d2)


def kernel_Gamma(x, y, xi, eta):
    d2 = (np.asarray(x) - xi) ** 2 + (np.asarray(y) - eta) ** 2
    _check_distance(d2, "kernel_Gamma")
    return -np.log(d2) / (4.0 * math.pi)


def kernel_G(x, y, xi, eta):
    """Green function of the half-plane ``y > 0`` built by reflection."""
    return kernel_Gamma(x, y, xi, eta) - kernel_Gamma(x, -np.asarray(y), xi, eta)


def poisson_F(y, x):
    """``F_y(x) = y / (x^2 + y^2)``."""
    y = np.asarray(y, dtype=float)
    return y / (np.asarray(x) ** 2 + y**2)


def hat_F(y, zeta):
    return SQRT_PI_2 * np.exp(-np.asarray(y) * np.abs(zeta))


def log_L(eta, y, x):
    """``L_(eta,y)(x) = ln[(x^2 + (y-eta)^2) / (x^2 + (y+eta)^2)]``."""
    x2 = np.asarray(x) ** 2
    d1 = x2 + (np.asarray(y) - eta) ** 2
    d2 = x2 + (np.asarray(y) + eta) ** 2
    _check_distance(d1, "log_L")
    _check_distance(d2, "log_L")
    return np.log(d1 / d2)


def hat_L(eta, y, zeta):
    """Transform of :func:`log_L`; at ``zeta = 0`` the limit ``-2 sqrt(2 pi) min(y, eta)``."""
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    return SQRT_2PI * exp_diff_quotient(y + eta, np.abs(y - eta), np.abs(zeta))


def m_kernel(y, x):
    """``M_(y,1)(x) = (1-y)/(x^2+(y-1)^2) - (1+y)/(x^2+(y+1)^2)`` for ``0 < y < 1``."""
    y = np.asarray(y, dtype=float)
    x2 = np.asarray(x) ** 2
    return (1.0 - y) / (x2 + (y - 1.0) ** 2) - (1.0 + y) / (x2 + (y + 1.0) ** 2)


def hat_M(y, zeta):
    c = np.abs(zeta)
    y = np.asarray(y, dtype=float)
    return SQRT_PI_2 * (np.exp((y - 1.0) * c) - np.exp(-(y + 1.0) * c))
