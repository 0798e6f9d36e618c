"""Smooth compactly supported shape functions shared across the package.

Everything here is vectorized over numpy arrays and exact outside the
support (no floating-point tails).
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "standard_bump",
    "standard_bump_radial2",
    "cosine_bump_radial2",
    "shoulder",
    "quartic_kernel",
    "bump_integral_1d",
    "RADIAL_SHAPES",
]


def standard_bump(u):
    """The C-infinity bump exp(1 - 1/(1 - u^2)) on |u| < 1, zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    mask = np.abs(u) < 1.0
    inner = u[mask] ** 2
    out[mask] = np.exp(1.0 - 1.0 / (1.0 - inner))
    return out


def standard_bump_radial2(r2):
    """Standard bump as a function of the squared radius (support r2 < 1)."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    mask = r2 < 1.0
    out[mask] = np.exp(1.0 - 1.0 / (1.0 - r2[mask]))
    return out


def cosine_bump_radial2(r2):
    """cos^2(pi*r/2) on r < 1, zero outside; C^1 with flat slope at 0 and 1."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    mask = r2 < 1.0
    out[mask] = np.cos(0.5 * np.pi * np.sqrt(r2[mask])) ** 2
    return out


def _transition(u):
    # C-infinity monotone 0 -> 1 on [0, 1]
    u = np.asarray(u, dtype=float)
    a = np.zeros_like(u)
    b = np.zeros_like(u)
    pos = u > 0.0
    a[pos] = np.exp(-1.0 / u[pos])
    neg = u < 1.0
    b[neg] = np.exp(-1.0 / (1.0 - u[neg]))
    return a / (a + b)


def shoulder(r, inner, width):
    """Smooth cutoff: 1 for r <= inner, 0 for r >= inner + width."""
    r = np.asarray(r, dtype=float)
    return 1.0 - _transition((r - inner) / width)


def quartic_kernel(u):
    """Normalized C^1 bump (15/16)(1-u^2)^2 on |u| < 1.

    Polynomial inside its support, so a 15-point Gauss-Kronrod panel
    integrates it exactly; unit mass without a numerical constant.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    mask = np.abs(u) < 1.0
    out[mask] = 0.9375 * (1.0 - u[mask] ** 2) ** 2
    return out


def bump_integral_1d(n=20001):
    """Integral of the standard bump over [-1, 1] by a dense Simpson rule.

    Independent of the package quadrature engine; used as a reference value.
    """
    x = np.linspace(-1.0, 1.0, n)
    y = standard_bump(x)
    h = x[1] - x[0]
    coeff = np.ones(n)
    coeff[1:-1:2] = 4.0
    coeff[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(coeff * y))


RADIAL_SHAPES = {
    "bump": standard_bump_radial2,
    "cosine": cosine_bump_radial2,
}
