"""Finite differences and quadrature on uniform grids with zero extension."""

from __future__ import annotations

import numpy as np


def diff(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered difference along ``axis``; values outside the grid are zero.

    The operator is exactly antisymmetric, so summation by parts holds
    without boundary terms for compactly supported data.
    """
    f = np.asarray(f)
    pad = [(0, 0)] * f.ndim
    pad[axis] = (1, 1)
    g = np.pad(f, pad)
    n = f.shape[axis]
    hi = np.take(g, range(2, n + 2), axis=axis)
    lo = np.take(g, range(0, n), axis=axis)
    return (hi - lo) / (2.0 * h)


def gradient(f: np.ndarray, h: float, axes=None) -> np.ndarray:
    """Stack of centered differences over the leading ``len(axes)`` grid axes."""
    if axes is None:
        axes = range(f.ndim)
    return np.stack([diff(f, ax, h) for ax in axes])


def integrate(F: np.ndarray, h: float, ndim: int | None = None) -> complex | float:
    """Trapezoid rule over the trailing ``ndim`` axes (all axes by default)."""
    F = np.asarray(F)
    if ndim is None:
        ndim = F.ndim
    out = F
    for _ in range(ndim):
        out = np.trapezoid(out, dx=h, axis=-1)
    return out


def sine_basis(shape: tuple, modes: int, inset: int = 0) -> np.ndarray:
    """Tensor products of sine modes vanishing at indices ``inset`` and ``N-1-inset``.

    Returns an array ``(modes**d, *shape)``; entries outside the inset box are 0.
    """
    factors = []
    for N in shape:
        L = N - 1 - 2 * inset
        idx = np.arange(N) - inset
        inside = (idx >= 0) & (idx <= L)
        rows = []
        for k in range(1, modes + 1):
            row = np.where(inside, np.sin(k * np.pi * idx / L), 0.0)
            rows.append(row)
        factors.append(np.array(rows))
    basis = factors[0]
    for fac in factors[1:]:
        basis = np.einsum("a...,bj->ab...j", basis, fac).reshape((-1,) + basis.shape[1:] + fac.shape[1:])
    return basis
