"""Discrete Newtonian capacity and capacity tests for Schrodinger-type potentials.

The capacity minimizer (least Dirichlet energy with ``u >= 1`` on F and
``u = 0`` on the box boundary) is the discrete harmonic function equal to 1
on F: by the maximum principle it stays in [0, 1], so the obstacle
constraint is only active on F and a single sparse linear solve suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .model import (
    DEFAULT_TOL,
    ConfigurationError,
    DomainError,
    Exponent,
    GridFunction,
    Status,
    Tolerances,
    Verdict,
)


def graded_axis(half_core: float, h: float, growth: float, half_width: float) -> np.ndarray:
    """Symmetric axis: spacing ``h`` on [-half_core, half_core], then geometric growth."""
    pts = list(np.arange(0.0, half_core + h / 2, h))
    step = h
    while pts[-1] + step * growth < half_width:
        step *= growth
        pts.append(pts[-1] + step)
    pts.append(half_width)
    pos = np.array(pts)
    return np.concatenate([-pos[:0:-1], pos])


def _dual_widths(x: np.ndarray) -> np.ndarray:
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def stiffness_matrix(axes: Sequence[np.ndarray]) -> sp.csr_matrix:
    """Graph Laplacian with energy ``sum_edges area/length (u_i - u_j)^2`` on a tensor grid."""
    shape = tuple(len(a) for a in axes)
    d = len(axes)
    duals = [_dual_widths(np.asarray(a, float)) for a in axes]
    size = int(np.prod(shape))
    idx = np.arange(size).reshape(shape)
    rows, cols, vals = [], [], []
    for ax in range(d):
        dx = np.diff(np.asarray(axes[ax], float))
        w = np.ones([1] * d)
        for other in range(d):
            if other == ax:
                shp = [1] * d
                shp[ax] = len(dx)
                w = w * (1.0 / dx).reshape(shp)
            else:
                shp = [1] * d
                shp[other] = shape[other]
                w = w * duals[other].reshape(shp)
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[ax] = slice(0, shape[ax] - 1)
        hi[ax] = slice(1, shape[ax])
        i = idx[tuple(lo)].ravel()
        j = idx[tuple(hi)].ravel()
        ww = np.broadcast_to(w, idx[tuple(lo)].shape).ravel()
        rows += [i, j, i, j]
        cols += [i, j, j, i]
        vals += [ww, ww, -ww, -ww]
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size))
    return K


def _boundary_mask(shape: tuple) -> np.ndarray:
    m = np.zeros(shape, bool)
    for ax in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[ax] = 0
        m[tuple(sl)] = True
        sl[ax] = -1
        m[tuple(sl)] = True
    return m


@dataclass
class CapacityResult:
    value: float
    potential: np.ndarray
    axes: list
    residual: float


def capacity_on_axes(mask: np.ndarray, axes: Sequence[np.ndarray], tol: float = 1e-10) -> CapacityResult:
    """Capacity of the node set ``mask`` relative to the box spanned by ``axes``."""
    mask = np.asarray(mask, bool)
    shape = tuple(len(a) for a in axes)
    if mask.shape != shape:
        raise ConfigurationError(f"mask shape {mask.shape} does not match axes {shape}")
    bnd = _boundary_mask(shape)
    if np.any(mask & bnd):
        raise DomainError("the set F touches the boundary of the box")
    if not np.any(mask):
        return CapacityResult(0.0, np.zeros(shape), list(axes), 0.0)
    K = stiffness_matrix(axes)
    fixed = (mask | bnd).ravel()
    free = ~fixed
    g = mask.ravel().astype(float)
    Kff = K[free][:, free].tocsr()
    rhs = -K[free][:, fixed] @ g[fixed]
    ml = pyamg.smoothed_aggregation_solver(Kff, symmetry="symmetric")
    res: list = []
    x = ml.solve(rhs, tol=tol, accel="cg", residuals=res, maxiter=500)
    u = g.copy()
    u[free] = x
    energy = float(u @ (K @ u))
    rel = res[-1] / max(res[0], 1e-300) if res else 0.0
    return CapacityResult(energy, u.reshape(shape), list(axes), float(rel))


def capacity_estimate(F: GridFunction, tol: float = 1e-10) -> float:
    """Capacity of ``{F > 0}`` relative to the grid box of ``F``."""
    mask = np.asarray(F.values) > 0
    return capacity_on_axes(mask, F.axes(), tol).value


def ball_mask(axes: Sequence[np.ndarray], r: float, center=None) -> np.ndarray:
    X = np.meshgrid(*axes, indexing="ij")
    if center is None:
        center = [0.0] * len(axes)
    return sum((x - c) ** 2 for x, c in zip(X, center)) <= r * r * (1 + 1e-12)


def _node_volumes(axes) -> np.ndarray:
    duals = [_dual_widths(np.asarray(a, float)) for a in axes]
    V = duals[0]
    for w in duals[1:]:
        V = np.multiply.outer(V, w)
    return V


def measure_of(mu: np.ndarray, mask: np.ndarray, axes) -> float:
    return float(np.sum(mu[mask] * _node_volumes(axes)[mask]))


def rayleigh_max(mu: np.ndarray, axes) -> float:
    """max over w vanishing on the box boundary of int |w|^2 dmu / int |grad w|^2."""
    shape = mu.shape
    K = stiffness_matrix(axes)
    free = ~_boundary_mask(shape).ravel()
    Kff = K[free][:, free].tocsc()
    m = (mu * _node_volumes(axes)).ravel()[free]
    if not np.any(m > 0):
        return 0.0
    M = sp.diags(m).tocsc()
    vals = eigsh(M, k=1, M=Kff, which="LA", return_eigenvectors=False)
    return float(vals[0])


def check_schrodinger_capacity(mu: GridFunction, e: Exponent, F_list: Sequence[np.ndarray],
                               tol: Tolerances = DEFAULT_TOL, allow_signed: bool = False,
                               rayleigh: bool = True) -> Verdict:
    """Compare ``mu(F)/cap(F)`` with ``1/(pp')`` (sufficient) and ``4/(pp')`` (necessary).

    With ``allow_signed`` a signed density is accepted and only the
    sufficient test is applied, to its positive part.
    """
    vals = np.asarray(mu.values, float)
    if np.any(vals < 0) and not allow_signed:
        raise DomainError("mu must be a nonnegative density")
    signed = bool(np.any(vals < 0))
    dens = np.maximum(vals, 0.0)
    axes = mu.axes()
    pp = e.p * e.p_conj
    ratios = []
    for F in F_list:
        F = np.asarray(F, bool)
        cap = capacity_on_axes(F, axes).value
        m = measure_of(dens, F, axes)
        ratios.append(0.0 if m == 0 else (math.inf if cap == 0 else m / cap))
    worst = max(ratios, default=0.0)
    details = {"ratios": ratios, "sufficient_threshold": 1.0 / pp, "necessary_threshold": 4.0 / pp,
               "signed": signed}
    if rayleigh:
        details["rayleigh"] = rayleigh_max(dens, axes)
        details["direct_inequality_holds"] = details["rayleigh"] <= 4.0 / pp + tol.form
    cert = None
    if worst <= 1.0 / pp + tol.form:
        status = Status.SUFFICIENT_HOLDS
        margin = 1.0 / pp - worst
    elif worst > 4.0 / pp + tol.form and not signed:
        status = Status.NECESSARY_FAILS
        margin = 4.0 / pp - worst
        cert = {"set_index": int(np.argmax(ratios)), "ratio": worst}
    else:
        status = Status.INDETERMINATE
        margin = 1.0 / pp - worst
    return Verdict(status, "schrodinger-capacity", margin, cert, details)
