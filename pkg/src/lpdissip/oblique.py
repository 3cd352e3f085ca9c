"""Half-space tools for the oblique derivative problem.

The boundary operator acts on functions of ``x'`` in ``R^{n-1}`` (``n-1`` is
1 or 2).  ``Lambda = sqrt(-Delta')`` is applied through the Fourier
multiplier ``|xi|`` on a zero padded periodic box.  The harmonic extension to
``R^n_+`` is computed independently by Poisson-kernel quadrature, which gives
a cross-check through the Dirichlet-to-Neumann energy identity
``<Lambda u, u> = int_{R^n_+} |grad U|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla
from scipy.fft import next_fast_len
from scipy.signal import fftconvolve

from .grid import diff, integrate
from .model import (
    DEFAULT_TOL,
    ConfigurationError,
    DataError,
    DomainError,
    Exponent,
    GridFunction,
    Status,
    Tolerances,
    UnsupportedFeatureError,
    Verdict,
)
from .probe import _eps, regularized_power


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def poisson_kernel(x2: np.ndarray, t: float, n: int) -> np.ndarray:
    """(2/|S^{n-1}|) t / (|x'|^2 + t^2)^{n/2} evaluated at squared radii ``x2``."""
    return 2.0 / sphere_measure(n) * t / (x2 + t * t) ** (n / 2.0)


def _cell_weights(offsets: list, h: float, t: float) -> np.ndarray:
    """Exact Poisson-kernel mass of each boundary cell (used for small heights)."""
    d = len(offsets)
    if d == 1:
        (k,) = offsets
        a, b = (k - 0.5) * h, (k + 0.5) * h
        return (np.arctan(b / t) - np.arctan(a / t)) / math.pi

    def F(x, y):
        return np.arctan(x * y / (t * np.sqrt(x * x + y * y + t * t))) / (2.0 * math.pi)

    kx, ky = offsets
    a1, b1 = (kx - 0.5) * h, (kx + 0.5) * h
    a2, b2 = (ky - 0.5) * h, (ky + 0.5) * h
    return F(b1, b2) - F(a1, b2) - F(b1, a2) + F(a1, a2)


def poisson_weights(shape: tuple, h: float, t: float, point_threshold: float = 4.0) -> np.ndarray:
    """Convolution weights over offsets ``-(N-1)..(N-1)`` for height ``t``.

    Point sampling ``h^{n-1} P_t`` is used for ``t >= point_threshold * h``
    and exact cell masses below, so the weights stay nonnegative with total
    mass at most one (discrete maximum principle).
    """
    offs = np.meshgrid(*[np.arange(-(N - 1), N) for N in shape], indexing="ij")
    d = len(shape)
    if t >= point_threshold * h:
        x2 = sum((h * o) ** 2 for o in offs)
        return h ** d * poisson_kernel(x2, t, d + 1)
    return _cell_weights(offs, h, t)


@dataclass
class HalfSpaceFunction:
    """Boundary trace ``u`` and its extension sampled at heights ``levels``.

    ``U[j]`` is the layer at ``levels[j]``; ``mass[j]`` the discrete kernel mass.
    """

    trace: GridFunction
    levels: np.ndarray
    U: np.ndarray
    mass: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def layer(self, j: int) -> np.ndarray:
        return self.U[j]

    def top_layer_max(self) -> float:
        return float(np.max(np.abs(self.U[-1])))

    def decayed(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.top_layer_max() <= tol.form


def harmonic_extension(u: GridFunction, levels: Sequence[float]) -> HalfSpaceFunction:
    levels = np.asarray(levels, float)
    if levels.ndim != 1 or levels.size == 0:
        raise ConfigurationError("levels must be a non-empty 1-d array")
    if np.any(levels <= 0):
        raise DomainError("extension levels must be positive")
    if u.ndim not in (1, 2):
        raise UnsupportedFeatureError("boundary dimension must be 1 or 2")
    vals = u.values
    shape = vals.shape
    N = shape
    layers = []
    masses = []
    for t in levels:
        w = poisson_weights(shape, u.h, float(t))
        masses.append(float(np.sum(w)))
        full = fftconvolve(vals, w, mode="full")
        sl = tuple(slice(n_ - 1, 2 * n_ - 1) for n_ in N)
        layers.append(full[sl])
    return HalfSpaceFunction(u, levels, np.array(layers), np.array(masses))


def dirichlet_energy_halfspace(ext: HalfSpaceFunction, flux_tail: bool = True) -> float:
    """int_{R^n_+} |grad U|^2 over the sampled layers.

    Layers are integrated with the trapezoid rule on the (possibly nonuniform)
    heights.  With ``flux_tail`` the energy above the top layer ``T`` is added
    through Green's identity, ``-int U dU/dt`` at ``t = T``.
    """
    h = ext.trace.h
    t = np.concatenate([[0.0], ext.levels])
    U = np.concatenate([ext.trace.values[None], ext.U])
    Ut = np.gradient(U, t, axis=0, edge_order=2)
    dens = np.abs(Ut) ** 2
    for ax in range(ext.trace.ndim):
        dens = dens + np.abs(diff(U, ax + 1, h)) ** 2
    per_layer = np.array([integrate(dens[j], h) for j in range(len(t))])
    energy = float(np.trapezoid(per_layer, t))
    if flux_tail:
        energy += float(-integrate(np.real(U[-1] * np.conj(Ut[-1])), h))
    return energy


def _padded_size(u: GridFunction, padding: float) -> tuple:
    if padding < 4.0:
        raise ConfigurationError("periodic padding must be at least 4 times the support diameter")
    nz = np.nonzero(np.abs(u.values) > 0)
    sizes = []
    for ax, N in enumerate(u.grid_shape):
        if nz[0].size:
            diam = int(nz[ax].max() - nz[ax].min() + 1)
        else:
            diam = 1
        sizes.append(next_fast_len(max(N, int(math.ceil(padding * diam)) + N)))
    return tuple(sizes)


def _xi(sizes: tuple, h: float) -> np.ndarray:
    ks = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(M, d=h) for M in sizes], indexing="ij")
    return np.sqrt(sum(k * k for k in ks))


def lambda_half_form(u: GridFunction, v: GridFunction, padding: float = 64.0) -> complex:
    """int Lambda^{1/2} u * conj(Lambda^{1/2} v) dx' by the multiplier |xi|."""
    if not u.same_grid(v):
        raise DomainError("u and v must share a grid")
    sizes = _padded_size(u.with_values(np.abs(u.values) + np.abs(v.values)), padding)
    axes = tuple(range(u.ndim))
    Fu = np.fft.fftn(u.values, sizes, axes)
    Fv = np.fft.fftn(v.values, sizes, axes)
    xi = _xi(sizes, u.h)
    scale = u.h ** u.ndim / float(np.prod(sizes))
    val = np.sum(xi * Fu * np.conj(Fv)) * scale
    if u.ndim == 1:
        # Euler-Maclaurin term for the kink of |xi| at 0 on the periodic grid
        dxi = 2 * np.pi / (sizes[0] * u.h)
        val += dxi ** 2 / (6.0 * 2 * np.pi) * (u.h * Fu[0]) * np.conj(u.h * Fv[0])
    return complex(val)


def fourier_energy(u: GridFunction, xi_max: Optional[float] = None) -> float:
    """int |xi| |u^(xi)|^2 dxi / (2 pi)^d with u^ from direct quadrature (1-d trace).

    Independent of the FFT route: the transform is summed directly and the
    xi integral is done by adaptive quadrature.
    """
    from scipy.integrate import quad

    if u.ndim != 1:
        raise UnsupportedFeatureError("direct Fourier energy is implemented for 1-d traces")
    (x,) = u.axes()
    vals = u.values
    h = u.h
    if xi_max is None:
        xi_max = math.pi / h

    def uhat2(xi):
        z = h * np.sum(vals * np.exp(-1j * xi * x))
        return abs(z) ** 2

    val, _ = quad(lambda s: s * uhat2(s), 0.0, xi_max, limit=500, epsabs=0, epsrel=1e-12)
    return 2.0 * val / (2.0 * math.pi)


def _branch(u: GridFunction, e: Exponent, eps0: float):
    v = u.values.astype(complex)
    eps = _eps(v, eps0)
    if e.p >= 2:
        return v, regularized_power(v, e.p, eps)
    return regularized_power(v, e.p_conj, eps), v


def oblique_sesquilinear(U: GridFunction, W: GridFunction, a_field, padding: float = 64.0) -> complex:
    """-int Lambda^{1/2}U conj(Lambda^{1/2}W) + int (a . grad U) conj(W)."""
    d = U.ndim
    a = np.asarray(a_field, complex)
    if a.shape[:1] != (d,):
        raise DataError(f"a must have leading dimension {d}")
    if a.ndim > 1 and a.shape[1:] != U.grid_shape:
        raise DataError("sampled a field does not match the grid")
    if a.ndim == 1:
        a = a.reshape((d,) + (1,) * d)
    drift = sum(a[j] * diff(U.values, j, U.h) for j in range(d))
    return -lambda_half_form(U, W, padding) + complex(integrate(drift * np.conj(W.values), U.h))


def oblique_form(u: GridFunction, a_field, e: Exponent, eps0: float = 1e-6,
                 padding: float = 64.0) -> float:
    """Re L(u, |u|^{p-2}u) (p >= 2) or Re L(|u|^{p'-2}u, u) (p < 2); dissipative means <= 0."""
    U, W = _branch(u, e, eps0)
    return oblique_sesquilinear(u.with_values(U), u.with_values(W), a_field, padding).real


def multiplier_norm_constant(a) -> float:
    """|Im a| for a constant complex vector: the norm of the constant multiplier."""
    a = np.asarray(a, complex)
    if a.ndim != 1:
        raise UnsupportedFeatureError("multiplier norms are only computed for constant coefficients")
    return float(np.linalg.norm(a.imag))


def check_constant_oblique(a, e: Exponent, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Constant coefficients: ``|Im a| < 4/(pp')`` is sufficient; otherwise undecided."""
    m = multiplier_norm_constant(a)
    margin = e.c_pp - m
    status = Status.SUFFICIENT_HOLDS if margin > tol.eig else Status.INDETERMINATE
    return Verdict(status, "oblique-constant", margin, None,
                   {"multiplier_norm": m, "threshold": e.c_pp,
                    "necessary_bound": 1.0 + m})


def lambda_matrix(shape: tuple, h: float, padding: float = 64.0, interior: int = 1) -> tuple:
    """Dense matrix of ``<Lambda ., .>`` on interior grid nodes, and their indices."""
    mask = np.zeros(shape, bool)
    sl = tuple(slice(interior, N - interior) for N in shape)
    mask[sl] = True
    idx = np.flatnonzero(mask)
    sizes = tuple(next_fast_len(int(math.ceil((padding + 1) * N))) for N in shape)
    xi = _xi(sizes, h)
    # Lambda is translation invariant: one column gives all entries
    delta = np.zeros(sizes)
    delta[(0,) * len(shape)] = 1.0
    col = np.real(np.fft.ifftn(xi * np.fft.fftn(delta)))
    coords = np.array(np.unravel_index(idx, shape))
    diffs = (coords[:, :, None] - coords[:, None, :])
    lookup = tuple(np.mod(diffs[k], sizes[k]) for k in range(len(shape)))
    L = col[lookup] * h ** len(shape)
    return 0.5 * (L + L.T), idx


def check_real_oblique(a_field, e: Exponent, grid: GridFunction, div_a=None,
                       tol: Tolerances = DEFAULT_TOL, padding: float = 64.0) -> Verdict:
    """Search for violations of ``-(1/p) int div(a) v^2 <= (4/pp') <Lambda v, v>``.

    The extremal ratio over grid functions is a symmetric generalized
    eigenvalue problem.  A ratio above one yields ``ProvenNotDissipative``
    with the eigenvector as certificate; otherwise the result is
    ``Indeterminate`` with the best ratio found.
    """
    a = np.asarray(a_field)
    if np.iscomplexobj(a) and np.any(np.imag(a) != 0):
        raise DataError("check_real_oblique needs a real coefficient field")
    a = np.real(a)
    shape = grid.grid_shape
    d = grid.ndim
    if a.ndim == 1:
        div = np.zeros(shape)
    else:
        if div_a is None:
            raise ConfigurationError("a sampled coefficient field needs its sampled divergence")
        div = np.broadcast_to(np.asarray(div_a, float), shape)
    L, idx = lambda_matrix(shape, grid.h, padding)
    weight = (-div.reshape(-1)[idx] / e.p) * grid.h ** d
    rhs = e.c_pp * L
    if np.all(weight <= 0):
        return Verdict(Status.INDETERMINATE, "oblique-real", float(np.max(weight, initial=0.0)), None,
                       {"ratio": 0.0, "reason": "divergence is nonnegative"})
    evals, evecs = sla.eigh(np.diag(weight), rhs)
    ratio = float(evals[-1])
    vec = np.zeros(int(np.prod(shape)))
    vec[idx] = evecs[:, -1]
    vf = grid.with_values(vec.reshape(shape) / np.max(np.abs(vec)))
    lhs_v = float(-np.sum(div * vf.values ** 2) * grid.h ** d / e.p)
    rhs_v = e.c_pp * lambda_half_form(vf, vf, padding).real
    details = {"ratio": ratio, "lhs": lhs_v, "rhs": rhs_v}
    if ratio > 1.0 + tol.form and lhs_v > rhs_v:
        return Verdict(Status.PROVEN_NOT_DISSIPATIVE, "oblique-real", rhs_v - lhs_v,
                       {"v": vf.to_dict(), "lhs": lhs_v, "rhs": rhs_v}, details)
    return Verdict(Status.INDETERMINATE, "oblique-real", 1.0 - ratio, None, details)
