"""L^p-positivity of symmetric nonlocal forms with radial kernels.

The bilinear form ``B(u, v) = 1/2 int int (u(x)-u(y))(v(x)-v(y)) K(x-y) dx dy``
is evaluated on a uniform grid as ``1/2 sum_d W(d) D(d) + T <u, v>`` where

* ``D(d) = sum_x (u_x - u_{x+d})(v_x - v_{x+d}) h^n`` is the pair-difference
  correlation at lattice offset ``d`` (computed with FFTs),
* ``W(d)`` are nonnegative lattice weights: point values ``h^n K(hd)`` plus a
  near-diagonal correction at the nearest neighbours that restores second
  order accuracy (it accounts for the exact second moment of the kernel on a
  small box around the origin),
* ``T`` is the exact kernel mass outside the lattice window, where ``D`` is
  the constant ``2 <u, v>``.

The diagonal ``d = 0`` never contributes.  Because all weights are
nonnegative, any pointwise inequality between pair differences sums to the
same inequality for the forms on every grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate as sint

from .model import (
    DEFAULT_TOL,
    DataError,
    DomainError,
    Exponent,
    GridFunction,
    Tolerances,
    UnsupportedFeatureError,
)

SUPPORTED_DIMS = (1, 2)


@dataclass(frozen=True)
class KernelSpec:
    """Radial kernel density ``K(z) = k(|z|)``.

    ``kind="fractional"`` uses ``k(r) = scale * r^(-n-2s)``.
    ``kind="tabulated"`` interpolates ``(radii, density)`` log-log and
    extends it by power laws fitted to the first and last two samples.
    """

    kind: str = "fractional"
    n: int = 1
    s: float = 0.5
    scale: float = 1.0
    radii: Optional[tuple] = None
    density: Optional[tuple] = None
    box_radius: float = 0.5

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMS:
            raise UnsupportedFeatureError(f"nonlocal forms support n in {SUPPORTED_DIMS}, got {self.n}")
        if self.kind == "fractional":
            if not 0.0 < self.s < 1.0:
                raise DomainError(f"fractional order s must lie in (0, 1), got {self.s}")
            if not self.scale > 0:
                raise DataError("kernel scale must be positive")
        elif self.kind == "tabulated":
            r = np.asarray(self.radii, float)
            k = np.asarray(self.density, float)
            if r.ndim != 1 or r.shape != k.shape or r.size < 2:
                raise DataError("tabulated kernel needs matching radii/density arrays of length >= 2")
            if np.any(np.diff(r) <= 0) or r[0] <= 0:
                raise DataError("radii must be positive and strictly increasing")
            if np.any(k <= 0) or not np.all(np.isfinite(k)):
                raise DataError("density samples must be positive and finite")
            object.__setattr__(self, "radii", tuple(r.tolist()))
            object.__setattr__(self, "density", tuple(k.tolist()))
            lo, hi = self.tail_exponents
            if not lo < self.n + 2:
                raise DataError("kernel violates the near-diagonal second-moment condition")
            if not hi > self.n:
                raise DataError("kernel is not integrable at infinity")
        else:
            raise DataError(f"unknown kernel kind {self.kind!r}")

    @property
    def tail_exponents(self) -> tuple:
        """Power-law exponents ``a`` with ``k ~ r^-a`` near 0 and near infinity."""
        if self.kind == "fractional":
            a = self.n + 2 * self.s
            return a, a
        lr = np.log(self.radii)
        lk = np.log(self.density)
        lo = -(lk[1] - lk[0]) / (lr[1] - lr[0])
        hi = -(lk[-1] - lk[-2]) / (lr[-1] - lr[-2])
        return float(lo), float(hi)

    def density_at(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        if self.kind == "fractional":
            with np.errstate(divide="ignore"):
                return self.scale * r ** (-self.n - 2 * self.s)
        lr = np.log(self.radii)
        lk = np.log(self.density)
        lo, hi = self.tail_exponents
        with np.errstate(divide="ignore"):
            x = np.log(r)
        out = np.interp(x, lr, lk)
        out = np.where(x < lr[0], lk[0] - lo * (x - lr[0]), out)
        out = np.where(x > lr[-1], lk[-1] - hi * (x - lr[-1]), out)
        return np.exp(out)

    def fractional_lower_constant(self, s: float) -> float:
        """Largest C with k(r) >= C r^(-n-2s) on the tabulated range (and its tails)."""
        if self.kind == "fractional":
            if not math.isclose(s, self.s):
                raise DomainError("fractional kernel only dominates its own order")
            return self.scale
        lo, hi = self.tail_exponents
        a = self.n + 2 * s
        if lo < a or hi > a:
            return 0.0
        r = np.asarray(self.radii)
        return float(np.min(np.asarray(self.density) * r ** a))

    # exact integrals ------------------------------------------------------

    def _radial_integral(self, power: int, r0: float, r1: float) -> float:
        """int_{r0}^{r1} k(r) r^power dr."""
        if self.kind == "fractional":
            e = power - self.n - 2 * self.s + 1
            top = 0.0 if math.isinf(r1) else r1 ** e
            bot = 0.0 if r0 == 0 else r0 ** e
            return self.scale * (top - bot) / e
        pts = [r for r in self.radii if r0 < r < r1] if not math.isinf(r1) else [r for r in self.radii if r > r0]
        f = lambda r: float(self.density_at(r)) * r ** power
        total = 0.0
        edges = [r0] + pts + [r1]
        for a, b in zip(edges[:-1], edges[1:]):
            total += sint.quad(f, a, b, limit=200)[0]
        return total

    def box_second_moment(self, rho: float) -> float:
        """int over [-rho, rho]^n of K(z) z_1^2 dz."""
        if self.n == 1:
            return 2.0 * self._radial_integral(2, 0.0, rho)
        # by symmetry, (1/2) of the |z|^2 moment; polar over 8 octant wedges
        inner = lambda th: self._radial_integral(3, 0.0, rho / math.cos(th))
        return 0.5 * 8.0 * sint.quad(inner, 0.0, math.pi / 4, limit=100)[0]

    def outer_mass(self, L: float) -> float:
        """Kernel mass outside the cube ``[-L, L]^n``."""
        if self.n == 1:
            return 2.0 * self._radial_integral(0, L, math.inf)
        inner = lambda th: self._radial_integral(1, L / math.cos(th), math.inf)
        return 8.0 * sint.quad(inner, 0.0, math.pi / 4, limit=100)[0]


@lru_cache(maxsize=64)
def _weights_cached(k: KernelSpec, h: float, shape: tuple):
    n = len(shape)
    offs = [np.arange(-(N - 1), N) for N in shape]
    D = np.meshgrid(*offs, indexing="ij")
    r = h * np.sqrt(sum(d.astype(float) ** 2 for d in D))
    W = np.zeros(r.shape)
    nz = r > 0
    W[nz] = h ** n * k.density_at(r[nz])
    center = tuple(N - 1 for N in shape)
    # near-diagonal second-moment correction on a cell aligned box
    m = max(1, int(round(k.box_radius / h - 0.5)))
    m = min(m, min(shape) - 1)
    rho = (m + 0.5) * h
    inbox = np.ones(r.shape, bool)
    for d in D:
        inbox &= np.abs(d) <= m
    for i in range(n):
        lattice = float(np.sum(W[inbox & nz] * (h * D[i][inbox & nz]) ** 2))
        c = k.box_second_moment(rho) - lattice
        for sgn in (1, -1):
            idx = list(center)
            idx[i] += sgn
            W[tuple(idx)] += c / (2.0 * h * h)
    L = (min(shape) - 0.5) * h if len(set(shape)) == 1 else None
    if L is None:
        raise DataError("nonlocal forms need the same number of points on every axis")
    W.setflags(write=False)
    return W, k.outer_mass(L)


def lattice_weights(k: KernelSpec, h: float, shape: tuple):
    """Offset weights ``W`` (centered array of shape ``2N-1`` per axis) and outer mass ``T``."""
    return _weights_cached(k, float(h), tuple(int(s) for s in shape))


def _real(u: GridFunction) -> np.ndarray:
    v = np.asarray(u.values)
    if np.iscomplexobj(v):
        if np.any(v.imag != 0):
            raise DataError("nonlocal forms act on real-valued functions")
        v = v.real
    return v.astype(float)


def pair_differences(u: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """``D(d)`` for all offsets, arranged like :func:`lattice_weights`."""
    shape = u.shape
    n = u.ndim
    full = tuple(2 * N for N in shape)
    axes = tuple(range(n))
    Fu = np.fft.rfftn(u, full, axes)
    Fv = np.fft.rfftn(v, full, axes)
    corr = np.fft.irfftn(np.conj(Fu) * Fv, full, axes)  # corr[d] = sum_x u_x v_{x+d}
    corr = np.fft.fftshift(corr)
    sl = tuple(slice(1, 2 * N) for N in shape)
    c = corr[sl]
    c_rev = c[(slice(None, None, -1),) * n]
    S = float(np.sum(u * v))
    return (2.0 * S - c - c_rev) * h ** n


def _fsum_dot(a: np.ndarray, b: np.ndarray) -> float:
    return math.fsum((a * b).ravel().tolist())


def bilinear_form(u: GridFunction, v: GridFunction, k: KernelSpec) -> float:
    """Symmetric nonlocal form ``B(u, v)``; symmetric in its arguments exactly."""
    if not u.same_grid(v):
        raise DomainError("u and v must live on the same grid")
    if u.ndim != k.n:
        raise DomainError(f"grid dimension {u.ndim} does not match kernel dimension {k.n}")
    a, b = _real(u), _real(v)
    W, T = lattice_weights(k, u.h, a.shape)
    # symmetrize D so B(u, v) = B(v, u) holds to the last bit
    D = 0.5 * (pair_differences(a, b, u.h) + pair_differences(b, a, u.h))
    inner = math.fsum((a * b).ravel().tolist()) * u.h ** u.ndim
    return 0.5 * _fsum_dot(W, D) + T * inner


def signed_power(x: np.ndarray, q: float) -> np.ndarray:
    """|x|^{q-1} sign(x); q > 1 so the map is continuous at 0."""
    return np.sign(x) * np.abs(x) ** (q - 1.0)


def _branch(u: GridFunction, e: Exponent):
    """Pair (f, g) with the form ``B(f, g)`` representing int <Tu, |u|^{p-2}u>.

    For p < 2 the dual pairing ``B(|u|^{p'-2}u, u)`` is used; it is the p-form
    of ``v = |u|^{p'-2}u`` and avoids negative powers at zeros of u.
    Also returns ``w`` with ``RHS = (4/pp') B(w, w)``.
    """
    x = _real(u)
    if e.p >= 2:
        f, g = x, signed_power(x, e.p)
        w = np.abs(x) ** (e.p / 2.0)
    else:
        f, g = signed_power(x, e.p_conj), x
        w = np.abs(x) ** (e.p_conj / 2.0)
    return u.with_values(f), u.with_values(g), u.with_values(w)


def fractional_kernel(n: int, s: float, scale: float = 1.0) -> KernelSpec:
    return KernelSpec("fractional", n=n, s=s, scale=scale)


def fractional_form_p(u: GridFunction, e: Exponent, s: float) -> float:
    """``int <Tu, |u|^{p-2} u>`` for the kernel ``|x-y|^{-n-2s}``."""
    k = fractional_kernel(u.ndim, s)
    f, g, _ = _branch(u, e)
    return bilinear_form(f, g, k)


def form_p(u: GridFunction, e: Exponent, k: KernelSpec) -> float:
    f, g, _ = _branch(u, e)
    return bilinear_form(f, g, k)


def scalar_inequality_gap(x, y, e: Exponent):
    """(x-y)(|x|^{p-2}x - |y|^{p-2}y) - (4/pp')(|x|^{p/2} - |y|^{p/2})^2; nonnegative."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    p = e.p
    lhs = (x - y) * (signed_power(x, p) - signed_power(y, p))
    rhs = e.c_pp * (np.abs(x) ** (p / 2) - np.abs(y) ** (p / 2)) ** 2
    out = lhs - rhs
    return float(out) if out.ndim == 0 else out


def gap_scale(x, y, e: Exponent):
    """Magnitude of the terms in :func:`scalar_inequality_gap`, for relative tolerances."""
    x = np.abs(np.asarray(x, float))
    y = np.abs(np.asarray(y, float))
    return np.maximum(x, y) ** e.p + np.finfo(float).tiny


def besov_seminorm_sq(v: GridFunction, s: float) -> float:
    """int int |v(x)-v(y)|^2 |x-y|^{-n-2s} dx dy."""
    return 2.0 * bilinear_form(v, v, fractional_kernel(v.ndim, s))


def pairwise_gap_sum(u: GridFunction, e: Exponent, k: KernelSpec) -> float:
    """``LHS - RHS_half`` assembled pair by pair from :func:`scalar_inequality_gap`.

    Equals ``form_p(u) - (4/pp') B(w, w)`` up to rounding; each summand is
    a nonnegative weight times a nonnegative gap.
    """
    f, _, _ = _branch(u, e)
    # for p < 2 the form is the p-form of f = |u|^{p'-2}u
    z = _real(f)
    W, T = lattice_weights(k, u.h, z.shape)
    shape = z.shape
    zp = np.pad(z, [(N, N) for N in shape])
    axes = tuple(range(z.ndim))
    total = []
    for idx in zip(*np.nonzero(W)):
        d = tuple(-(i - (N - 1)) for i, N in zip(idx, shape))
        gap = scalar_inequality_gap(zp, np.roll(zp, d, axis=axes), e)
        total.append(0.5 * float(W[idx]) * math.fsum(gap.ravel().tolist()))
    hn = u.h ** z.ndim
    mass = math.fsum((np.abs(z) ** e.p).ravel().tolist())
    total.append(T * (1.0 - e.c_pp) * mass)
    return math.fsum(total) * hn


@dataclass
class PositivityReport:
    lhs: float
    rhs_half: float
    rhs_printed: float
    margin: float
    holds: bool
    printed_margin: float
    besov_bound: Optional[float] = None
    besov_margin: Optional[float] = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("lhs", "rhs_half", "rhs_printed", "margin", "holds", "printed_margin",
                 "besov_bound", "besov_margin", "details")}


def check_positivity_bound(u: GridFunction, e: Exponent, k: KernelSpec,
                           tol: Tolerances = DEFAULT_TOL, s: Optional[float] = None) -> PositivityReport:
    """Compare ``int <Tu, |u|^{p-2}u>`` with ``(4/pp') B(|u|^{p/2}, |u|^{p/2})``.

    ``rhs_printed`` is twice ``rhs_half``; it is reported but not asserted.
    When the kernel dominates ``C |z|^{-n-2s}`` the Besov lower bound
    ``(2C/pp') ||w||^2`` is also evaluated.
    """
    f, g, w = _branch(u, e)
    lhs = bilinear_form(f, g, k)
    rhs_half = e.c_pp * bilinear_form(w, w, k)
    scale = max(abs(lhs), abs(rhs_half), 1.0)
    margin = lhs - rhs_half
    rep = PositivityReport(lhs, rhs_half, 2.0 * rhs_half, margin, margin >= -tol.form * scale,
                           lhs - 2.0 * rhs_half)
    if s is None and k.kind == "fractional":
        s = k.s
    if s is not None:
        C = k.fractional_lower_constant(s)
        if C > 0:
            b = 2.0 * C / (e.p * e.p_conj) * besov_seminorm_sq(w, s)
            rep.besov_bound = b
            rep.besov_margin = lhs - b
            rep.details["C"] = C
    return rep
