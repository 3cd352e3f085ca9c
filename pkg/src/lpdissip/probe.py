"""Numerical oracle: discretized dissipativity functionals and counterexample search.

All functionals use centered differences with zero extension and the
trapezoid rule.  They are independent of the algebraic criteria and serve to
cross-check them: a negative value of a scalar form (or a positive value of
the Lame form) is a numerical counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import diff, gradient, integrate, sine_basis
from .model import (
    ConfigurationError,
    DomainError,
    Exponent,
    GridFunction,
    OperatorSpec,
    box_grid,
    check_poisson_ratio,
)


@dataclass
class ProbeResult:
    value: float
    u_star: Optional[GridFunction]
    converged: bool
    evaluations: int
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": self.value, "converged": self.converged,
                "evaluations": self.evaluations,
                "u_star": None if self.u_star is None else self.u_star.to_dict()}


@dataclass(frozen=True)
class ProbeBudget:
    restarts: int = 20
    iterations: int = 15
    modes: int = 4
    grid: int = 33
    box: tuple = (-1.0, 1.0)
    seed: int = 0


def regularized_power(u: np.ndarray, q: float, eps: float) -> np.ndarray:
    """(|u|^2 + eps^2)^((q-2)/2) u, the smoothed duality map."""
    if q == 2.0:
        return u
    return (np.abs(u) ** 2 + eps * eps) ** ((q - 2.0) / 2.0) * u


def _eps(u: np.ndarray, eps0: float) -> float:
    return eps0 * float(np.max(np.abs(u), initial=0.0))


def _require_support(u: GridFunction):
    if not u.check_support:
        if not u._boundary_is_zero():
            raise DomainError("support touches the boundary layer")


def _coef(x, lead: int, grid_shape: tuple) -> np.ndarray:
    """Broadcast a constant or sampled coefficient to ``lead_shape + grid_shape``."""
    x = np.asarray(x, complex)
    if x.ndim == lead:
        return x.reshape(x.shape + (1,) * len(grid_shape))
    if x.shape[lead:] != tuple(grid_shape):
        raise ConfigurationError(f"coefficient field shape {x.shape} does not match grid {grid_shape}")
    return x


def _divergence(vec, h: float, grid_shape: tuple, given=None) -> np.ndarray:
    if given is not None:
        return _coef(given, 0, grid_shape)
    vec = np.asarray(vec, complex)
    if vec.ndim == 1:
        return np.zeros((1,) * len(grid_shape))
    return sum(diff(vec[j], j, h) for j in range(vec.shape[0]))


def sesquilinear_form(U: np.ndarray, W: np.ndarray, spec: OperatorSpec, h: float) -> complex:
    """L(U, W) = int <A grad U, grad W> - <b.grad U, W> + <U, conj(c).grad W> - a U conj(W)."""
    gs = U.shape
    n = U.ndim
    A = _coef(spec.A, 2, gs)
    b = _coef(spec.b, 1, gs)
    c = _coef(spec.c, 1, gs)
    a = _coef(spec.a, 0, gs)
    gU = gradient(U, h)
    gWc = gradient(np.conj(W), h)
    principal = np.einsum("hk...,k...,h...->...", A, gU, gWc) if n else 0
    integrand = (principal
                 - np.einsum("j...,j...->...", b, gU) * np.conj(W)
                 + U * np.einsum("j...,j...->...", c, gWc)
                 - a * U * np.conj(W))
    return complex(integrate(integrand, h))


def evaluate_scalar_form(u: GridFunction, spec: OperatorSpec, e: Exponent,
                         eps0: float = 1e-6) -> float:
    """Re L(u, |u|^{p-2} u) for p >= 2, Re L(|u|^{p'-2} u, u) for p < 2."""
    _require_support(u)
    if spec.kind != "scalar" or u.ndim != spec.n:
        raise ConfigurationError("evaluate_scalar_form needs a scalar spec matching the grid dimension")
    v = u.values.astype(complex)
    eps = _eps(v, eps0)
    if e.p >= 2:
        U, W = v, regularized_power(v, e.p, eps)
    else:
        U, W = regularized_power(v, e.p_conj, eps), v
    return sesquilinear_form(U, W, spec, u.h).real


def epsilon_trend(u: GridFunction, spec: OperatorSpec, e: Exponent,
                  eps_list=(1e-5, 1e-6, 1e-7)) -> list:
    return [evaluate_scalar_form(u, spec, e, eps0) for eps0 in eps_list]


def evaluate_substituted_functional(v: GridFunction, spec: OperatorSpec, e: Exponent) -> float:
    """Functional whose nonnegativity over all v characterizes dissipativity.

    Terms involving ``|v|^{-1}`` are set to zero where ``|v|`` vanishes
    (below ``1e-12 max|v|``).
    """
    _require_support(v)
    V = v.values.astype(complex)
    h = v.h
    gs = V.shape
    A = _coef(spec.A, 2, gs)
    Astar = np.conj(np.swapaxes(A, 0, 1))
    b = _coef(spec.b, 1, gs)
    c = _coef(spec.c, 1, gs)
    a = _coef(spec.a, 0, gs)
    k = e.k
    gV = gradient(V, h)
    mod = np.abs(V)
    nz = mod > 1e-12 * float(np.max(mod, initial=0.0))
    safe = np.where(nz, mod, 1.0)
    grad_mod = np.where(nz, np.real(np.conj(V) * gV) / safe, 0.0)
    t1 = np.einsum("hk...,k...,h...->...", A, gV, np.conj(gV))
    Y = np.where(nz, V * np.conj(gV) / safe, 0.0)  # conj(|v|^{-1} conj(v) grad v)
    t2 = np.einsum("hk...,k...,h...->...", A - Astar, grad_mod, Y)
    t3 = np.einsum("hk...,k...,h...->...", A, grad_mod, grad_mod)
    principal = np.real(t1 - k * t2 - k * k * t3)
    lower = np.einsum("j...,j...->...", np.imag(b + c), np.imag(np.conj(V) * gV))
    div_term = (_divergence(spec.b, h, gs, spec.div_b) / e.p
                - _divergence(spec.c, h, gs, spec.div_c) / e.p_conj - a)
    zeroth = np.real(div_term) * mod ** 2
    return float(integrate(principal + lower + zeroth, h))


def lp_norm_p(u: np.ndarray, q: float, h: float) -> float:
    return float(integrate(np.abs(u) ** q, h))


# ---------------------------------------------------------------- search

def _fd_gradient(f: Callable, x: np.ndarray, f0: float, step: float = 1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        d = step * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += d
        xm = x.copy(); xm[i] -= d
        g[i] = (f(xp) - f(xm)) / (2 * d)
    return g, 2 * x.size


def descend(f: Callable, x0: np.ndarray, iterations: int, step0: float = 1.0):
    """Finite-difference gradient descent with Armijo backtracking.

    Returns ``(x, fx, evaluations, converged, history)``.
    """
    x = np.array(x0, float)
    fx = f(x)
    evals = 1
    hist = [fx]
    step = step0
    converged = False
    for _ in range(iterations):
        g, ne = _fd_gradient(f, x, fx)
        evals += ne
        gn = float(g @ g)
        if gn < 1e-24:
            converged = True
            break
        accepted = False
        for _ in range(30):
            xn = x - step * g
            fn = f(xn)
            evals += 1
            if fn <= fx - 1e-4 * step * gn:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        if abs(fx - fn) <= 1e-12 * max(1.0, abs(fx)):
            converged = True
        x, fx = xn, fn
        hist.append(fx)
        step *= 2.0
        if converged:
            break
    return x, fx, evals, converged, hist


def random_test_functions(grid_shape, origin, h, count: int, modes: int = 4, seed: int = 0,
                          complex_valued: bool = True) -> list:
    """Random smooth compactly supported grid functions (sine-mode combinations)."""
    rng = np.random.default_rng(seed)
    B = sine_basis(tuple(grid_shape), modes)
    decay = np.array([1.0 / (1 + i) for i in range(B.shape[0])])
    out = []
    for _ in range(count):
        c = rng.standard_normal(B.shape[0]) * decay
        if complex_valued:
            c = c + 1j * rng.standard_normal(B.shape[0]) * decay
        vals = np.tensordot(c, B, axes=1)
        vals = _zero_margin(vals)
        out.append(GridFunction(vals, origin, h))
    return out


def _zero_margin(vals: np.ndarray, width: int = 1, naxes: int | None = None) -> np.ndarray:
    vals = np.array(vals)
    for ax in range(vals.ndim if naxes is None else naxes):
        idx = [slice(None)] * vals.ndim
        idx[ax] = slice(0, width)
        vals[tuple(idx)] = 0
        idx[ax] = slice(vals.shape[ax] - width, None)
        vals[tuple(idx)] = 0
    return vals


def search_counterexample(spec: OperatorSpec, e: Exponent, budget: ProbeBudget = ProbeBudget(),
                          initial: Optional[list] = None) -> ProbeResult:
    """Minimize the normalized scalar form over sine-mode test functions.

    The objective is ``value(u) / ||u||_q^q`` with ``q`` the homogeneity
    degree (``p`` or ``p'``), so it is invariant under scaling of u.  Restarts
    are deterministic given ``budget.seed`` and merged by minimum value.
    """
    if spec.kind == "elasticity":
        if spec.nu is None or np.ndim(spec.nu) != 0:
            raise ConfigurationError("elasticity probing needs a constant Poisson ratio")
        res = search_lame_counterexample(float(spec.nu), e, n=spec.n, grid=budget.grid,
                                         restarts=budget.restarts, iterations=budget.iterations,
                                         modes=budget.modes, seed=budget.seed)
        # report with the scalar sign convention: negative means counterexample
        res.value = -res.value
        return res
    if spec.kind != "scalar":
        raise ConfigurationError(f"no probe for operator kind {spec.kind!r}")
    n = spec.n
    if spec.grid is not None:
        origin = tuple(spec.grid["origin"]); h = float(spec.grid["spacing"])
        shape = tuple(spec.grid["shape"])
    else:
        origin, h, _ = box_grid(budget.box[0], budget.box[1], budget.grid, n)
        shape = (budget.grid,) * n
    B = sine_basis(shape, budget.modes)
    K = B.shape[0]
    q = max(e.p, e.p_conj)

    def make(x):
        c = x[:K] + 1j * x[K:]
        return _zero_margin(np.tensordot(c, B, axes=1))

    def objective(x):
        vals = make(x)
        norm = lp_norm_p(vals, q, h)
        if norm <= 0:
            return 0.0
        vals = vals / norm ** (1.0 / q)
        return evaluate_scalar_form(GridFunction(vals, origin, h), spec, e)

    best = None
    evals = 0
    starts = []
    rng = np.random.default_rng(budget.seed)
    for r in range(budget.restarts):
        starts.append(rng.standard_normal(2 * K))
    results = []
    for x0 in starts:
        x, fx, ne, conv, hist = descend(objective, x0, budget.iterations, step0=0.1)
        evals += ne
        results.append((fx, x, conv, hist))
    if initial:
        for u0 in initial:
            vals = u0.values
            norm = lp_norm_p(vals, q, h)
            fx = evaluate_scalar_form(u0.with_values(vals / norm ** (1.0 / q)), spec, e)
            evals += 1
            results.append((fx, None, True, [fx], u0))
    for i, res in enumerate(results):
        if best is None or res[0] < best[0]:
            best = res
    fx = best[0]
    if best[1] is not None:
        vals = make(best[1])
    else:
        vals = best[4].values
    norm = lp_norm_p(vals, q, h)
    u_star = GridFunction(vals / norm ** (1.0 / q), origin, h)
    value = evaluate_scalar_form(u_star, spec, e)
    return ProbeResult(value, u_star, bool(best[2]), evals, best[3])


# ---------------------------------------------------------------- sigma example

def sigma_integrals(sigma: GridFunction):
    s = np.asarray(sigma.values, float)
    if not np.any(s != 0):
        raise DomainError("sigma must not vanish identically")
    h = sigma.h
    S = float(integrate(s * s, h))
    G = float(integrate(sum(diff(s, j, h) ** 2 for j in range(s.ndim)), h))
    J = float(integrate(diff(s * s, 0, h) ** 2, h))
    return S, J, G


def sigma_modal_probe(sigma: GridFunction, lam: float, t: float) -> float:
    """q(t) = t^2 int sigma^2 - t lam int (d_1 sigma^2)^2 + int |grad sigma|^2."""
    S, J, G = sigma_integrals(sigma)
    return t * t * S - t * lam * J + G


def sigma_modal_direct(sigma: GridFunction, lam: float, t: float) -> float:
    """Same quadratic by quadrature of the pointwise integrand."""
    s = np.asarray(sigma.values, float)
    h = sigma.h
    dens = (t * t * s * s - t * lam * diff(s * s, 0, h) ** 2
            + sum(diff(s, j, h) ** 2 for j in range(s.ndim)))
    return float(integrate(dens, h))


def sigma_lambda_threshold(sigma: GridFunction) -> float:
    """lambda* = 2 sqrt(int sigma^2 int |grad sigma|^2) / int (d_1 sigma^2)^2."""
    S, J, G = sigma_integrals(sigma)
    return 2.0 * math.sqrt(S * G) / J


def sigma_minimizing_t(sigma: GridFunction, lam: float) -> float:
    S, J, _ = sigma_integrals(sigma)
    return lam * J / (2.0 * S)


def sigma_example_spec(sigma: GridFunction, lam: float) -> OperatorSpec:
    """Planar operator with A = [[1, i lam d_1(sigma^2)], [-i lam d_1(sigma^2), 1]] sampled on sigma's grid."""
    s = np.asarray(sigma.values, float)
    g = diff(s * s, 0, sigma.h)
    A = np.zeros((2, 2) + s.shape, complex)
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    A[0, 1] = 1j * lam * g
    A[1, 0] = -1j * lam * g
    return OperatorSpec(kind="scalar", n=2, A=A, coefficient_class="smooth-sampled",
                        id="sigma-example",
                        grid={"origin": list(sigma.origin), "spacing": sigma.h, "shape": list(s.shape)})


def sigma_ansatz(sigma: GridFunction, t: float) -> GridFunction:
    """u = sigma exp(i t x_2)."""
    X = sigma.mesh()
    return sigma.with_values(sigma.values * np.exp(1j * t * X[1]))


def bump(X: list, radius: float = 1.0, power: int = 4, center=None) -> np.ndarray:
    """(1 - |x - c|^2 / r^2)_+^power."""
    if center is None:
        center = [0.0] * len(X)
    r2 = sum((x - c) ** 2 for x, c in zip(X, center)) / radius ** 2
    return np.where(r2 < 1, (1 - r2) ** power, 0.0)


# ---------------------------------------------------------------- Lame

def lame_form(v: GridFunction, nu: float, e: Exponent) -> float:
    """Integral of C_p|grad|v||^2 - sum|grad v_j|^2 + g C_p |v|^-2 (v.grad|v|)^2 - g (div v)^2.

    ``g = 1/(1 - 2 nu)``; dissipativity corresponds to value <= 0 for all v.
    ``grad|v|`` uses the chain rule on the differenced components, so the
    pointwise bound ``|grad|v|| <= |grad v|`` holds exactly.
    """
    check_poisson_ratio(nu)
    _require_support(v)
    V = np.asarray(v.values, float)
    n = v.ndim
    if v.dim_range != n:
        raise ConfigurationError("Lame form needs an n-vector field on an n-d grid")
    h = v.h
    gam = 1.0 / (1.0 - 2.0 * nu)
    Cp = e.C_p
    comps = np.moveaxis(V, -1, 0)
    G = np.stack([gradient(comps[j], h) for j in range(n)])  # G[j, h]
    mod = np.sqrt(np.sum(comps ** 2, axis=0))
    nz = mod > 1e-12 * float(np.max(mod, initial=0.0))
    safe = np.where(nz, mod, 1.0)
    grad_mod = np.where(nz, np.einsum("j...,jh...->h...", comps, G) / safe, 0.0)
    radial = np.where(nz, np.einsum("h...,h...->...", comps, grad_mod) / safe, 0.0)
    div = np.einsum("hh...->...", G)
    dens = (Cp * np.sum(grad_mod ** 2, axis=0) - np.sum(G ** 2, axis=(0, 1))
            + gam * Cp * radial ** 2 - gam * div ** 2)
    return float(integrate(dens, h))


def dirichlet_energy(v: GridFunction) -> float:
    V = np.asarray(v.values)
    comps = np.moveaxis(V, -1, 0) if v.dim_range > 1 else V[None]
    return float(sum(integrate(np.sum(np.abs(gradient(c, v.h)) ** 2, axis=0), v.h) for c in comps))


def search_lame_counterexample(nu: float, e: Exponent, n: int = 2, grid: int = 25,
                               restarts: int = 6, iterations: int = 20, modes: int = 4,
                               seed: int = 0) -> ProbeResult:
    """Maximize ``lame_form(v) / ||grad v||^2`` over fields v = grad phi + curl psi + w.

    A positive value is a counterexample to dissipativity.  The potential
    parts let the search reach divergence-free and curl-free fields, which
    are the directions where the functional can become positive.
    """
    check_poisson_ratio(nu)
    origin, h, _ = box_grid(-1.0, 1.0, grid, n)
    shape = (grid,) * n
    Bpot = sine_basis(shape, modes, inset=1)
    Bw = sine_basis(shape, modes, inset=0)
    K1, K2 = Bpot.shape[0], Bw.shape[0]
    grads = np.stack([gradient(b, h) for b in Bpot])  # (K1, n, *shape)
    if n == 2:
        curls = np.stack([np.stack([g[1], -g[0]]) for g in grads])
    else:
        curls = None
    npar = K1 + (K1 if curls is not None else 0) + n * K2

    def make(x):
        i = 0
        field_ = np.tensordot(x[i:i + K1], grads, axes=1); i += K1
        if curls is not None:
            field_ = field_ + np.tensordot(x[i:i + K1], curls, axes=1); i += K1
        w = x[i:].reshape(n, K2)
        field_ = field_ + np.tensordot(w, Bw, axes=(1, 0))
        vals = _zero_margin(np.moveaxis(field_, 0, -1), 1, naxes=n)
        return vals

    def ratio(x):
        vals = make(x)
        gf = GridFunction(vals, origin, h, dim_range=n)
        en = dirichlet_energy(gf)
        if en <= 0:
            return 0.0
        return lame_form(gf, nu, e) / en

    rng = np.random.default_rng(seed)
    best = None
    evals = 0
    for r in range(restarts):
        x0 = rng.standard_normal(npar)
        # alternate emphasis on the potential parts
        if r % 3 == 0:
            x0[K1:] *= 0.05
        elif r % 3 == 1 and curls is not None:
            x0[:K1] *= 0.05
            x0[2 * K1:] *= 0.05
        x, fx, ne, conv, hist = descend(lambda y: -ratio(y), x0, iterations, step0=0.5)
        evals += ne
        if best is None or -fx > best[0]:
            best = (-fx, x, conv, hist)
    vals = make(best[1])
    gf = GridFunction(vals, origin, h, dim_range=n)
    gf = gf.with_values(vals / math.sqrt(dirichlet_energy(gf)))
    return ProbeResult(lame_form(gf, nu, e), gf, bool(best[2]), evals, best[3])


# ---------------------------------------------------------------- weighted radial Lame

def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _signed_power(f: np.ndarray, p: float) -> np.ndarray:
    return np.sign(f) * np.abs(f) ** (p - 1.0)


def weighted_lame_probe(u_rho: GridFunction, n: int, nu: float, alpha: float, e: Exponent,
                        coordinate: str = "log") -> float:
    """int (Delta u + (1-2nu)^-1 grad div u) . |u|^{p-2} u |x|^-alpha dx for u = f(rho) x/rho.

    For radial fields grad div u = Delta u, so the integrand reduces to
    (1 + g) (f'' + (n-1) f'/rho - (n-1) f/rho^2) |f|^{p-2} f times
    rho^{n-1-alpha} and the sphere area.  With ``coordinate="log"`` the grid
    axis is t = log(rho); with ``"linear"`` it is rho itself (rho > 0 required).
    """
    check_poisson_ratio(nu)
    _require_support(u_rho)
    f = np.asarray(u_rho.values, float)
    if u_rho.ndim != 1:
        raise ConfigurationError("radial profile must be one dimensional")
    h = u_rho.h
    (x,) = u_rho.axes()
    factor = (1.0 + 1.0 / (1.0 - 2.0 * nu)) * sphere_area(n)
    if coordinate == "log":
        ft = diff(f, 0, h)
        ftt = _second_diff(f, h)
        Lf = ftt + (n - 2) * ft - (n - 1) * f
        dens = Lf * _signed_power(f, e.p) * np.exp((n - 2 - alpha) * x)
    elif coordinate == "linear":
        if np.any(x <= 0):
            raise DomainError("linear radial grid must lie in rho > 0")
        fr = diff(f, 0, h)
        frr = _second_diff(f, h)
        Lf = frr + (n - 1) * fr / x - (n - 1) * f / x ** 2
        dens = Lf * _signed_power(f, e.p) * x ** (n - 1 - alpha)
    else:
        raise ConfigurationError(f"unknown coordinate {coordinate!r}")
    return factor * float(integrate(dens, h))


def _second_diff(f: np.ndarray, h: float) -> np.ndarray:
    g = np.pad(f, 1)
    return (g[2:] - 2 * g[1:-1] + g[:-2]) / (h * h)


def radial_norm(u_rho: GridFunction, n: int, alpha: float, e: Exponent) -> float:
    """int |f|^p rho^{n-3-alpha} d rho on the log grid."""
    (t,) = u_rho.axes()
    f = np.asarray(u_rho.values, float)
    return float(integrate(np.abs(f) ** e.p * np.exp((n - 2 - alpha) * t), u_rho.h))


def log_radial_grid(t_min: float = -6.0, t_max: float = 6.0, N: int = 1201):
    t = np.linspace(t_min, t_max, N)
    return t, float(t[1] - t[0])


def random_radial_profiles(count: int, n: int, alpha: float, e: Exponent, seed: int = 0,
                           t_range=(-6.0, 6.0), N: int = 1201) -> list:
    """Random smooth profiles on the log-radius grid, normalized to unit weighted p-norm."""
    rng = np.random.default_rng(seed)
    t, h = log_radial_grid(*t_range, N)
    out = []
    for _ in range(count):
        vals = np.zeros_like(t)
        for _ in range(rng.integers(1, 4)):
            c = rng.uniform(t_range[0] + 2, t_range[1] - 2)
            w = rng.uniform(0.3, 1.8)
            vals += rng.normal() * bump([t], radius=w, center=[c])
        vals = _zero_margin(vals)
        gf = GridFunction(vals, (t[0],), h)
        gf = gf.with_values(vals / radial_norm(gf, n, alpha, e) ** (1.0 / e.p))
        out.append(gf)
    return out


def search_weighted_lame(n: int, nu: float, alpha: float, e: Exponent,
                         kappas=None, widths=(1.0, 2.0, 3.0, 4.0), N: int = 1201,
                         t_range=(-8.0, 8.0)) -> ProbeResult:
    """Maximize the normalized weighted form over profiles exp(kappa t) * bump(t / W)."""
    t, h = log_radial_grid(*t_range, N)
    if kappas is None:
        kappas = np.linspace(-6, 6, 49)
    best = None
    evals = 0
    for kap in kappas:
        for W in widths:
            vals = _zero_margin(np.exp(kap * t) * bump([t], radius=W))
            gf = GridFunction(vals, (t[0],), h)
            nrm = radial_norm(gf, n, alpha, e)
            gf = gf.with_values(vals / nrm ** (1.0 / e.p))
            val = weighted_lame_probe(gf, n, nu, alpha, e)
            evals += 1
            if best is None or val > best[0]:
                best = (val, gf, (kap, W))
    return ProbeResult(best[0], best[1], True, evals, [best[2]])
