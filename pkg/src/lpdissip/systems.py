"""Criteria for first and second order systems and for the Lame operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import (
    DEFAULT_TOL,
    AdmissibilityError,
    ConfigurationError,
    DataError,
    Exponent,
    Status,
    Tolerances,
    Verdict,
    check_poisson_ratio,
)


@dataclass(frozen=True)
class SphereSearchConfig:
    coarse_samples: int = 256
    refine_iters: int = 200
    restarts: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.coarse_samples < 64:
            raise ConfigurationError("coarse_samples must be at least 64")
        if self.refine_iters < 0 or self.restarts < 1:
            raise ConfigurationError("refine_iters >= 0 and restarts >= 1 required")


def _samples(x, lead_dims: int, name: str) -> np.ndarray:
    """Promote a single sample to a batch along a new leading axis."""
    if x is None:
        raise ConfigurationError(f"{name} is required")
    x = np.asarray(x, dtype=complex)
    if x.ndim == lead_dims:
        x = x[None]
    if x.ndim != lead_dims + 1:
        raise DataError(f"{name} has shape {x.shape}")
    return x


def _structure_deviation(B: np.ndarray, p_is_two: bool) -> float:
    """Relative distance of an m x m matrix from b*I (b real) or from Hermitian."""
    scale = max(float(np.linalg.norm(B, 2)), 1.0)
    if p_is_two:
        return float(np.max(np.abs(B - B.conj().T), initial=0.0)) / scale
    d = np.diag(B)
    off = B - np.diag(d)
    dev = max(float(np.max(np.abs(off), initial=0.0)),
              float(np.ptp(d.real)) if d.size else 0.0,
              float(np.max(np.abs(d.imag), initial=0.0)))
    return dev / scale


def _first_order_core(S_struct, S_spec, e: Exponent, tol: Tolerances, criterion: str) -> Verdict:
    """``S_struct``: (S, n, m, m) matrices subject to the structure test;
    ``S_spec``: (S, m, m) matrices whose Hermitian part must be PSD."""
    worst_struct = (0.0, None)
    for s in range(S_struct.shape[0]):
        for h in range(S_struct.shape[1]):
            dev = _structure_deviation(S_struct[s, h], e.is_two)
            if dev > worst_struct[0]:
                worst_struct = (dev, (s, h))
    worst_spec = (np.inf, None, None)
    for s in range(S_spec.shape[0]):
        M = S_spec[s]
        Hm = 0.5 * (M + M.conj().T)
        w, V = np.linalg.eigh(Hm)
        scale = max(float(np.linalg.norm(M, 2)), 1.0)
        m = float(w[0]) / scale
        if m < worst_spec[0]:
            worst_spec = (m, s, V[:, 0])
    struct_ok = worst_struct[0] <= tol.eig
    spec_ok = worst_spec[0] >= -tol.eig
    margin = min(worst_spec[0], 0.0 if struct_ok else -worst_struct[0])
    details = {"structure_deviation": worst_struct[0], "spectral_min": worst_spec[0]}
    if struct_ok and spec_ok:
        return Verdict(Status.PROVEN_DISSIPATIVE, criterion, margin, None, details)
    if not struct_ok:
        s, h = worst_struct[1]
        cert = {"violation": "structure", "sample": s, "h": h}
    else:
        cert = {"violation": "spectral", "sample": worst_spec[1], "zeta": worst_spec[2]}
    return Verdict(Status.PROVEN_NOT_DISSIPATIVE, criterion, margin, cert, details)


def check_first_order(Bh, D, dBh, e: Exponent, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """``Bh``: (S, n, m, m) or (n, m, m); ``D`` and ``dBh = sum_h d_h B^h``: (S, m, m) or (m, m)."""
    if dBh is None:
        raise ConfigurationError("dBh (sum of derivatives of B^h) is required")
    Bh = _samples(Bh, 3, "Bh")
    D = _samples(D, 2, "D")
    dBh = _samples(dBh, 2, "dBh")
    return _first_order_core(Bh, dBh / e.p - D, e, tol, "first-order")


def check_first_order_general(Bh, Ch, D, dBh, dCh, e: Exponent,
                              tol: Tolerances = DEFAULT_TOL) -> Verdict:
    if dBh is None or dCh is None:
        raise ConfigurationError("dBh and dCh are required")
    Bh = _samples(Bh, 3, "Bh")
    Ch = _samples(Ch, 3, "Ch")
    D = _samples(D, 2, "D")
    dBh = _samples(dBh, 2, "dBh")
    dCh = _samples(dCh, 2, "dCh")
    return _first_order_core(Bh + Ch, dBh / e.p - dCh / e.p_conj - D, e, tol,
                             "first-order-general")


def _realify(A: np.ndarray) -> np.ndarray:
    Ar, Ai = A.real, A.imag
    return np.block([[Ar, -Ai], [Ai, Ar]])


def second_order_objective(A: np.ndarray, lam: np.ndarray, omega: np.ndarray, e: Exponent) -> float:
    """F(lambda, omega) for one m x m matrix, with <x, y> = sum x_i conj(y_i)."""
    ip = lambda x, y: np.vdot(y, x)
    r = ip(lam, omega).real
    return float(ip(A @ lam, lam).real
                 - e.C_p * ip(A @ omega, omega).real * r * r
                 - e.k * (ip(A @ omega, lam) - ip(A @ lam, omega)).real * r)


def _lambda_matrix(RA: np.ndarray, w: np.ndarray, e: Exponent) -> np.ndarray:
    """Real symmetric Q(omega) with F(lambda, omega) = lambda^T Q lambda (lambda realified)."""
    S = 0.5 * (RA + RA.T)
    u = RA @ w - RA.T @ w
    Q = S - e.C_p * float(w @ S @ w) * np.outer(w, w) - 0.5 * e.k * (np.outer(u, w) + np.outer(w, u))
    return Q


def _omega_value(RA, x, e):
    w = x / np.linalg.norm(x)
    Q = _lambda_matrix(RA, w, e)
    vals, vecs = np.linalg.eigh(Q)
    return float(vals[0]), vecs[:, 0], w


def minimize_second_order(A: np.ndarray, e: Exponent, cfg: SphereSearchConfig = SphereSearchConfig()):
    """Minimum of F over |lambda| = |omega| = 1 for one matrix.

    F is a real quadratic form in lambda for fixed omega, so the lambda
    minimization is an exact eigenvalue problem; omega is searched by random
    sampling plus Nelder-Mead refinement.
    """
    m = A.shape[0]
    RA = _realify(np.asarray(A, complex))
    rng = np.random.default_rng(cfg.seed)
    X = rng.standard_normal((cfg.coarse_samples, 2 * m))
    # omega = e_j directions included explicitly
    X = np.vstack([np.eye(2 * m), X])
    vals = np.array([_omega_value(RA, x, e)[0] for x in X])
    order = np.argsort(vals)
    best = (np.inf, None, None)
    for idx in order[: cfg.restarts]:
        x0 = X[idx]
        if cfg.refine_iters > 0 and m > 0:
            res = optimize.minimize(lambda x: _omega_value(RA, x, e)[0], x0, method="Nelder-Mead",
                                    options={"maxiter": cfg.refine_iters, "xatol": 1e-10, "fatol": 1e-14})
            x0 = res.x
        val, lvec, w = _omega_value(RA, x0, e)
        if val < best[0]:
            best = (val, lvec, w)
    val, lvec, w = best
    lam = lvec[:m] + 1j * lvec[m:]
    omega = w[:m] + 1j * w[m:]
    return val, lam, omega


def check_second_order_system(Ah, e: Exponent, cfg: SphereSearchConfig = SphereSearchConfig(),
                              tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """``Ah``: (S, n, m, m) or (n, m, m)."""
    if not isinstance(cfg, SphereSearchConfig):
        raise ConfigurationError("cfg must be a SphereSearchConfig")
    Ah = _samples(Ah, 3, "Ah")
    worst = (np.inf, None)
    for s in range(Ah.shape[0]):
        for h in range(Ah.shape[1]):
            val, lam, omega = minimize_second_order(Ah[s, h], e, cfg)
            scale = max(float(np.linalg.norm(Ah[s, h], 2)), 1.0)
            if val / scale < worst[0]:
                worst = (val / scale, {"sample": s, "h": h, "lambda": lam, "omega": omega, "F": val})
    margin, cert = worst
    if margin >= -tol.form:
        status = Status.PROVEN_DISSIPATIVE
    elif margin < -10 * tol.form:
        status = Status.PROVEN_NOT_DISSIPATIVE
    else:
        status = Status.INDETERMINATE
    return Verdict(status, "second-order", margin, cert, {})


def check_combined_second_order(Ah, Bh, D, dBh, e: Exponent,
                                cfg: SphereSearchConfig = SphereSearchConfig(),
                                tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Sufficient test for ``d_h(A^h d_h u) + B^h d_h u + D u``."""
    second = check_second_order_system(Ah, e, cfg, tol)
    if Bh is None and D is None:
        return second
    Ah_ = _samples(Ah, 3, "Ah")
    S, n, m, _ = Ah_.shape
    Bh = np.zeros((S, n, m, m), complex) if Bh is None else Bh
    D = np.zeros((S, m, m), complex) if D is None else D
    dBh = np.zeros((S, m, m), complex) if dBh is None else dBh
    first = check_first_order(Bh, D, dBh, e, tol)
    margin = min(second.margin, first.margin)
    details = {"second_order": second.to_dict(), "first_order": first.to_dict()}
    if second.status is Status.PROVEN_DISSIPATIVE and first.status is Status.PROVEN_DISSIPATIVE:
        return Verdict(Status.SUFFICIENT_HOLDS, "combined", margin, None, details)
    return Verdict(Status.INDETERMINATE, "combined", margin, None, details)


# ---------------------------------------------------------------- elasticity

def planar_threshold(nu) -> np.ndarray:
    """2 (nu - 1)(2 nu - 1) / (3 - 4 nu)^2."""
    nu = np.asarray(nu, float)
    return 2.0 * (nu - 1.0) * (2.0 * nu - 1.0) / (3.0 - 4.0 * nu) ** 2


def planar_lhs(e: Exponent) -> float:
    return (0.5 - 1.0 / e.p) ** 2


def elasticity_planar(nu: float, e: Exponent, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    check_poisson_ratio(nu)
    rhs = float(planar_threshold(nu))
    lhs = planar_lhs(e)
    margin = rhs - lhs
    holds = margin >= -tol.form
    status = Status.PROVEN_DISSIPATIVE if holds else Status.PROVEN_NOT_DISSIPATIVE
    cert = None if holds else {"nu": float(nu), "lhs": lhs, "rhs": rhs}
    return Verdict(status, "elasticity-planar", margin, cert, {"lhs": lhs, "rhs": rhs})


def elasticity_necessary_variable_nu(nu_field, e: Exponent, gap: float = 1e-6,
                                     tol: Tolerances = DEFAULT_TOL) -> Verdict:
    nu = check_poisson_ratio(nu_field).reshape(-1)
    if nu.size == 0:
        raise ConfigurationError("empty Poisson ratio field")
    if float(np.min(np.abs(2 * nu - 1))) < gap:
        raise AdmissibilityError("inf |2 nu - 1| below the configured gap")
    thr = planar_threshold(nu)
    i = int(np.argmin(thr))
    inf = float(thr[i])
    lhs = planar_lhs(e)
    margin = inf - lhs
    status = Status.INDETERMINATE if margin >= -tol.form else Status.NECESSARY_FAILS
    return Verdict(status, "elasticity-variable-nu", margin, {"index": i, "nu": float(nu[i])},
                   {"infimum": inf, "lhs": lhs})


def ndim_threshold(nu: float) -> float:
    if nu < 0.5:
        return (1.0 - 2.0 * nu) / (2.0 * (1.0 - nu))
    return 2.0 * (1.0 - nu) / (1.0 - 2.0 * nu)


def elasticity_ndim_sufficient(nu: float, e: Exponent, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    check_poisson_ratio(nu)
    thr = ndim_threshold(float(nu))
    margin = thr - e.C_p
    status = Status.SUFFICIENT_HOLDS if margin >= -tol.form else Status.INDETERMINATE
    return Verdict(status, "elasticity-ndim", margin, None, {"threshold": thr, "C_p": e.C_p})


def elasticity_weighted_alpha_range(n: int, e: Exponent) -> tuple:
    if n < 2:
        raise ConfigurationError("dimension must be at least 2")
    p, pc = e.p, e.p_conj
    return (-(p - 1.0) * (n + pc - 2.0), n + p - 2.0)


def alpha_in_range(alpha: float, n: int, e: Exponent) -> bool:
    lo, hi = elasticity_weighted_alpha_range(n, e)
    return lo <= alpha <= hi
