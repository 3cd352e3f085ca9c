"""Algebraic L^p-dissipativity criteria for scalar second order operators.

The operator is ``div(A grad u) + b.grad u + div(c u) + a u``.  Each check
returns a :class:`~lpdissip.model.Verdict` whose status reflects the strength
of the underlying result: necessary-and-sufficient checks may prove or
disprove, sufficient-only checks never disprove, necessary-only checks never
prove.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    DEFAULT_TOL,
    ConfigurationError,
    DataError,
    Exponent,
    MatrixSample,
    OperatorSpec,
    Status,
    Tolerances,
    Verdict,
    decompose_matrix,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolynomialConditionParams:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise DataError("alpha and beta must be finite")


def _sample(A) -> MatrixSample:
    return A if isinstance(A, MatrixSample) else decompose_matrix(A)


def _min_eig(S: np.ndarray):
    w, V = np.linalg.eigh(S)
    return float(w[0]), V[:, 0]


def _classify(holds: bool, exact: bool) -> Status:
    if exact:
        return Status.PROVEN_DISSIPATIVE if holds else Status.PROVEN_NOT_DISSIPATIVE
    return Status.INDETERMINATE if holds else Status.NECESSARY_FAILS


def check_main_condition(A, e: Exponent, tol: Tolerances = DEFAULT_TOL,
                         has_lower_order: bool = False) -> Verdict:
    """Sector condition |p-2| |<Im A xi, xi>| <= 2 sqrt(p-1) <Re A xi, xi>.

    Tested as positive semidefiniteness of ``Re A +- r Im A`` (symmetric
    parts) with ``r = |p-2| / (2 sqrt(p-1))``; dividing by ``2 sqrt(p-1)``
    makes the margin invariant under ``p -> p'``.
    """
    ms = _sample(A)
    thr = tol.eig * ms.scale
    if e.is_two:
        margin, vec = _min_eig(ms.re_part)
        sign = 0
    else:
        r = e.sector_ratio
        m_plus, v_plus = _min_eig(ms.re_part + r * ms.im_sym)
        m_minus, v_minus = _min_eig(ms.re_part - r * ms.im_sym)
        if m_plus <= m_minus:
            margin, vec, sign = m_plus, v_plus, 1
        else:
            margin, vec, sign = m_minus, v_minus, -1
    holds = margin >= -thr
    exact = ms.im_is_symmetric(tol.eig) and not has_lower_order
    status = _classify(holds, exact)
    details = {"im_symmetric": ms.im_is_symmetric(tol.eig), "necessary_holds": holds,
               "threshold": thr}
    cert = {"xi": vec, "branch": sign}
    return Verdict(status, "main", margin, cert, details)


def quadratic_form_matrix(A, e: Exponent) -> np.ndarray:
    """Symmetric 2n x 2n matrix of (xi, eta) -> c_pp <R xi,xi> + <R eta,eta> - 2k <S xi,eta>."""
    ms = _sample(A)
    R, S = ms.re_part, ms.im_sym
    k = e.k
    return np.block([[e.c_pp * R, -k * S.T], [-k * S, R]])


def check_quadratic_form_condition(A, e: Exponent, tol: Tolerances = DEFAULT_TOL,
                                   has_lower_order: bool = False) -> Verdict:
    ms = _sample(A)
    n = ms.n
    thr = tol.eig * ms.scale
    H = quadratic_form_matrix(ms, e)
    margin, vec = _min_eig(H)
    holds = margin >= -thr
    exact = ms.im_is_symmetric(tol.eig) and not has_lower_order
    status = _classify(holds, exact)
    cert = {"xi": vec[:n], "eta": vec[n:], "value": float(vec @ H @ vec)}
    details = {"im_symmetric": ms.im_is_symmetric(tol.eig), "necessary_holds": holds,
               "threshold": thr}
    return Verdict(status, "quadform", margin, cert, details)


def _point_coefficients(spec: OperatorSpec):
    if spec.is_field:
        raise DataError("expected coefficients at a single point")
    b = np.asarray(spec.b, complex).reshape(-1)
    c = np.asarray(spec.c, complex).reshape(-1)
    a = complex(np.asarray(spec.a).reshape(()))
    need_div = spec.coefficient_class != "constant"
    div_b, div_c = spec.div_b, spec.div_c
    if div_b is None:
        if need_div and np.any(b != 0):
            raise ConfigurationError("div_b is required for sampled coefficients")
        div_b = 0.0
    if div_c is None:
        if need_div and np.any(c != 0):
            raise ConfigurationError("div_c is required for sampled coefficients")
        div_c = 0.0
    return spec.A, b, c, a, complex(np.asarray(div_b).reshape(())), complex(np.asarray(div_c).reshape(()))


def polynomial_form(spec: OperatorSpec, e: Exponent, params: PolynomialConditionParams):
    """Return ``(H, g, c0)`` with the polynomial equal to ``z.H.z + g.z + c0``, ``z = (xi, eta)``."""
    A, b, c, a, div_b, div_c = _point_coefficients(spec)
    ms = _sample(A)
    p, pc = e.p, e.p_conj
    M = ms.im_part / p - ms.im_part.T / pc
    R = ms.re_part
    H = np.block([[e.c_pp * R, M.T], [M, R]])
    al, be = params.alpha, params.beta
    g = np.concatenate([-2.0 * np.real(al * b / p - be * c / pc), np.imag(b + c)])
    c0 = float(np.real((1 - al) * div_b / p - (1 - be) * div_c / pc - a))
    return H, g, c0


def _minimize_affine_quadratic(H, g, c0, thr):
    """Infimum of z.H.z + g.z + c0 and a witness (minimizer or descent point)."""
    w, Q = np.linalg.eigh(H)

    def value(z):
        return float(z @ H @ z + g @ z + c0)

    if w[0] < -thr:
        v = Q[:, 0]
        gv = float(g @ v)
        if gv > 0:
            v, gv = -v, -gv
        lam = w[0]
        disc = gv * gv - 4 * lam * c0
        t_root = (-gv + np.sqrt(max(disc, 0.0))) / (-2 * lam) if disc > 0 else 0.0
        t = 2 * max(t_root, 0.0) + 1.0
        z = t * v
        return -np.inf, z, value(z)
    kern = w <= thr
    gk = Q.T @ g
    gnorm = max(float(np.linalg.norm(g)), 1.0)
    if np.any(kern) and np.linalg.norm(gk[kern]) > thr * gnorm:
        d = Q[:, kern] @ gk[kern]
        d = -d / np.linalg.norm(d)
        gd = float(g @ d)
        t = 2.0 * (abs(c0) + 1.0) / abs(gd)
        z = t * d
        for _ in range(60):
            if value(z) < 0:
                break
            z = 2 * z
        return -np.inf, z, value(z)
    act = ~kern
    zstar = -0.5 * Q[:, act] @ (gk[act] / w[act])
    inf = c0 - 0.25 * float(np.sum(gk[act] ** 2 / w[act]))
    return inf, zstar, value(zstar)


def check_polynomial_condition(spec: OperatorSpec, e: Exponent,
                               params: Optional[PolynomialConditionParams] = None,
                               tol: Tolerances = DEFAULT_TOL,
                               search: bool = False) -> Verdict:
    """Sufficient condition: nonnegativity of the affine-quadratic polynomial in (xi, eta).

    With ``search=True`` a coarse grid over ``(alpha, beta) in [-2, 2]^2`` is
    tried and the best verdict returned.
    """
    if search:
        grid = np.linspace(-2.0, 2.0, 9)
        best = None
        for al, be in itertools.product(grid, grid):
            v = check_polynomial_condition(spec, e, PolynomialConditionParams(al, be), tol)
            if best is None or v.margin > best.margin:
                best = v
            if v.holds:
                break
        return best
    params = params or PolynomialConditionParams()
    H, g, c0 = polynomial_form(spec, e, params)
    n = spec.n
    scale = max(float(np.linalg.norm(H, 2)), 1.0)
    thr = tol.eig * scale
    inf, z, val = _minimize_affine_quadratic(H, g, c0, thr)
    holds = inf >= -tol.form_abs(scale)
    status = Status.SUFFICIENT_HOLDS if holds else Status.INDETERMINATE
    cert = {"xi": z[:n], "eta": z[n:], "value": val}
    details = {"alpha": params.alpha, "beta": params.beta, "bounded_below": bool(np.isfinite(inf))}
    return Verdict(status, "polynomial", inf, cert, details)


def check_constant_coefficients(A, b, a, e: Exponent, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Necessary and sufficient test for ``div(A grad u) + b.grad u + a u`` with constant coefficients."""
    A = np.asarray(A, complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    A = 0.5 * (A + A.T)
    b = np.atleast_1d(np.asarray(b, complex))
    a = complex(a)
    ms = decompose_matrix(A)
    R = ms.re_part
    imb = b.imag
    scale = ms.scale
    V, *_ = np.linalg.lstsq(2.0 * R, -imb, rcond=None)
    residual = float(np.linalg.norm(2.0 * R @ V + imb))
    solvable = residual <= tol.eig * (1.0 + float(np.linalg.norm(imb))) * scale
    energy = float(V @ R @ V)
    v_margin = -(a.real + energy)
    main = check_main_condition(ms, e, tol)
    details = {"V": V, "residual": residual, "v_margin": v_margin,
               "main_margin": main.margin, "main_status": main.status.value}

    cond = np.linalg.cond(R) if R.size else np.inf
    if cond < 1e12:
        cor_margin = float(-(imb @ np.linalg.solve(R, imb)) - 4.0 * a.real)
        details["inverse_margin"] = cor_margin
        agree = abs(cor_margin - 4.0 * v_margin) <= 1e-8 * max(1.0, abs(cor_margin))
        details["inverse_agrees"] = agree
        if not agree:
            log.warning("inverse-matrix path disagrees with V path: %g vs %g", cor_margin, 4 * v_margin)

    if not solvable:
        return Verdict(Status.PROVEN_NOT_DISSIPATIVE, "constant", -residual,
                       {"residual_vector": 2.0 * R @ V + imb, "V": V}, details)
    v_ok = v_margin >= -tol.form_abs(max(scale, abs(a)))
    m_ok = main.margin >= -tol.eig * scale
    margin = min(v_margin, main.margin)
    if v_ok and m_ok:
        return Verdict(Status.PROVEN_DISSIPATIVE, "constant", margin, {"V": V}, details)
    cert = {"V": V, "violated": "energy" if not v_ok else "main"}
    if not m_ok:
        cert["xi"] = main.certificate["xi"]
    return Verdict(Status.PROVEN_NOT_DISSIPATIVE, "constant", margin, cert, details)


def check_necessary_repart(A, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """<Re A xi, xi> >= 0; a necessary condition only."""
    ms = _sample(A)
    margin, vec = _min_eig(ms.re_part)
    holds = margin >= -tol.eig * ms.scale
    status = Status.INDETERMINATE if holds else Status.NECESSARY_FAILS
    return Verdict(status, "repart", margin, {"xi": vec}, {"necessary_holds": holds})


POINTWISE = ("main", "quadform", "repart", "polynomial")


def _field_at(x, idx, n_lead):
    x = np.asarray(x)
    if x.ndim <= n_lead:
        return x
    return x.reshape(x.shape[:n_lead] + (-1,))[(...,) + (idx,)]


def check_field(spec: OperatorSpec, e: Exponent, which: str = "main",
                tol: Tolerances = DEFAULT_TOL,
                params: Optional[PolynomialConditionParams] = None) -> Verdict:
    """Apply a pointwise criterion at every sample and aggregate by worst margin."""
    if which not in POINTWISE:
        raise ConfigurationError(f"unknown pointwise criterion {which!r}")
    samples = spec.matrix_samples()
    if len(samples) == 0 or spec.A.size == 0:
        raise ConfigurationError("empty coefficient field")
    lower = spec.has_lower_order
    verdicts = []
    for i, Ai in enumerate(samples):
        if which == "main":
            v = check_main_condition(Ai, e, tol, has_lower_order=lower)
        elif which == "quadform":
            v = check_quadratic_form_condition(Ai, e, tol, has_lower_order=lower)
        elif which == "repart":
            v = check_necessary_repart(Ai, tol)
        else:
            pt = OperatorSpec(
                kind="scalar", n=spec.n, A=Ai,
                b=_field_at(spec.b, i, 1), c=_field_at(spec.c, i, 1),
                a=_field_at(spec.a, i, 0),
                div_b=None if spec.div_b is None else _field_at(spec.div_b, i, 0),
                div_c=None if spec.div_c is None else _field_at(spec.div_c, i, 0),
                coefficient_class=spec.coefficient_class,
            )
            v = check_polynomial_condition(pt, e, params, tol)
        verdicts.append(v)
    failing = [i for i, v in enumerate(verdicts) if v.status.fails]
    pool = failing if failing else range(len(verdicts))
    worst = min(pool, key=lambda i: (verdicts[i].margin, i))
    wv = verdicts[worst]
    statuses = {v.status for v in verdicts}
    status = wv.status
    if not failing and len(statuses) > 1:
        # mixed proven / indeterminate samples: the weaker claim wins
        status = Status.INDETERMINATE
    cert = {"index": worst, "witness": wv.certificate}
    if spec.A.ndim > 2:
        cert["grid_index"] = list(np.unravel_index(worst, spec.A.shape[2:]))
    details = {"samples": len(verdicts), "failing_samples": len(failing)}
    return Verdict(status, f"field:{which}", wv.margin, cert, details)
