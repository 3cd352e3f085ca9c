"""Shared data model: exponents, matrix samples, operator specs, verdicts, grids."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np


class DissipError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DissipError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataError(DissipError, ValueError):
    """Input data is malformed (non-finite entries, wrong shapes)."""


class ConfigurationError(DissipError, ValueError):
    """Missing or inconsistent configuration (fields, budgets, padding)."""


class AdmissibilityError(DomainError):
    """Poisson ratio in the non strongly elliptic range [1/2, 1]."""


class UnsupportedFeatureError(DissipError, NotImplementedError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Floating point slack separating exact criteria from rounding.

    ``eig`` is used for eigenvalue tests, ``form`` is the relative slack for
    discretized functionals (multiplied by a problem scale).
    """

    eig: float = 1e-9
    form: float = 1e-7

    def form_abs(self, scale: float = 1.0) -> float:
        return self.form * max(float(scale), 1.0)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Exponent:
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 1.0:
            raise DomainError(f"exponent p must lie in (1, inf), got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def c_pp(self) -> float:
        """4/(p p')."""
        return 4.0 * (self.p - 1.0) / (self.p * self.p)

    @property
    def C_p(self) -> float:
        """(1 - 2/p)^2."""
        return (1.0 - 2.0 / self.p) ** 2

    @property
    def k(self) -> float:
        """1 - 2/p, the signed square root of C_p."""
        return 1.0 - 2.0 / self.p

    @property
    def sector_ratio(self) -> float:
        """|p-2| / (2 sqrt(p-1)); invariant under p -> p'."""
        return abs(self.p - 2.0) / (2.0 * math.sqrt(self.p - 1.0))

    def dual(self) -> "Exponent":
        return Exponent(self.p_conj)

    @property
    def is_two(self) -> bool:
        return self.p == 2.0


def make_exponent(p: float) -> Exponent:
    return Exponent(p)


def _as_complex_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DataError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DataError("matrix has non-finite entries")
    return M


@dataclass(frozen=True, eq=False)
class MatrixSample:
    """A complex square matrix with its real/imaginary decompositions.

    ``re_part`` is the symmetric part of Re M (the only part seen by real
    quadratic forms); ``im_part`` is Im M with its symmetric/skew split.
    """

    entries: np.ndarray
    re_part: np.ndarray
    re_full: np.ndarray
    im_part: np.ndarray
    im_sym: np.ndarray
    im_skew: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        return max(float(np.linalg.norm(self.entries, 2)), 1.0)

    def im_is_symmetric(self, tol: float = DEFAULT_TOL.eig) -> bool:
        return float(np.max(np.abs(self.im_skew), initial=0.0)) <= tol * self.scale

    def reconstruct(self) -> np.ndarray:
        return self.re_full + 1j * self.im_part


def decompose_matrix(M) -> MatrixSample:
    M = _as_complex_matrix(M)
    re = M.real.copy()
    im = M.imag.copy()
    im_sym = 0.5 * (im + im.T)
    im_skew = im - im_sym
    return MatrixSample(
        entries=M,
        re_part=0.5 * (re + re.T),
        re_full=re,
        im_part=im,
        im_sym=im_sym,
        im_skew=im_skew,
    )


class Status(str, enum.Enum):
    PROVEN_DISSIPATIVE = "ProvenDissipative"
    PROVEN_NOT_DISSIPATIVE = "ProvenNotDissipative"
    SUFFICIENT_HOLDS = "SufficientHolds"
    NECESSARY_FAILS = "NecessaryFails"
    INDETERMINATE = "Indeterminate"

    @property
    def holds(self) -> bool:
        return self in (Status.PROVEN_DISSIPATIVE, Status.SUFFICIENT_HOLDS)

    @property
    def fails(self) -> bool:
        return self in (Status.PROVEN_NOT_DISSIPATIVE, Status.NECESSARY_FAILS)


def _jsonable(x: Any) -> Any:
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return np.stack([x.real, x.imag], axis=-1).tolist()
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, GridFunction):
        return x.to_dict()
    return x


@dataclass(frozen=True)
class Verdict:
    """Outcome of one criterion.

    ``margin`` is signed: the criterion holds iff ``margin >= -tol`` for the
    tolerance used by the criterion.  ``certificate`` holds a witness when a
    violation was found (or the extremal point otherwise).
    """

    status: Status
    criterion: str
    margin: float
    certificate: Optional[dict] = None
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status.holds

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "criterion": self.criterion,
            "margin": _jsonable(self.margin),
            "certificate": _jsonable(self.certificate),
            "details": _jsonable(self.details),
        }


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Function sampled on a uniform grid, vanishing on a boundary layer.

    ``values`` has shape ``grid_shape`` (scalar) or ``grid_shape + (m,)``
    (vector valued, ``dim_range = m``).
    """

    values: np.ndarray
    origin: tuple
    spacing: float
    dim_range: int = 1
    support_margin: int = 1
    check_support: bool = True

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        object.__setattr__(self, "values", vals)
        origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        object.__setattr__(self, "origin", origin)
        if not self.spacing > 0:
            raise DomainError("grid spacing must be positive")
        nd = len(origin)
        shape = self.grid_shape
        if len(shape) != nd:
            raise DataError(f"values shape {vals.shape} inconsistent with {nd}-d origin")
        if any(s < 3 for s in shape):
            raise DomainError("each axis needs at least 3 points")
        if self.check_support:
            if self.support_margin < 1:
                raise DomainError("support margin must be at least one cell")
            if not self._boundary_is_zero():
                raise DomainError("function does not vanish on the support margin layer")

    @property
    def ndim(self) -> int:
        return len(self.origin)

    @property
    def grid_shape(self) -> tuple:
        if self.dim_range == 1:
            return self.values.shape
        return self.values.shape[:-1]

    @property
    def h(self) -> float:
        return self.spacing

    def axes(self) -> list:
        return [o + self.spacing * np.arange(s) for o, s in zip(self.origin, self.grid_shape)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")

    def _boundary_is_zero(self) -> bool:
        w = self.support_margin
        v = self.values
        for ax in range(self.ndim):
            lo = np.take(v, range(w), axis=ax)
            hi = np.take(v, range(v.shape[ax] - w, v.shape[ax]), axis=ax)
            if np.any(lo != 0) or np.any(hi != 0):
                return False
        return True

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.origin, self.spacing, self.dim_range,
                            self.support_margin, self.check_support)

    def same_grid(self, other: "GridFunction") -> bool:
        return (self.grid_shape == other.grid_shape
                and np.allclose(self.origin, other.origin)
                and math.isclose(self.spacing, other.spacing))

    def to_dict(self) -> dict:
        v = self.values
        flat = v.reshape(-1)
        if np.iscomplexobj(v):
            data = np.stack([flat.real, flat.imag], axis=-1).tolist()
        else:
            data = flat.tolist()
        return {
            "shape": list(v.shape),
            "origin": list(self.origin),
            "spacing": self.spacing,
            "dim_range": self.dim_range,
            "support_margin": self.support_margin,
            "values": data,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridFunction":
        vals = np.asarray(d["values"], dtype=float)
        shape = tuple(d["shape"])
        if vals.ndim == 2 and vals.shape[-1] == 2 and vals.shape[0] == int(np.prod(shape)):
            vals = (vals[:, 0] + 1j * vals[:, 1])
        return cls(vals.reshape(shape), tuple(d["origin"]), float(d["spacing"]),
                   int(d.get("dim_range", 1)), int(d.get("support_margin", 1)))


def box_grid(lo: Sequence[float] | float, hi: Sequence[float] | float, N: int, ndim: int = 1):
    """Uniform ``N``-point-per-axis grid on a box; returns ``(origin, h, mesh)``."""
    lo = np.broadcast_to(np.asarray(lo, float), (ndim,))
    hi = np.broadcast_to(np.asarray(hi, float), (ndim,))
    hs = (hi - lo) / (N - 1)
    if not np.allclose(hs, hs[0]):
        raise DomainError("box must have equal spacing along every axis")
    h = float(hs[0])
    axes = [lo[i] + h * np.arange(N) for i in range(ndim)]
    return tuple(lo), h, np.meshgrid(*axes, indexing="ij")


OPERATOR_KINDS = ("scalar", "system-first-order", "system-second-order",
                  "elasticity", "oblique", "nonlocal")


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Coefficients of a scalar or system operator.

    Scalar kind: ``A`` is ``(n, n)`` or a field ``(n, n, *grid)``; ``b``, ``c``
    are ``(n,)`` or ``(n, *grid)``; ``a`` is a scalar or ``grid``-shaped.
    ``div_b``/``div_c`` are optional sampled divergences.
    System kinds use ``Ah``/``Bh``/``Ch`` with shape ``(S, n, m, m)`` and ``D``,
    ``dBh``, ``dCh`` with shape ``(S, m, m)`` (``S`` samples).
    """

    kind: str = "scalar"
    n: int = 1
    m: int = 1
    A: Any = None
    b: Any = None
    c: Any = None
    a: Any = 0.0
    div_b: Any = None
    div_c: Any = None
    Ah: Any = None
    Bh: Any = None
    Ch: Any = None
    D: Any = None
    dBh: Any = None
    dCh: Any = None
    nu: Any = None
    coefficient_class: str = "constant"
    id: str = ""
    grid: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise DataError(f"unknown operator kind {self.kind!r}")
        if self.coefficient_class not in ("constant", "smooth-sampled"):
            raise DataError(f"unknown coefficient class {self.coefficient_class!r}")
        if self.kind == "scalar":
            n = self.n
            A = np.asarray(self.A if self.A is not None else np.eye(n), dtype=complex)
            if A.shape[:2] != (n, n):
                raise DataError(f"A has shape {A.shape}, expected leading ({n}, {n})")
            object.__setattr__(self, "A", A)
            for name in ("b", "c"):
                v = getattr(self, name)
                v = np.zeros(n, complex) if v is None else np.asarray(v, dtype=complex)
                if v.shape[:1] != (n,):
                    raise DataError(f"{name} has shape {v.shape}, expected leading ({n},)")
                object.__setattr__(self, name, v)
            object.__setattr__(self, "a", np.asarray(self.a, dtype=complex))
        if self.kind == "elasticity" and self.nu is not None:
            check_poisson_ratio(self.nu)

    @property
    def has_lower_order(self) -> bool:
        if self.kind != "scalar":
            return self.Bh is not None or self.D is not None
        return bool(np.any(self.b != 0) or np.any(self.c != 0) or np.any(self.a != 0))

    @property
    def is_field(self) -> bool:
        return self.kind == "scalar" and self.A.ndim > 2

    def matrix_samples(self) -> list:
        """The principal matrix at every sample point (row-major grid order)."""
        A = self.A
        if A.ndim == 2:
            return [A]
        flat = A.reshape(self.n, self.n, -1)
        return [flat[:, :, i] for i in range(flat.shape[-1])]


def check_poisson_ratio(nu) -> np.ndarray:
    nu_arr = np.asarray(nu, dtype=float)
    bad = (nu_arr >= 0.5) & (nu_arr <= 1.0)
    if np.any(bad) or not np.all(np.isfinite(nu_arr)):
        raise AdmissibilityError("Poisson ratio must satisfy nu < 1/2 or nu > 1")
    return nu_arr
