import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpdissip.model import OperatorSpec, Status, make_exponent
from lpdissip.scalar import (
    PolynomialConditionParams,
    check_constant_coefficients,
    check_field,
    check_main_condition,
    check_necessary_repart,
    check_polynomial_condition,
    check_quadratic_form_condition,
    quadratic_form_matrix,
)


def test_main_condition_one_dimensional_closed_form():
    # |p-2| |Im a| <= 2 sqrt(p-1) Re a
    e = make_exponent(4)
    bound = 2 * np.sqrt(3) / 2
    assert check_main_condition(np.array([[1 + 0.99 * bound * 1j]]), e).status == Status.PROVEN_DISSIPATIVE
    assert check_main_condition(np.array([[1 + 1.01 * bound * 1j]]), e).status == Status.PROVEN_NOT_DISSIPATIVE


def test_main_condition_p2_needs_only_real_part():
    e = make_exponent(2)
    assert check_main_condition(np.array([[1 + 50j]]), e).status.holds


def test_skew_imaginary_part_downgrades_to_necessary():
    A = np.array([[1, 5j], [-5j, 1]])  # imaginary part is skew-symmetric
    v = check_main_condition(A, make_exponent(4))
    assert v.status in (Status.INDETERMINATE, Status.NECESSARY_FAILS)
    assert v.details["im_symmetric"] is False


def test_failure_certificate_is_violating_direction():
    e = make_exponent(6)
    A = np.array([[1.0, 0.0], [0.0, 1.0]]) + 1j * np.array([[0.0, 0.0], [0.0, 3.0]])
    v = check_main_condition(A, e)
    assert v.status.fails
    xi = np.asarray(v.certificate["xi"])
    lhs = abs(e.p - 2) * abs(xi @ A.imag @ xi)
    rhs = 2 * np.sqrt(e.p - 1) * xi @ A.real @ xi
    assert lhs > rhs


@settings(max_examples=60)
@given(st.integers(1, 4), st.floats(1.05, 15), st.integers(0, 2**31 - 1))
def test_quadform_and_main_agree(n, p, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    S = rng.standard_normal((n, n))
    A = M @ M.T + 1j * (S + S.T)
    e = make_exponent(p)
    a, b = check_main_condition(A, e), check_quadratic_form_condition(A, e)
    if min(abs(a.margin), abs(b.margin)) > 1e-7:
        assert a.status == b.status


def test_quadratic_form_matrix_symmetric():
    H = quadratic_form_matrix(np.array([[2, 1 + 1j], [1 + 1j, 3]]), make_exponent(3))
    assert np.allclose(H, H.T)


def test_constant_coefficients_example():
    A = np.array([[1 + np.sqrt(3) * 1j]])
    v = check_constant_coefficients(A, np.array([2j]), -1.0, make_exponent(4))
    assert v.status == Status.PROVEN_DISSIPATIVE and abs(v.margin) < 1e-12


def test_constant_coefficients_energy_violation():
    A = np.eye(2, dtype=complex)
    v = check_constant_coefficients(A, np.array([2j, 0]), 0.5, make_exponent(3))
    assert v.status == Status.PROVEN_NOT_DISSIPATIVE and v.certificate["violated"] == "energy"


def test_constant_coefficients_unsolvable_im_b():
    A = np.diag([1.0, 0.0]).astype(complex)
    v = check_constant_coefficients(A, np.array([0, 1j]), 0.0, make_exponent(3))
    assert v.status == Status.PROVEN_NOT_DISSIPATIVE and "residual_vector" in v.certificate


def test_polynomial_condition_pure_real_operator_holds():
    spec = OperatorSpec(kind="scalar", n=2, A=np.eye(2))
    v = check_polynomial_condition(spec, make_exponent(3))
    assert v.status == Status.SUFFICIENT_HOLDS


def test_polynomial_condition_params_validate():
    with pytest.raises(Exception):
        PolynomialConditionParams(alpha=float("nan"))


def test_necessary_repart():
    assert check_necessary_repart(np.array([[1.0, 0], [0, -0.1]])).status.fails
    assert not check_necessary_repart(np.eye(2)).status.fails


def test_field_reports_worst_sample():
    A = np.zeros((1, 1, 5), complex)
    A[0, 0] = 1.0
    A[0, 0, 3] = 1 + 10j
    spec = OperatorSpec(kind="scalar", n=1, A=A, coefficient_class="smooth-sampled")
    v = check_field(spec, make_exponent(4), "main")
    assert v.status.fails and v.criterion == "field:main"
