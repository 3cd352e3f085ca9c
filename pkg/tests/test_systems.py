import numpy as np
import pytest

from lpdissip.model import AdmissibilityError, ConfigurationError, Status, make_exponent
from lpdissip.scalar import check_main_condition
from lpdissip.systems import (
    SphereSearchConfig,
    alpha_in_range,
    check_combined_second_order,
    check_first_order,
    check_second_order_system,
    elasticity_necessary_variable_nu,
    elasticity_ndim_sufficient,
    elasticity_planar,
    elasticity_weighted_alpha_range,
    planar_threshold,
    second_order_objective,
)


def test_first_order_scalar_multiple_of_identity():
    Bh = np.stack([2.0 * np.eye(2), -np.eye(2)])
    D = -np.eye(2)
    v = check_first_order(Bh, D, np.zeros((2, 2)), make_exponent(3))
    assert v.status == Status.PROVEN_DISSIPATIVE


def test_first_order_structure_violation():
    Bh = np.stack([np.array([[1.0, 1.0], [0.0, 1.0]])])
    v = check_first_order(Bh, -np.eye(2), np.zeros((2, 2)), make_exponent(3))
    assert v.status == Status.PROVEN_NOT_DISSIPATIVE and v.certificate["violation"] == "structure"


def test_first_order_p2_allows_hermitian():
    Bh = np.stack([np.array([[1.0, 1j], [-1j, 2.0]])])
    assert check_first_order(Bh, -np.eye(2), np.zeros((2, 2)), make_exponent(2)).status.holds


def test_first_order_spectral_violation():
    Bh = np.stack([np.eye(2)])
    v = check_first_order(Bh, np.eye(2), np.zeros((2, 2)), make_exponent(3))
    assert v.certificate["violation"] == "spectral"


def test_first_order_requires_derivative_data():
    with pytest.raises(ConfigurationError):
        check_first_order(np.eye(2)[None], np.eye(2), None, make_exponent(3))


@pytest.mark.parametrize("a", [1 + 0.5j, 1 + 1.5j, 2 - 0.2j, 1 + 3j])
@pytest.mark.parametrize("p", [1.5, 4.0])
def test_second_order_reduces_to_scalar_for_m1(a, p):
    e = make_exponent(p)
    scalar = check_main_condition(np.array([[a]]), e)
    system = check_second_order_system(np.array([[[a]]]), e)
    assert scalar.status.holds == system.status.holds


def test_second_order_objective_homogeneous_in_lambda():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    lam = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    om = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    e = make_exponent(3)
    assert np.isclose(second_order_objective(A, 2 * lam, om, e), 4 * second_order_objective(A, lam, om, e))


def test_sphere_config_validation():
    with pytest.raises(ConfigurationError):
        SphereSearchConfig(coarse_samples=8)


def test_combined_sufficient():
    Ah = np.stack([np.eye(2), np.eye(2)])
    v = check_combined_second_order(Ah, np.zeros((2, 2, 2)), -np.eye(2), np.zeros((2, 2)), make_exponent(3))
    assert v.status == Status.SUFFICIENT_HOLDS


def test_planar_known_values():
    assert np.isclose(planar_threshold(0.0), 2 / 9)
    e = make_exponent(4)
    assert elasticity_planar(0.0, e).status == Status.PROVEN_DISSIPATIVE
    v = elasticity_planar(0.49, e)
    assert v.status == Status.PROVEN_NOT_DISSIPATIVE and set(v.certificate) == {"nu", "lhs", "rhs"}


@pytest.mark.parametrize("nu", [-2.0, 0.1, 0.45, 1.05, 3.0])
@pytest.mark.parametrize("p", [1.3, 3.0, 9.0])
def test_planar_duality(nu, p):
    e = make_exponent(p)
    a, b = elasticity_planar(nu, e), elasticity_planar(nu, e.dual())
    assert a.status == b.status and abs(a.margin - b.margin) < 1e-14


def test_sufficient_implies_planar_on_grid():
    for nu in np.concatenate([np.linspace(-3, 0.49, 100), np.linspace(1.01, 6, 100)]):
        for p in np.linspace(1.05, 30, 50):
            e = make_exponent(p)
            if elasticity_ndim_sufficient(nu, e).status.holds:
                assert elasticity_planar(nu, e).status.holds


def test_planar_rejects_inadmissible_nu():
    with pytest.raises(AdmissibilityError):
        elasticity_planar(0.75, make_exponent(3))


def test_variable_nu_uses_infimum():
    e = make_exponent(4)
    v = elasticity_necessary_variable_nu(np.array([0.0, 0.3, 0.49]), e)
    assert v.status == Status.NECESSARY_FAILS and v.certificate["nu"] == 0.49
    assert np.isclose(elasticity_necessary_variable_nu(np.full(4, 0.3), e).details["infimum"], planar_threshold(0.3))


def test_alpha_range():
    e = make_exponent(2)
    assert elasticity_weighted_alpha_range(3, e) == (-3.0, 3.0)
    e = make_exponent(3)
    lo, hi = elasticity_weighted_alpha_range(2, e)
    assert np.isclose(hi - lo, (e.p - 1) * (2 + e.p_conj - 2) + (2 + e.p - 2))
    assert alpha_in_range(0.0, 2, e) and not alpha_in_range(hi + 0.1, 2, e)
    with pytest.raises(ConfigurationError):
        elasticity_weighted_alpha_range(1, e)
