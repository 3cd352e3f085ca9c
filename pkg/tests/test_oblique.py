import numpy as np
import pytest

from lpdissip.model import ConfigurationError, DataError, DomainError, GridFunction, Status, box_grid, make_exponent
from lpdissip.oblique import (
    check_constant_oblique,
    check_real_oblique,
    dirichlet_energy_halfspace,
    harmonic_extension,
    lambda_half_form,
    multiplier_norm_constant,
    oblique_form,
    poisson_weights,
)
from lpdissip.probe import bump


def _trace(N=201, L=4.0, nd=1):
    o, h, X = box_grid(-L, L, N, nd)
    return GridFunction(bump(X, 1.0) * (1 + 0.3 * X[0]), o, h)


def test_poisson_weights_mass():
    # offsets cover |x| < 8, so the exact mass is (2/pi) arctan(8/t)
    w = poisson_weights((401,), 0.02, 0.1)
    assert abs(np.sum(w) - 2 / np.pi * np.arctan(8 / 0.1)) < 1e-4
    w2 = poisson_weights((61, 61), 0.1, 0.3)
    assert 0.8 < np.sum(w2) <= 1.0 + 1e-9


def test_extension_decays_and_validates():
    ext = harmonic_extension(_trace(), [0.1, 1.0, 10.0])
    assert ext.top_layer_max() < np.max(np.abs(ext.trace.values))
    with pytest.raises(DomainError):
        harmonic_extension(_trace(), [0.0, 1.0])
    with pytest.raises(ConfigurationError):
        harmonic_extension(_trace(), [])


def test_lambda_form_hermitian_and_positive():
    u = _trace()
    v = u.with_values(u.values * (1 + 0.5j) * np.cos(np.arange(u.values.size)))
    assert np.isclose(lambda_half_form(u, v), np.conj(lambda_half_form(v, u)))
    assert lambda_half_form(u, u).real > 0
    with pytest.raises(ConfigurationError):
        lambda_half_form(u, u, padding=2.0)


def test_lambda_form_2d_scaling():
    # |xi| has degree one: dilating u by 2 scales the form by 2^(d-1) = 2 in 2-d
    o, h, X = box_grid(-3, 3, 61, 2)
    u = GridFunction(bump(X, 1.0), o, h)
    w = GridFunction(bump(X, 2.0), o, h)
    ratio = lambda_half_form(w, w, padding=8).real / lambda_half_form(u, u, padding=8).real
    assert abs(ratio - 2.0) < 0.05


def test_dtn_energy_matches_coarsely():
    u = _trace(N=161, L=8.0)
    levels = list(np.arange(0.05, 2.0, 0.05))
    t = levels[-1]
    while t < 40:
        t *= 1.05
        levels.append(t)
    E = dirichlet_energy_halfspace(harmonic_extension(u, levels))
    ref = lambda_half_form(u, u).real
    assert abs(E - ref) / ref < 2e-2


def test_constant_oblique():
    e = make_exponent(3)
    assert multiplier_norm_constant([1.0, 0.5j]) == 0.5
    assert check_constant_oblique([1.0, 0.5j], e).status == Status.SUFFICIENT_HOLDS
    assert check_constant_oblique([1.0, 2.0j], e).status == Status.INDETERMINATE


def test_oblique_form_real_constant_drift_is_dissipative():
    u = _trace()
    for p in (1.5, 2.0, 4.0):
        assert oblique_form(u, np.array([1.0]), make_exponent(p)) <= 1e-8


def test_real_oblique_strong_compression_fails():
    o, h, X = box_grid(-2, 2, 41, 1)
    grid = GridFunction(np.zeros(41), o, h)
    x = X[0]
    for k, expected in ((0.5, Status.INDETERMINATE), (20.0, Status.PROVEN_NOT_DISSIPATIVE)):
        b = bump([x], 1.5)
        a = -k * x * b
        div = np.gradient(a, h)
        v = check_real_oblique(a[None], make_exponent(3), grid, div)
        assert v.status == expected
        if expected.fails:
            assert v.certificate["lhs"] > v.certificate["rhs"]


def test_real_oblique_validation():
    o, h, _ = box_grid(-2, 2, 21, 1)
    grid = GridFunction(np.zeros(21), o, h)
    with pytest.raises(DataError):
        check_real_oblique(np.array([1j]), make_exponent(3), grid)
    with pytest.raises(ConfigurationError):
        check_real_oblique(np.ones((1, 21)), make_exponent(3), grid)
