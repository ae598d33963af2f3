import numpy as np
import pytest

from bipolarqtm.potentials import (
    BarrierRampPotential,
    EckartPotential,
    barrier_ramp,
    eckart,
    free,
    sech,
    two_surface,
)


def test_sech_is_finite_far_out():
    z = np.array([-1000.0, -351.0, 0.0, 1.0, 351.0, 1000.0])
    values = sech(z)
    assert np.all(np.isfinite(values))
    assert values[2] == 1.0
    assert values[3] == pytest.approx(1.0 / np.cosh(1.0))
    assert values[0] == values[1] == values[-1] == 0.0


def test_eckart_profile_and_asymptotes():
    model = eckart(0.0024, 2.5)
    x = np.array([-30.0, 0.0, 30.0])
    assert model.value(x) == pytest.approx([0.0, 0.0024, 0.0], abs=1e-20)
    assert model.asymptotic_left == (0.0,)
    assert model.asymptotic_right == (0.0,)
    assert model.matrix(x).shape == (1, 1, 3)


@pytest.mark.parametrize(
    "model",
    [
        eckart(0.0024, 2.5),
        barrier_ramp(0.0020, 2.5, 2.5, 0.0, 0.0008),
        two_surface(0.0024, 0.00072, 2.5),
    ],
)
def test_derivative_matches_finite_difference(model):
    x = np.linspace(-3.0, 3.0, 61)
    h = 1e-5
    numeric = (model.matrix(x + h) - model.matrix(x - h)) / (2.0 * h)
    assert np.allclose(model.derivative_matrix(x), numeric, rtol=1e-6, atol=1e-12)


def test_barrier_ramp_asymptotes():
    model = barrier_ramp(0.0020, 2.5, 2.5, 0.0, 0.0008)
    assert model.value(np.array([-30.0]))[0] == pytest.approx(0.0, abs=1e-15)
    assert model.value(np.array([30.0]))[0] == pytest.approx(0.0008)
    assert model.v_left == 0.0
    assert model.v_right == 0.0008
    assert isinstance(model, BarrierRampPotential)


def test_two_surface_matrix_is_symmetric():
    model = two_surface(0.0024, 0.00072, 2.5)
    v = model.matrix(np.linspace(-5.0, 5.0, 11))
    assert v.shape == (2, 2, 11)
    assert np.array_equal(v[0, 1], v[1, 0])
    assert np.array_equal(v[0, 0], v[1, 1])
    assert v[0, 1, 5] == pytest.approx(0.00072)


def test_two_surface_allows_zero_coupling():
    model = two_surface(0.0024, 0.0, 2.5)
    assert np.all(model.matrix(np.linspace(-1.0, 1.0, 5))[0, 1] == 0.0)


@pytest.mark.parametrize("args", [(0.0, 2.5), (0.0024, 0.0), (-1.0, 1.0)])
def test_eckart_rejects_nonpositive_parameters(args):
    with pytest.raises(ValueError):
        EckartPotential(*args)


def test_two_surface_rejects_negative_coupling():
    with pytest.raises(ValueError):
        two_surface(0.0024, -0.001, 2.5)


def test_free_potential_is_zero_on_every_surface():
    model = free(3)
    assert model.n_surfaces == 3
    assert not np.any(model.matrix(np.linspace(-1.0, 1.0, 7)))
    assert model.asymptotic_right == (0.0, 0.0, 0.0)


def test_repr_lists_parameters():
    assert repr(eckart(20.0, 1.0)) == "EckartPotential(v0=20.0, alpha=1.0)"
