import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from kmac.errors import InvalidConfigError
from kmac.kernels import KernelSpec
from kmac.oracles import (
    SETTINGS,
    GaussianPairSpec,
    SettingSpec,
    eta_population_mc,
    functional_model,
    gaussian_model,
    independent_model,
    sample_gaussian_pairs,
    sample_setting,
    step_function,
    t1_gaussian,
    t2_gaussian,
    t_alpha_gaussian,
    w_shape,
)

DIST = KernelSpec("distance", alpha=1.0)


def test_closed_form_values():
    assert t1_gaussian(0.0) == 0.0
    assert t1_gaussian(1.0) == 1.0
    assert t1_gaussian(0.6) == pytest.approx(0.2, abs=1e-15)
    assert t2_gaussian(0.6) == pytest.approx(0.36, abs=1e-15)
    assert t_alpha_gaussian(0.6, 1.0) == t1_gaussian(0.6)
    assert t_alpha_gaussian(0.6, 2.0) == pytest.approx(t2_gaussian(0.6), abs=1e-15)


def test_closed_forms_bounded_and_ordered():
    for rho in np.linspace(-1, 1, 101):
        a, b = t1_gaussian(rho), t2_gaussian(rho)
        assert 0 <= a <= b <= 1
        assert t1_gaussian(-rho) == a


def test_closed_form_errors():
    for fn in (t1_gaussian, t2_gaussian):
        with pytest.raises(InvalidConfigError):
            fn(1.01)
    with pytest.raises(InvalidConfigError):
        t_alpha_gaussian(0.5, 2.5)


def test_gaussian_sampler_moments():
    x, y = sample_gaussian_pairs(GaussianPairSpec(0.6, mean_y=2.0, sd_y=3.0), 200_000, seed=1)
    assert x.shape == y.shape == (200_000, 2)
    for j in range(2):
        assert np.corrcoef(x[:, j], y[:, j])[0, 1] == pytest.approx(0.6, abs=0.01)
    assert_allclose(y.mean(0), 2.0, atol=0.03)
    assert_allclose(y.std(0), 3.0, atol=0.03)
    assert abs(np.corrcoef(x[:, 0], y[:, 1])[0, 1]) < 0.01


def test_population_mc_independent_is_zero():
    est = eta_population_mc(independent_model(2, 2), KernelSpec("gaussian"), seed=1)
    assert abs(est.value) <= 3 * est.se + 1e-3
    assert abs(est.mmd_value) <= 3 * est.mmd_se + 1e-3
    assert est.agree


def test_population_mc_functional_is_one():
    est = eta_population_mc(functional_model(np.sin), KernelSpec("gaussian"), seed=2)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert est.mmd_value == pytest.approx(1.0, abs=5 * est.mmd_se + 1e-3)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_population_mc_matches_gaussian_closed_form(alpha):
    kernel = KernelSpec("distance", alpha=alpha)
    est = eta_population_mc(gaussian_model(GaussianPairSpec(0.6)), kernel, reps=200_000, seed=3)
    truth = t_alpha_gaussian(0.6, alpha)
    assert abs(est.value - truth) <= 3 * est.se
    assert abs(est.mmd_value - truth) <= 3 * est.mmd_se
    assert est.agree


def test_population_mc_guard():
    with pytest.raises(InvalidConfigError):
        eta_population_mc(independent_model(), DIST, reps=500)
    assert eta_population_mc(independent_model(), DIST, reps=500, allow_small=True).reps == 500


def test_setting_shapes_and_determinism():
    for name in SETTINGS:
        x, y = sample_setting(SettingSpec(name, 0.3 if name != "coef-gaussian" else 0.5, n=50, seed=4))
        x2, y2 = sample_setting(SettingSpec(name, 0.3 if name != "coef-gaussian" else 0.5, n=50, seed=4))
        assert_array_equal(x, x2)
        assert_array_equal(y, y2)
        assert len(x) == len(y) == 50
        assert np.all(np.isfinite(x)) and np.all(np.isfinite(y))


def test_noiseless_sinusoid_is_exact():
    x, y = sample_setting(SettingSpec("coef-sinusoidal", 0.0, n=100, seed=5))
    assert_allclose(y, np.cos(8 * np.pi * x), rtol=0, atol=0)
    assert np.all((x >= -1) & (x <= 1))


def test_null_settings():
    x, y = sample_setting(SettingSpec("null1", n=200, seed=6))
    assert x.shape == (200, 5) and y.shape == (200, 4)
    assert_array_equal(x[:, 4], x[:, 0] + x[:, 1])
    assert np.all(y >= 0)
    x, y = sample_setting(SettingSpec("null2", n=200, seed=6))
    assert x.shape == (200, 4)


def test_shape_functions():
    assert_array_equal(step_function(np.array([-0.5, -0.01, 0.01, 0.5])), [-3, 2, 4, 3])
    assert_allclose(w_shape(np.array([-1.0, -0.5, 0.0, 0.5, 1.0])), [0.5, 0, 0.5, 0, 0.5])


def test_setting_errors():
    with pytest.raises(InvalidConfigError):
        SettingSpec("spiral")
    with pytest.raises(InvalidConfigError):
        SettingSpec("linear", 1.5)
    with pytest.raises(InvalidConfigError):
        SettingSpec("coef-sinusoidal", 2.6)
    with pytest.raises(InvalidConfigError):
        SettingSpec("coef-gaussian", -1.1)
    with pytest.raises(InvalidConfigError):
        SettingSpec("linear", 0.1, n=1)
