import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from azosgd._backend import NOISE_CODES
from azosgd.oracles import (MACHINE_EPS, BiasModel, NoiseModel, batched_biased_grad,
                            biased_grad, zero_order_eval)


def test_zero_noise_is_exact(small_lsq, rng):
    x = rng.standard_normal(8)
    assert zero_order_eval(small_lsq, NoiseModel(), x, 1) == small_lsq.eval_sample(x, 1)


def test_constant_sign_adds_level(small_lsq, rng):
    x = rng.standard_normal(8)
    noise = NoiseModel("constant_sign", 1e-3)
    assert zero_order_eval(small_lsq, noise, x, 2) == small_lsq.eval_sample(x, 2) + 1e-3


def test_oscillation_bounded_on_seeded_points(small_lsq):
    noise = NoiseModel.for_tau("coordinate_oscillation", 1e-4, 1e-3)
    assert noise.width == pytest.approx(1e-4)
    pts = np.random.default_rng(0).standard_normal((10_000, 8))
    vals = np.array([zero_order_eval(small_lsq, noise, p, i % 4) - small_lsq.eval_sample(p, i % 4)
                     for i, p in enumerate(pts)])
    assert np.all(np.abs(vals) <= 1e-4 * (1 + 1e-9))
    # both signs actually occur
    assert vals.min() < 0 < vals.max()


def test_oscillation_formula():
    noise = NoiseModel("coordinate_oscillation", 2.0, width=0.5)
    x = np.array([0.2, 0.3])
    assert noise.value(x) == 2.0 * np.sign(np.sin(0.5 / 0.5))


def test_machine_epsilon_default_level():
    noise = NoiseModel("machine_epsilon")
    assert noise.level == MACHINE_EPS
    vals = noise.values(np.random.default_rng(1).standard_normal((10_000, 4)))
    assert np.all(np.abs(vals) <= MACHINE_EPS)
    assert np.std(vals) > 0.3 * MACHINE_EPS


def test_noise_depends_on_x_only(small_lsq):
    noise = NoiseModel("machine_epsilon", 1e-6)
    x = np.linspace(-1, 1, 8)
    a = zero_order_eval(small_lsq, noise, x, 0) - small_lsq.eval_sample(x, 0)
    b = zero_order_eval(small_lsq, noise, x, 3) - small_lsq.eval_sample(x, 3)
    assert a == pytest.approx(b, abs=1e-15)
    assert zero_order_eval(small_lsq, noise, x, 1) == zero_order_eval(small_lsq, noise, x, 1)


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseModel("gaussian")
    with pytest.raises(ValueError):
        NoiseModel("constant_sign", -1.0)
    with pytest.raises(ValueError):
        NoiseModel("coordinate_oscillation", 1.0, width=0.0)


def test_dimension_mismatch(small_lsq):
    with pytest.raises(ValueError):
        zero_order_eval(small_lsq, NoiseModel(), np.zeros(7), 0)
    with pytest.raises(ValueError):
        biased_grad(small_lsq, BiasModel(), np.zeros(9), 0)


def test_bias_models(small_lsq, rng):
    x = rng.standard_normal(8)
    g = small_lsq.grad_sample(x, 0)
    assert np.array_equal(biased_grad(small_lsq, BiasModel(), x, 0), g)
    u = rng.standard_normal(8)
    b = BiasModel("fixed_vector", 0.3, u)
    np.testing.assert_allclose(biased_grad(small_lsq, b, x, 0), g + 0.3 * u / np.linalg.norm(u),
                               rtol=1e-14)
    radial = BiasModel("radial", 0.7)
    pts = np.random.default_rng(2).standard_normal((10_000, 8))
    norms = np.array([np.linalg.norm(radial.value(p)) for p in pts])
    np.testing.assert_allclose(norms, 0.7, rtol=1e-12)
    assert np.array_equal(radial.value(np.zeros(8)), np.zeros(8))


def test_bias_validation():
    with pytest.raises(ValueError):
        BiasModel("fixed_vector", 1.0)
    with pytest.raises(ValueError):
        BiasModel("fixed_vector", 1.0, np.zeros(3))
    with pytest.raises(ValueError):
        BiasModel("radial", -0.1)


def test_batched_biased_grad(small_lsq, rng):
    x = rng.standard_normal(8)
    bias = BiasModel("fixed_vector", 0.2, np.ones(8))
    np.testing.assert_allclose(batched_biased_grad(small_lsq, bias, x, [2]),
                               biased_grad(small_lsq, bias, x, 2), rtol=1e-14)
    np.testing.assert_allclose(batched_biased_grad(small_lsq, BiasModel(), x, np.arange(4)),
                               small_lsq.grad_full(x), rtol=1e-12)
    idx = [3, 0, 0, 2]
    expected = np.zeros(8)
    for i in idx:
        expected += biased_grad(small_lsq, bias, x, i)
    np.testing.assert_allclose(batched_biased_grad(small_lsq, bias, x, idx), expected / 4,
                               rtol=1e-12)
    with pytest.raises(ValueError):
        batched_biased_grad(small_lsq, bias, x, [])


@settings(max_examples=50, deadline=None)
@given(kind=st.sampled_from(sorted(NOISE_CODES)), level=st.floats(0, 10),
       x=arrays(np.float64, 5, elements=st.floats(-1e6, 1e6)))
def test_noise_bounded(kind, level, x):
    assert abs(NoiseModel(kind, level).value(x)) <= level


@settings(max_examples=50, deadline=None)
@given(kind=st.sampled_from(["zero", "fixed_vector", "radial"]), zeta=st.floats(0, 1e3),
       x=arrays(np.float64, 4, elements=st.floats(-1e6, 1e6)))
def test_bias_bounded(kind, zeta, x):
    b = BiasModel(kind, zeta, np.array([1.0, 2.0, -1.0, 0.5]) if kind == "fixed_vector" else None)
    assert np.linalg.norm(b.value(x)) <= zeta * (1 + 1e-12)
