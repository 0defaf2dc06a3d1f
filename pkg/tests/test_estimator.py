import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from azosgd.estimator import (EstimatorParams, batched_estimate, estimate_coefficients,
                              two_point_estimate)
from azosgd.oracles import NoiseModel
from azosgd.problem import FiniteSumProblem, LinearSurrogate, ZeroFunction, make_overparam_lsq
from azosgd.sphere import DirectionStream, IndexStream


class HalfSquaredNorm(FiniteSumProblem):
    def __init__(self, dim):
        self.dim, self.sample_count = dim, 1

    def eval_sample(self, x, sample_index):
        return 0.5 * float(np.dot(x, x))


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_exact_on_linear():
    c = np.array([1.0, -2.0, 3.0, 0.5])
    f = LinearSurrogate(c)
    e = unit([1.0, 2.0, -1.0, 0.0])
    g = two_point_estimate(f, NoiseModel(), np.ones(4), 0, e, 0.1)
    np.testing.assert_allclose(g, 4 * (c @ e) * e, rtol=1e-12)
    g1 = two_point_estimate(LinearSurrogate([2.5]), NoiseModel(), np.zeros(1), 0, np.array([-1.0]), 0.3)
    assert g1[0] == pytest.approx(2.5, rel=1e-14)


def test_symmetric_point_gives_zero():
    f = HalfSquaredNorm(6)
    for seed in range(5):
        e = DirectionStream(seed, 6).next_direction()
        assert np.array_equal(two_point_estimate(f, NoiseModel(), np.zeros(6), 0, e, 1e-2), np.zeros(6))


def test_matches_scalar_recomputation():
    p = make_overparam_lsq(8, 4, seed=0)
    x = np.linspace(-0.5, 0.5, 8)
    e = DirectionStream(13, 8).next_direction()
    tau, i = 1e-3, 2

    def scalar_eval(z):
        acc = 0.0
        for j in range(8):
            acc += p.matrix[i, j] * z[j]
        return (acc - p.rhs[i]) ** 2

    up = scalar_eval([x[j] + tau * e[j] for j in range(8)])
    down = scalar_eval([x[j] - tau * e[j] for j in range(8)])
    expected = np.array([8 / (2 * tau) * (up - down) * e[j] for j in range(8)])
    generic = two_point_estimate(p, NoiseModel(), x, i, e, tau)
    np.testing.assert_allclose(generic, expected, rtol=1e-9, atol=1e-12)
    c = estimate_coefficients(p, NoiseModel(), x, e[None, :], np.array([i]), tau)
    np.testing.assert_allclose(c[0] * e, expected, rtol=1e-9, atol=1e-12)


def test_rejects_bad_inputs(small_lsq):
    with pytest.raises(ValueError):
        two_point_estimate(small_lsq, NoiseModel(), np.zeros(8), 0, np.ones(8), 1e-3)
    with pytest.raises(ValueError):
        two_point_estimate(small_lsq, NoiseModel(), np.zeros(8), 0, unit(np.ones(8)), 0.0)
    with pytest.raises(ValueError):
        EstimatorParams(tau=-1.0)
    with pytest.raises(ValueError):
        EstimatorParams(tau=1.0, batch=0)


def test_batch_of_one_equals_single(small_lsq):
    x = np.full(8, 0.1)
    params = EstimatorParams(1e-3, 1)
    g = batched_estimate(small_lsq, NoiseModel(), x, params, DirectionStream(5, 8), IndexStream(5, 4))
    e = DirectionStream(5, 8).next_direction()
    i = IndexStream(5, 4).next_index()
    np.testing.assert_allclose(g, two_point_estimate(small_lsq, NoiseModel(), x, i, e, 1e-3),
                               rtol=1e-9, atol=1e-12)


def test_consumes_exactly_b_draws(small_lsq):
    d, s = DirectionStream(1, 8), IndexStream(1, 4)
    batched_estimate(small_lsq, NoiseModel(), np.zeros(8), EstimatorParams(1e-2, 7), d, s)
    assert d.counter == 7 and s.counter == 7


def test_linear_unbiased_monte_carlo():
    c = np.array([0.5, -1.0, 2.0, 0.25])
    f = LinearSurrogate(c)
    n = 100_000
    E = DirectionStream(99, 4).next_block(n)
    coef = estimate_coefficients(f, NoiseModel(), np.zeros(4), E, np.zeros(n, dtype=np.int64), 1e-2)
    G = coef[:, None] * E
    se = G.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(G.mean(axis=0) - c) <= 4 * se)


@pytest.mark.parametrize("noise", [NoiseModel(), NoiseModel("coordinate_oscillation", 1e-5, 1e-4)])
def test_deterministic_across_runs_and_threads(noise):
    p = make_overparam_lsq(32, 16, seed=4)
    x = np.full(32, 0.05)
    params = EstimatorParams(1e-3, 8)
    outs = [batched_estimate(p, noise, x, params, DirectionStream(8, 32), IndexStream(8, 16), threads=t)
            for t in (1, 1, 1, 8)]
    for g in outs[1:]:
        assert np.array_equal(g, outs[0])


def test_threads_on_generic_problem():
    f = LinearSurrogate(np.arange(5.0), samples=3)
    params = EstimatorParams(1e-2, 9)
    a = batched_estimate(f, NoiseModel(), np.ones(5), params, DirectionStream(2, 5), IndexStream(2, 3))
    b = batched_estimate(f, NoiseModel(), np.ones(5), params, DirectionStream(2, 5), IndexStream(2, 3),
                         threads=4)
    assert np.array_equal(a, b)


def test_stream_mismatch(small_lsq):
    with pytest.raises(ValueError):
        batched_estimate(small_lsq, NoiseModel(), np.zeros(8), EstimatorParams(1e-2),
                         DirectionStream(0, 7), IndexStream(0, 4))
    with pytest.raises(ValueError):
        batched_estimate(small_lsq, NoiseModel(), np.zeros(8), EstimatorParams(1e-2),
                         DirectionStream(0, 8), IndexStream(0, 5))


def test_pure_noise_bounded_by_d_delta_over_tau():
    f = ZeroFunction(6)
    delta = 1e-4
    for tau in (1e-1, 1e-2, 1e-3):
        E = DirectionStream(3, 6).next_block(2000)
        c = estimate_coefficients(f, NoiseModel("constant_sign", delta), np.ones(6), E,
                                  np.zeros(2000, dtype=np.int64), tau)
        assert np.all(np.abs(c) <= 6 * delta / tau)
        c = estimate_coefficients(f, NoiseModel.for_tau("coordinate_oscillation", delta, tau),
                                  np.ones(6), E, np.zeros(2000, dtype=np.int64), tau)
        assert np.all(np.abs(c) <= 6 * delta / tau * (1 + 1e-12))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), tau=st.floats(1e-4, 1.0), i=st.integers(0, 3))
def test_antisymmetric_in_direction(seed, tau, i):
    p = make_overparam_lsq(8, 4, seed=seed % 1000)
    x = np.random.default_rng(seed).standard_normal(8)
    e = DirectionStream(seed, 8).next_direction()
    a = two_point_estimate(p, NoiseModel(), x, i, e, tau)
    b = two_point_estimate(p, NoiseModel(), x, i, -e, tau)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9 * np.linalg.norm(a))
