"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest

from azosgd import _backend
from azosgd.acsa import Schedule
from azosgd.azo import AzoConfig, run_azo_sgd
from azosgd.oracles import NoiseModel
from azosgd.problem import FiniteSumProblem, make_overparam_lsq
from azosgd.sphere import DirectionStream, IndexStream

BACKENDS = _backend.available()
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


class Wrapped(FiniteSumProblem):
    """Hides the least-squares type so the generic per-iteration path is taken."""

    def __init__(self, inner):
        self.inner = inner
        for name in ("dim", "sample_count", "smoothness", "radius", "f_star", "sigma_star_sq", "x_star"):
            setattr(self, name, getattr(inner, name))

    def eval_sample(self, x, i):
        return self.inner.eval_sample(x, i)

    def eval_points(self, points, indices):
        return self.inner.eval_points(points, indices)

    def eval_full(self, x):
        return self.inner.eval_full(x)


def test_active_backend_reported():
    import azosgd
    assert azosgd.BACKEND in BACKENDS
    assert _backend.kernels is BACKENDS[azosgd.BACKEND]


@needs_ext
@pytest.mark.parametrize("kind", ["zero", "constant_sign", "coordinate_oscillation", "machine_epsilon"])
def test_coefficients_agree(kind):
    p = make_overparam_lsq(24, 12, seed=1)
    noise = NoiseModel.for_tau(kind, 1e-6 if kind != "machine_epsilon" else None, 1e-3)
    x = np.random.default_rng(0).standard_normal(24) * 0.1
    E = DirectionStream(0, 24).next_block(500)
    idx = IndexStream(0, 12).next_block(500)
    args = (p.matrix, p.rhs, x, E, idx, 1e-3, noise.code, noise.level, noise.width)
    fast = BACKENDS["cython"].lsq_two_point_coefs(*args)
    slow = BACKENDS["python"].lsq_two_point_coefs(*args)
    # a sign flip of the oscillation noise at a rounding boundary is allowed
    scale = 24 / 2e-3
    tol = 1e-9 * np.abs(slow) + scale * 2 * noise.level + 1e-9
    assert np.all(np.abs(fast - slow) <= tol)
    if kind in ("zero", "constant_sign"):
        np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-9)


@needs_ext
def test_noise_values_agree():
    sums = np.random.default_rng(3).standard_normal(10_000) * 5
    for code in range(4):
        a = BACKENDS["cython"].noise_values(sums, code, 1e-3, 1e-4)
        b = BACKENDS["python"].noise_values(sums, code, 1e-3, 1e-4)
        if code == 3:
            np.testing.assert_allclose(a, b, atol=1e-3 * 1e-6)
        else:
            assert np.array_equal(a, b)


@pytest.mark.parametrize("mode", ["paper_schedule", "fixed_gamma"])
@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_chunk_kernel_matches_generic_path(monkeypatch, name, mode):
    p = make_overparam_lsq(32, 16, seed=5)
    s = Schedule(p.smoothness, p.radius, 4, 400, f_star=0.0, mode=mode,
                 gamma=1e-4 if mode == "fixed_gamma" else None)
    cfg = AzoConfig(s, 1e-3, NoiseModel("constant_sign", 1e-9), seed=3, trace_every=1)
    monkeypatch.setattr("azosgd.azo.kernels", BACKENDS[name])
    fused = run_azo_sgd(p, cfg)
    generic = run_azo_sgd(Wrapped(p), cfg)
    np.testing.assert_allclose(fused.values, generic.values, rtol=1e-8)
    np.testing.assert_allclose(fused.x_ag, generic.x_ag, rtol=1e-8, atol=1e-12)
    assert np.array_equal(fused.iterations, generic.iterations)


@needs_ext
def test_backends_agree_on_run(monkeypatch):
    p = make_overparam_lsq(64, 32, seed=2)
    s = Schedule(p.smoothness, p.radius, 8, 300, mode="fixed_gamma", gamma=1e-4)
    cfg = AzoConfig(s, 1e-3, NoiseModel("machine_epsilon"), seed=1, trace_every=1)
    out = {}
    for name, mod in BACKENDS.items():
        monkeypatch.setattr("azosgd.azo.kernels", mod)
        out[name] = run_azo_sgd(p, cfg)
    np.testing.assert_allclose(out["cython"].values, out["python"].values, rtol=1e-8)


@needs_ext
def test_threaded_generic_path_matches(monkeypatch):
    p = make_overparam_lsq(32, 16, seed=5)
    s = Schedule(p.smoothness, p.radius, 6, 100, f_star=0.0)
    base = AzoConfig(s, 1e-3, seed=3, trace_every=1)
    threaded = AzoConfig(s, 1e-3, seed=3, trace_every=1, threads=3)
    np.testing.assert_allclose(run_azo_sgd(p, base).values, run_azo_sgd(p, threaded).values,
                               rtol=1e-8)
