"""Two-point gradient estimates with directions uniform on the unit sphere.

``g(x, i, e) = d / (2 tau) * (f_delta(x + tau e, i) - f_delta(x - tau e, i)) * e``

Both evaluations use the same sample index ``i``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .oracles import NoiseModel, zero_order_eval
from .problem import FiniteSumProblem, LeastSquaresProblem, as_point
from .sphere import DirectionStream, IndexStream

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class EstimatorParams:
    tau: float
    batch: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if int(self.batch) != self.batch or self.batch < 1:
            raise ValueError("batch must be >= 1")


def two_point_estimate(problem: FiniteSumProblem, noise: NoiseModel, x, sample_index,
                       e, tau: float) -> np.ndarray:
    """Single two-point estimate along the unit direction ``e``."""
    x = as_point(x, problem.dim)
    e = as_point(e, problem.dim, "e")
    if abs(float(np.linalg.norm(e)) - 1.0) > UNIT_TOL:
        raise ValueError("direction e must have unit norm")
    if not tau > 0:
        raise ValueError("tau must be > 0")
    up = zero_order_eval(problem, noise, x + tau * e, sample_index)
    down = zero_order_eval(problem, noise, x - tau * e, sample_index)
    return problem.dim / (2.0 * tau) * (up - down) * e


def estimate_coefficients(problem: FiniteSumProblem, noise: NoiseModel, x, directions,
                          indices, tau: float) -> np.ndarray:
    """Scalar coefficient of every row of ``directions`` (the estimate is ``c[r] * e_r``)."""
    directions = np.ascontiguousarray(directions, dtype=float)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if isinstance(problem, LeastSquaresProblem):
        return kernels.lsq_two_point_coefs(problem.matrix, problem.rhs, np.ascontiguousarray(x),
                                           directions, indices, float(tau), noise.code,
                                           noise.level, noise.width)
    plus = x + tau * directions
    minus = x - tau * directions
    up = problem.eval_points(plus, indices) + noise.values(plus)
    down = problem.eval_points(minus, indices) + noise.values(minus)
    return problem.dim / (2.0 * tau) * (up - down)


def _coefficients_threaded(problem, noise, x, directions, indices, tau, threads):
    n = directions.shape[0]
    if threads <= 1 or n < 2:
        return estimate_coefficients(problem, noise, x, directions, indices, tau)
    bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
    spans = list(zip(bounds[:-1], bounds[1:]))
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = pool.map(
            lambda s: estimate_coefficients(problem, noise, x, directions[s[0]:s[1]],
                                            indices[s[0]:s[1]], tau),
            spans,
        )
        return np.concatenate(list(parts))


def batched_estimate(problem: FiniteSumProblem, noise: NoiseModel, x, params: EstimatorParams,
                     direction_stream: DirectionStream, sample_stream: IndexStream,
                     threads: int = 1) -> np.ndarray:
    """Mean of ``params.batch`` two-point estimates at ``x``.

    Draws exactly ``batch`` directions and ``batch`` indices. Rows may be
    evaluated on several threads; the mean is always summed in row order, so
    the result does not depend on ``threads``.
    """
    x = as_point(x, problem.dim)
    if direction_stream.dim != problem.dim:
        raise ValueError("direction stream dimension does not match the problem")
    if sample_stream.count != problem.sample_count:
        raise ValueError("sample stream range does not match the problem")
    directions = direction_stream.next_block(params.batch)
    indices = sample_stream.next_block(params.batch)
    coefs = _coefficients_threaded(problem, noise, x, directions, indices, params.tau, threads)
    total = np.zeros(problem.dim)
    for c, e in zip(coefs, directions):
        total += c * e
    return total / params.batch
