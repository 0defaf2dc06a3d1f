"""Monte-Carlo checks of the estimator's bias and second moment against their bounds.

A report passes when ``empirical <= bound + 4 * stderr``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .estimator import estimate_coefficients
from .oracles import NoiseModel
from .problem import FiniteSumProblem, as_point, make_overparam_lsq
from .sphere import DirectionStream, IndexStream

MIN_SAMPLES = 10_000
GRID_DIMS = (4, 16, 64)
GRID_TAUS = (1e-2, 1e-3)
GRID_DELTAS = (0.0, 1e-6, 1e-4)


@dataclass(frozen=True)
class McReport:
    quantity: str
    samples: int
    point_kind: str
    empirical: float
    bound: float
    stderr: float
    dim: int = 0
    tau: float = 0.0
    delta: float = 0.0

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 4.0 * self.stderr

    def row(self) -> dict:
        return {"quantity": self.quantity, "d": self.dim, "tau": self.tau, "delta": self.delta,
                "empirical": self.empirical, "bound": self.bound, "stderr": self.stderr,
                "pass": self.passed}


def _draw(problem, noise, x, tau, samples, seed):
    if samples < 1:
        raise ValueError("samples must be >= 1")
    E = DirectionStream(seed, problem.dim).next_block(samples)
    idx = IndexStream(seed, problem.sample_count).next_block(samples)
    return estimate_coefficients(problem, noise, x, E, idx, tau), E


def mc_mean_estimate(problem: FiniteSumProblem, noise: NoiseModel, x, tau: float, samples: int,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise mean of ``samples`` estimates at ``x`` and its standard error."""
    x = as_point(x, problem.dim)
    c, E = _draw(problem, noise, x, tau, samples, seed)
    G = c[:, None] * E
    return G.mean(axis=0), G.std(axis=0, ddof=1) / math.sqrt(samples)


def mc_bias(problem: FiniteSumProblem, noise: NoiseModel, x, tau: float, samples: int,
            seed: int, point_kind: str = "random_in_ball") -> McReport:
    """``||mean estimate - grad f(x)||`` against ``L tau + d Delta / tau``.

    The standard error combines the componentwise ones as ``sqrt(sum se_j^2)``.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_SAMPLES}")
    mean, se = mc_mean_estimate(problem, noise, x, tau, samples, seed)
    err = float(np.linalg.norm(mean - problem.grad_full(x)))
    d = problem.dim
    bound = problem.smoothness * tau + d * noise.level / tau
    return McReport("bias_norm", samples, point_kind, err, bound, float(np.sqrt(se @ se)),
                    d, tau, noise.level)


def mc_second_moment(problem: FiniteSumProblem, noise: NoiseModel, tau: float, samples: int,
                     seed: int) -> McReport:
    """``E ||g(x*)||^2`` against ``4 d sigma*^2 + 4 d L^2 tau^2 + d^2 Delta^2 / tau^2``."""
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_SAMPLES}")
    c, _ = _draw(problem, noise, problem.x_star, tau, samples, seed)
    sq = c * c  # directions have unit norm
    d, L, delta = problem.dim, problem.smoothness, noise.level
    bound = 4 * d * problem.sigma_star_sq + 4 * d * L * L * tau * tau + d * d * delta * delta / (tau * tau)
    return McReport("second_moment", samples, "at_xstar", float(sq.mean()), bound,
                    float(sq.std(ddof=1) / math.sqrt(samples)), d, tau, delta)


@dataclass(frozen=True)
class AuxiliaryReport:
    trials: int
    worst_slack_pair: float
    worst_slack_triple: float
    poincare_lhs: float
    poincare_rhs: float
    poincare_stderr: float

    @property
    def passed(self) -> bool:
        return (self.worst_slack_pair >= -1e-12 and self.worst_slack_triple >= -1e-12
                and self.poincare_lhs - self.poincare_rhs <= 4.0 * self.poincare_stderr)

    def to_dict(self) -> dict:
        return {**asdict(self), "pass": self.passed}


def check_auxiliary_inequalities(seed: int, trials: int = 1000, dim: int = 32, tau: float = 1e-2,
                     samples: int = MIN_SAMPLES) -> AuxiliaryReport:
    """Spot checks of the auxiliary inequalities.

    Squared norm of a sum: ``||a+b||^2 <= 2||a||^2 + 2||b||^2`` and
    ``||a+b+c||^2 <= 3(||a||^2 + ||b||^2 + ||c||^2)`` on random vectors; slack is
    reported relative to the right-hand side.

    Poincare on the sphere of radius ``tau`` for the centred difference
    ``h(e) = f(x + tau e) - f(x - tau e)`` of a least-squares objective:
    ``E h^2 <= (tau^2 / d) E ||grad f(x + tau e) + grad f(x - tau e)||^2``.
    For a quadratic both sides agree in expectation, so this is a tight check.
    """
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal((trials, dim)) * rng.exponential(size=(trials, 1))
               for _ in range(3))

    def sq(v):
        return np.einsum("ij,ij->i", v, v)

    rhs2 = 2 * sq(a) + 2 * sq(b)
    rhs3 = 3 * (sq(a) + sq(b) + sq(c))
    slack2 = float(np.min((rhs2 - sq(a + b)) / rhs2))
    slack3 = float(np.min((rhs3 - sq(a + b + c)) / rhs3))

    problem = make_overparam_lsq(dim, max(1, dim // 2), seed)
    x = rng.standard_normal(dim)
    x *= 0.5 * problem.radius / np.linalg.norm(x)
    E = DirectionStream(seed, dim).next_block(samples)
    up, down = x + tau * E, x - tau * E
    A, rhs, m = problem.matrix, problem.rhs, problem.sample_count
    res_up, res_down = up @ A.T - rhs, down @ A.T - rhs
    h = np.einsum("ij,ij->i", res_up, res_up) / m - np.einsum("ij,ij->i", res_down, res_down) / m
    grads = 2.0 * (res_up + res_down) @ A / m
    lhs_s = h * h
    rhs_s = tau * tau / dim * sq(grads)
    diff = lhs_s - rhs_s
    return AuxiliaryReport(trials, slack2, slack3, float(lhs_s.mean()), float(rhs_s.mean()),
                           float(diff.std(ddof=1) / math.sqrt(samples)))


# name used by the operations list
check_appendix_a = check_auxiliary_inequalities


def grid_instance(dim: int, seed: int, consistent: bool = True):
    return make_overparam_lsq(dim, max(2, dim // 2), seed, consistent=consistent)


def random_point_in_ball(dim: int, radius: float, seed: int) -> np.ndarray:
    """Uniform point in the ball (direction uniform, radius ``R * U^(1/d)``)."""
    rng = np.random.default_rng([seed, dim, 7])
    z = rng.standard_normal(dim)
    return z / np.linalg.norm(z) * radius * rng.random() ** (1.0 / dim)


def run_bias_grid(samples: int = MIN_SAMPLES, seed: int = 0,
                  noise_kind: str = "coordinate_oscillation",
                  dims=GRID_DIMS, taus=GRID_TAUS, deltas=GRID_DELTAS) -> list[McReport]:
    """Bias reports over ``dims x taus x deltas`` at a random point of each instance's ball."""
    reports = []
    for d in dims:
        problem = grid_instance(d, seed)
        x = random_point_in_ball(d, problem.radius, seed)
        for tau in taus:
            for delta in deltas:
                noise = NoiseModel.for_tau(noise_kind, delta, tau)
                reports.append(mc_bias(problem, noise, x, tau, samples, seed))
    return reports


def run_second_moment_grid(samples: int = MIN_SAMPLES, seed: int = 0,
                           noise_kind: str = "coordinate_oscillation", consistent: bool = False,
                           dims=GRID_DIMS, taus=GRID_TAUS, deltas=GRID_DELTAS) -> list[McReport]:
    """Second-moment reports over the grid at each instance's minimizer.

    Inconsistent instances are the default so that the ``sigma*^2`` term is exercised.
    """
    reports = []
    for d in dims:
        problem = grid_instance(d, seed, consistent)
        for tau in taus:
            for delta in deltas:
                noise = NoiseModel.for_tau(noise_kind, delta, tau)
                reports.append(mc_second_moment(problem, noise, tau, samples, seed))
    return reports
