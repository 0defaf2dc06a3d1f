"""Finite-sum objectives and the overparameterized least-squares instance.

A problem is ``f(x) = (1/m) * sum_i f(x, i)``. Optimizers only see values
through :func:`azosgd.oracles.zero_order_eval`; exact gradients exist for
baselines and verification.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def as_point(x, dim: int, name: str = "x") -> np.ndarray:
    """Validate ``x`` as a finite float64 vector of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ValueError(f"{name} must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


class FiniteSumProblem:
    """Contract for stochastic finite-sum objectives.

    Subclasses provide ``dim``, ``sample_count``, ``smoothness``, ``radius``,
    ``f_star``, ``sigma_star_sq``, ``x_star`` and the per-sample methods.
    ``eval_points`` may be overridden with a vectorized version.
    """

    dim: int
    sample_count: int
    smoothness: float
    radius: float
    f_star: float
    sigma_star_sq: float
    x_star: np.ndarray

    def _check_index(self, sample_index) -> int:
        i = int(sample_index)
        if not 0 <= i < self.sample_count:
            raise IndexError(f"sample index {i} out of range [0, {self.sample_count})")
        return i

    def eval_sample(self, x, sample_index) -> float:
        raise NotImplementedError

    def grad_sample(self, x, sample_index) -> np.ndarray:
        raise NotImplementedError

    def eval_points(self, points: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """``f(points[r], indices[r])`` for every row ``r``."""
        return np.array([self.eval_sample(p, i) for p, i in zip(points, indices)])

    def grad_batch(self, x, indices) -> np.ndarray:
        """Mean of the per-sample gradients over ``indices``."""
        return np.mean([self.grad_sample(x, i) for i in indices], axis=0)

    def eval_full(self, x) -> float:
        x = as_point(x, self.dim)
        return float(np.mean([self.eval_sample(x, i) for i in range(self.sample_count)]))

    def grad_full(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        return np.mean([self.grad_sample(x, i) for i in range(self.sample_count)], axis=0)


@dataclass(frozen=True, eq=False)
class LeastSquaresProblem(FiniteSumProblem):
    """``f(x, i) = (a_i . x - b_i)**2`` with ``f = mean_i f(x, i)``.

    Arrays are made read-only on construction.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    smoothness: float
    radius: float
    f_star: float
    sigma_star_sq: float
    x_star: np.ndarray
    seed: int | None = None
    consistent: bool | None = None
    dim: int = field(init=False)
    sample_count: int = field(init=False)

    def __post_init__(self):
        A = np.ascontiguousarray(self.matrix, dtype=float)
        b = np.ascontiguousarray(self.rhs, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValueError(f"matrix {A.shape} and rhs {b.shape} are incompatible")
        x_star = as_point(self.x_star, A.shape[1], "x_star").copy()
        for arr in (A, b, x_star):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "x_star", x_star)
        object.__setattr__(self, "dim", A.shape[1])
        object.__setattr__(self, "sample_count", A.shape[0])
        if self.smoothness <= 0 or self.radius <= 0:
            raise ValueError("smoothness and radius must be positive")

    def residual(self, x) -> np.ndarray:
        return self.matrix @ as_point(x, self.dim) - self.rhs

    def eval_sample(self, x, sample_index) -> float:
        x = as_point(x, self.dim)
        i = self._check_index(sample_index)
        r = float(np.dot(self.matrix[i], x)) - self.rhs[i]
        return r * r

    def grad_sample(self, x, sample_index) -> np.ndarray:
        x = as_point(x, self.dim)
        i = self._check_index(sample_index)
        r = float(np.dot(self.matrix[i], x)) - self.rhs[i]
        return 2.0 * r * self.matrix[i]

    def eval_points(self, points, indices):
        rows = self.matrix[indices]
        return (np.einsum("ij,ij->i", rows, points) - self.rhs[indices]) ** 2

    def grad_batch(self, x, indices):
        x = as_point(x, self.dim)
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.sample_count):
            raise IndexError("sample index out of range")
        rows = self.matrix[indices]
        return 2.0 * ((rows @ x - self.rhs[indices]) @ rows) / indices.size

    def eval_full(self, x) -> float:
        r = self.residual(x)
        return float(r @ r) / self.sample_count

    def grad_full(self, x) -> np.ndarray:
        return 2.0 * (self.matrix.T @ self.residual(x)) / self.sample_count

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "samples": self.sample_count,
            "seed": self.seed,
            "consistent": self.consistent,
            "matrix": self.matrix.tolist(),
            "rhs": self.rhs.tolist(),
            "smoothness": self.smoothness,
            "radius": self.radius,
            "f_star": self.f_star,
            "sigma_star_sq": self.sigma_star_sq,
            "x_star": self.x_star.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LeastSquaresProblem":
        problem = cls(
            matrix=np.array(doc["matrix"], dtype=float),
            rhs=np.array(doc["rhs"], dtype=float),
            smoothness=float(doc["smoothness"]),
            radius=float(doc["radius"]),
            f_star=float(doc["f_star"]),
            sigma_star_sq=float(doc["sigma_star_sq"]),
            x_star=np.array(doc["x_star"], dtype=float),
            seed=doc.get("seed"),
            consistent=doc.get("consistent"),
        )
        if problem.dim != doc["dim"] or problem.sample_count != doc["samples"]:
            raise ValueError("dim/samples do not match the stored matrix")
        return problem

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load_json(cls, path) -> "LeastSquaresProblem":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def per_sample_smoothness(matrix) -> float:
    """Uniform-in-sample gradient Lipschitz constant ``max_i 2 ||a_i||^2``."""
    return float(2.0 * np.max(np.einsum("ij,ij->i", matrix, matrix)))


def gradient_variance_at(matrix, rhs, x) -> float:
    """``(1/m) sum_i ||grad f(x, i)||^2`` by enumeration over the samples."""
    r = matrix @ x - rhs
    return float(np.mean(4.0 * r * r * np.einsum("ij,ij->i", matrix, matrix)))


def make_overparam_lsq(dim: int, samples: int, seed: int, consistent: bool = True,
                       perturbation: float = 0.1) -> LeastSquaresProblem:
    """Random overparameterized least squares with ``samples <= dim`` equations.

    ``A`` is i.i.d. standard normal and ``x_true ~ N(0, I/dim)``. A consistent
    instance has ``b = A x_true`` (so ``f* = sigma*^2 = 0``). An inconsistent
    one duplicates the first row of ``A`` into the last and perturbs ``b``;
    the resulting conflict keeps ``f* > 0`` even though ``m <= d``.
    """
    if dim < 1 or samples < 1:
        raise ValueError("dim and samples must be positive")
    if samples > dim:
        raise ValueError(f"not overparameterized: samples={samples} > dim={dim}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((samples, dim))
    x_true = rng.standard_normal(dim) / math.sqrt(dim)
    if consistent:
        b = A @ x_true
        x_star, f_star, sigma_sq = x_true, 0.0, 0.0
    else:
        if samples < 2:
            raise ValueError("an inconsistent instance needs at least 2 samples")
        A[-1] = A[0]
        b = A @ x_true + perturbation * rng.standard_normal(samples)
        x_star = np.linalg.lstsq(A, b, rcond=None)[0]
        r = A @ x_star - b
        f_star = float(r @ r) / samples
        sigma_sq = gradient_variance_at(A, b, x_star)
    return LeastSquaresProblem(
        matrix=A,
        rhs=b,
        smoothness=per_sample_smoothness(A),
        radius=2.0 * float(np.linalg.norm(x_star)),
        f_star=f_star,
        sigma_star_sq=sigma_sq,
        x_star=x_star,
        seed=seed,
        consistent=consistent,
    )


class LinearSurrogate(FiniteSumProblem):
    """``f(x, i) = c . x`` for every sample; gradient ``c`` and ``L = 0``.

    Not bounded below, so only useful for estimator checks.
    """

    def __init__(self, c, samples: int = 1, radius: float = 1.0):
        self.c = np.array(c, dtype=float)
        self.dim = self.c.shape[0]
        self.sample_count = samples
        self.smoothness = 0.0
        self.radius = radius
        self.f_star = 0.0
        self.sigma_star_sq = 0.0
        self.x_star = np.zeros(self.dim)

    def eval_sample(self, x, sample_index):
        self._check_index(sample_index)
        return float(self.c @ as_point(x, self.dim))

    def grad_sample(self, x, sample_index):
        self._check_index(sample_index)
        as_point(x, self.dim)
        return self.c.copy()

    def eval_points(self, points, indices):
        return points @ self.c


class ZeroFunction(LinearSurrogate):
    """``f = 0``; isolates the oracle-noise part of an estimator."""

    def __init__(self, dim: int, samples: int = 1, radius: float = 1.0):
        super().__init__(np.zeros(dim), samples, radius)
