"""Inexact oracles: noisy function values and biased gradients.

Noise ``delta(x)`` and bias ``b(x)`` are deterministic functions of the query
point only, never of the sample index or of any random stream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fallback
from ._backend import NOISE_CODES
from .problem import FiniteSumProblem, as_point

MACHINE_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class NoiseModel:
    """Bounded adversarial noise ``|delta(x)| <= level``.

    ``delta`` depends on ``x`` through ``s = sum_j x_j``:

    * ``zero``: 0
    * ``constant_sign``: ``+level``
    * ``coordinate_oscillation``: ``level * sign(sin(s / width))``; with
      ``width`` well below the smoothing step the values at ``x + tau e`` and
      ``x - tau e`` are effectively decorrelated
    * ``machine_epsilon``: ``level * u(s)`` with ``u`` a fixed hash of ``s``
      into ``[-1, 1)``; ``level`` defaults to the float64 epsilon
    """

    kind: str = "zero"
    level: float | None = None
    width: float = 1e-4

    def __post_init__(self):
        if self.kind not in NOISE_CODES:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {sorted(NOISE_CODES)}")
        level = self.level
        if level is None:
            level = MACHINE_EPS if self.kind == "machine_epsilon" else 0.0
        level = float(level)
        if not level >= 0.0:
            raise ValueError("noise level must be >= 0")
        if not self.width > 0.0:
            raise ValueError("noise width must be > 0")
        object.__setattr__(self, "level", level)

    @classmethod
    def for_tau(cls, kind: str, level: float | None, tau: float) -> "NoiseModel":
        """Noise whose oscillation width is tied to the smoothing step (``tau / 10``)."""
        return cls(kind, level, tau / 10.0)

    @property
    def code(self) -> int:
        return NOISE_CODES[self.kind]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.values(x[None, :])[0])

    def values(self, points) -> np.ndarray:
        """Noise at every row of ``points``."""
        points = np.asarray(points, dtype=float)
        if self.code == _fallback.NOISE_ZERO:
            return np.zeros(points.shape[0])
        return _fallback.noise_values(points.sum(axis=1), self.code, self.level, self.width)


@dataclass(frozen=True, eq=False)
class BiasModel:
    """Gradient bias ``b(x)`` with ``||b(x)|| <= magnitude``.

    ``fixed_vector`` returns ``magnitude * direction`` (direction normalised);
    ``radial`` returns ``magnitude * x / ||x||`` and 0 at the origin.
    """

    kind: str = "zero"
    magnitude: float = 0.0
    direction: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "fixed_vector", "radial"):
            raise ValueError(f"unknown bias kind {self.kind!r}")
        if not self.magnitude >= 0.0:
            raise ValueError("bias magnitude must be >= 0")
        if self.kind == "fixed_vector":
            if self.direction is None:
                raise ValueError("fixed_vector bias needs a direction")
            u = np.array(self.direction, dtype=float)
            norm = np.linalg.norm(u)
            if not norm > 0:
                raise ValueError("bias direction must be non-zero")
            u = u / norm
            u.setflags(write=False)
            object.__setattr__(self, "direction", u)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "zero" or self.magnitude == 0.0:
            return np.zeros_like(x)
        if self.kind == "fixed_vector":
            if self.direction.shape != x.shape:
                raise ValueError("bias direction does not match the point dimension")
            return self.magnitude * self.direction
        norm = np.linalg.norm(x)
        if norm == 0.0:
            return np.zeros_like(x)
        return self.magnitude * (x / norm)


def zero_order_eval(problem: FiniteSumProblem, noise: NoiseModel, x, sample_index) -> float:
    """Noisy value ``f(x, i) + delta(x)``."""
    x = as_point(x, problem.dim)
    return problem.eval_sample(x, sample_index) + noise.value(x)


def biased_grad(problem: FiniteSumProblem, bias: BiasModel, x, sample_index) -> np.ndarray:
    """Biased gradient ``grad f(x, i) + b(x)``."""
    x = as_point(x, problem.dim)
    return problem.grad_sample(x, sample_index) + bias.value(x)


def batched_biased_grad(problem: FiniteSumProblem, bias: BiasModel, x, sample_indices) -> np.ndarray:
    """Mini-batch mean of biased gradients; the bias is added once, unscaled."""
    x = as_point(x, problem.dim)
    indices = np.asarray(sample_indices, dtype=np.int64).ravel()
    if indices.size == 0:
        raise ValueError("empty batch")
    return problem.grad_batch(x, indices) + bias.value(x)
