"""Closed-form budgets for AZO-SGD at a target accuracy ``epsilon``.

All hidden constants are taken as 1 and integer quantities are rounded up.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

# quotients such as sqrt(1/0.01) land a hair above an integer in floating point
_CEIL_SLACK = 1e-9


def _ceil(value: float) -> int:
    nearest = round(value)
    if abs(value - nearest) <= _CEIL_SLACK * max(1.0, abs(value)):
        return max(1, int(nearest))
    return max(1, math.ceil(value))


def _positive(**values) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")


def _nonnegative(**values) -> None:
    for name, value in values.items():
        if not value >= 0:
            raise ValueError(f"{name} must be >= 0, got {value}")


def iterations(epsilon: float, L: float, R: float) -> int:
    """``N = ceil(sqrt(L R^2 / epsilon))``."""
    _positive(epsilon=epsilon, L=L, R=R)
    return _ceil(math.sqrt(L * R * R / epsilon))


def batch_size(epsilon: float, L: float, R: float, d: int, sigma_star_sq: float) -> int:
    """``B = ceil(max{sqrt(L R^2 / eps), d sigma*^2 R / (sqrt(L) eps^1.5)})``."""
    _positive(epsilon=epsilon, L=L, R=R, d=d)
    _nonnegative(sigma_star_sq=sigma_star_sq)
    first = math.sqrt(L * R * R / epsilon)
    second = d * sigma_star_sq * R / (math.sqrt(L) * epsilon**1.5)
    return _ceil(max(first, second))


def total_calls(epsilon: float, L: float, R: float, d: int, sigma_star_sq: float) -> int:
    """``T = N * B``."""
    return iterations(epsilon, L, R) * batch_size(epsilon, L, R, d, sigma_star_sq)


def total_calls_max_form(epsilon: float, L: float, R: float, d: int, sigma_star_sq: float) -> float:
    """Unrounded ``max{L R^2 / eps, d sigma*^2 R^2 / eps^2}``."""
    _positive(epsilon=epsilon, L=L, R=R, d=d)
    _nonnegative(sigma_star_sq=sigma_star_sq)
    return max(L * R * R / epsilon, d * sigma_star_sq * R * R / epsilon**2)


def smoothing(epsilon: float, L: float, R: float) -> float:
    """``tau = epsilon / (L R)``."""
    _positive(epsilon=epsilon, L=L, R=R)
    return epsilon / (L * R)


def max_noise(epsilon: float, L: float, R: float, d: int) -> float:
    """``Delta_max = epsilon^2 / (d L R)``, the form the derivation ends with."""
    _positive(epsilon=epsilon, L=L, R=R, d=d)
    return epsilon * epsilon / (d * L * R)


def max_noise_statement_form(epsilon: float, L: float, R: float, d: int) -> float:
    """``epsilon^2 / (d L R^2)``; differs from :func:`max_noise` by a factor ``R``."""
    _positive(epsilon=epsilon, L=L, R=R, d=d)
    return epsilon * epsilon / (d * L * R * R)


def convergence_bound(N: int, B: int, L: float, R: float, sigma_star: float, zeta: float) -> float:
    """``L R^2/N^2 + L R^2/(B N) + sigma* R/sqrt(B N) + zeta R + zeta^2 N/(2L)`` with unit constant."""
    _positive(N=N, B=B, L=L, R=R)
    _nonnegative(sigma_star=sigma_star, zeta=zeta)
    return (L * R * R / N**2 + L * R * R / (B * N) + sigma_star * R / math.sqrt(B * N)
            + zeta * R + zeta * zeta * N / (2.0 * L))


# name used by the operations list
theorem1_bound = convergence_bound


@dataclass(frozen=True)
class TheoryBudget:
    epsilon: float
    N: int
    B: int
    T: int
    tau: float
    delta_max: float
    gamma: float

    def to_dict(self) -> dict:
        return asdict(self)


def budget(epsilon: float, L: float, R: float, d: int, sigma_star_sq: float = 0.0) -> TheoryBudget:
    """All prescriptions at once; ``gamma`` is the schedule's capped base step for (B, N)."""
    from .acsa import Schedule

    N = iterations(epsilon, L, R)
    B = batch_size(epsilon, L, R, d, sigma_star_sq)
    gamma = Schedule(L, R, B, N, sigma_star_sq=sigma_star_sq).gamma
    return TheoryBudget(epsilon, N, B, N * B, smoothing(epsilon, L, R),
                        max_noise(epsilon, L, R, d), gamma)
