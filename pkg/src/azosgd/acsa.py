"""Biased AC-SA: accelerated mini-batch SGD with a ball projection.

Each iteration forms the query point ``x_md`` from the descent iterate ``x``
and the aggregate ``x_ag``, takes one (possibly biased, possibly zero-order)
gradient there, steps and projects ``x``, then re-averages ``x_ag``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .oracles import BiasModel, batched_biased_grad
from .problem import FiniteSumProblem, as_point
from .sphere import IndexStream

MODES = ("paper_schedule", "fixed_gamma")


class DivergenceError(FloatingPointError):
    """A gradient came back non-finite; the run cannot continue."""

    def __init__(self, iteration: int, grad_norm: float):
        super().__init__(f"non-finite gradient at iteration {iteration} (||g|| = {grad_norm})")
        self.iteration = iteration
        self.grad_norm = grad_norm


def _variance_term(batch, radius, horizon, smoothness, f_star, sigma_star_sq) -> float:
    if sigma_star_sq is not None:
        denom = sigma_star_sq * horizon**3
    elif f_star is not None:
        denom = smoothness * f_star * horizon**3
    else:
        return math.inf
    if denom <= 0:
        return math.inf
    return math.sqrt(batch * radius**2 / denom)


@dataclass(frozen=True)
class Schedule:
    """Momentum weights ``beta_k = 1 + k/6`` and step sizes ``gamma_k``.

    ``paper_schedule``: ``gamma_k = gamma * (k + 1)`` where ``gamma`` defaults
    to ``min{1/(12L), B/(24L(N+1)), sqrt(B R^2 / (v N^3))}``; ``v`` is
    ``sigma_star_sq`` when given, else ``L * f_star``, and the last term is
    dropped when ``v = 0``. An explicit ``gamma`` may not exceed that cap.

    ``fixed_gamma``: ``gamma_k = gamma`` for every ``k``.
    """

    smoothness: float
    radius: float
    batch: int
    horizon: int
    f_star: float | None = None
    sigma_star_sq: float | None = None
    mode: str = "paper_schedule"
    gamma: float | None = None

    def __post_init__(self):
        if not self.smoothness > 0 or not self.radius > 0:
            raise ValueError("smoothness and radius must be > 0")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for name in ("f_star", "sigma_star_sq"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0")
        cap = self.gamma_cap
        if self.mode == "fixed_gamma":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("fixed_gamma mode needs gamma > 0")
        elif self.gamma is None:
            object.__setattr__(self, "gamma", cap)
        elif not 0 < self.gamma <= cap * (1 + 1e-12):
            raise ValueError(f"gamma={self.gamma} exceeds the schedule cap {cap}")

    @property
    def gamma_cap(self) -> float:
        L, B, N = self.smoothness, self.batch, self.horizon
        return min(1.0 / (12.0 * L), B / (24.0 * L * (N + 1)),
                   _variance_term(B, self.radius, N, L, self.f_star, self.sigma_star_sq))

    @property
    def growing(self) -> bool:
        return self.mode == "paper_schedule"

    def at(self, k: int) -> tuple[float, float]:
        """``(beta_k, gamma_k)`` for ``0 <= k < horizon``."""
        if not 0 <= k < self.horizon:
            raise IndexError(f"iteration {k} outside [0, {self.horizon})")
        gamma_k = self.gamma * (k + 1) if self.growing else self.gamma
        return 1.0 + k / 6.0, gamma_k

    @property
    def gamma_base(self) -> float:
        return self.gamma

    def replace(self, **changes) -> "Schedule":
        """Copy with changed fields; a derived (capped) gamma is re-derived."""
        fields_ = {name: getattr(self, name) for name in self.__dataclass_fields__}
        if self.mode == "paper_schedule" and "gamma" not in changes and self.gamma == self.gamma_cap:
            fields_["gamma"] = None
        fields_.update(changes)
        return Schedule(**fields_)


def schedule_at(s: Schedule, k: int) -> tuple[float, float]:
    return s.at(k)


def project_ball(x, radius: float) -> np.ndarray:
    """Scale ``x`` back onto the ball of the given radius if it lies outside."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    x = np.asarray(x, dtype=float)
    norm = float(np.sqrt(x @ x))
    if norm <= radius:
        return x
    return x * (radius / norm)


@dataclass
class OptimizerState:
    x: np.ndarray
    x_ag: np.ndarray
    x_md: np.ndarray
    k: int = 0
    oracle_calls: int = 0

    @classmethod
    def start(cls, x0) -> "OptimizerState":
        x0 = np.array(x0, dtype=float)
        return cls(x0, x0.copy(), x0.copy())


def acsa_step(state: OptimizerState, s: Schedule, grad_supplier: Callable[[np.ndarray], np.ndarray],
              calls: int | None = None) -> OptimizerState:
    """One iteration; ``grad_supplier`` is queried exactly once, at ``x_md``.

    ``calls`` is the oracle cost of that query (default: the batch size).
    """
    beta, gamma_k = s.at(state.k)
    inv = 1.0 / beta
    x_md = inv * state.x + (1.0 - inv) * state.x_ag
    g = np.asarray(grad_supplier(x_md), dtype=float)
    gnorm = float(np.sqrt(g @ g))
    if not math.isfinite(gnorm):
        raise DivergenceError(state.k, gnorm)
    x_next = project_ball(state.x - gamma_k * g, s.radius)
    x_ag = inv * x_next + (1.0 - inv) * state.x_ag
    cost = s.batch if calls is None else calls
    return OptimizerState(x_next, x_ag, x_md, state.k + 1, state.oracle_calls + cost)


def default_trace_every(horizon: int) -> int:
    return 1 if horizon <= 1000 else math.ceil(horizon / 1000)


@dataclass
class Trajectory:
    """Sampled optimality gaps of ``x_ag`` plus the final iterates.

    Row ``j`` describes the state after ``iterations[j]`` completed iterations.
    """

    method: str
    f_star: float
    initial_value: float
    x_ag: np.ndarray
    x: np.ndarray
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    estimator_evals: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    raw_calls: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    wall_ns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    x_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    completed: int = 0
    max_x_norm: float = 0.0

    @property
    def gaps(self) -> np.ndarray:
        return self.values - self.f_star

    @property
    def initial_gap(self) -> float:
        return self.initial_value - self.f_star

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1]) if len(self.values) else self.initial_gap

    def iterations_to_threshold(self, relative: float) -> int | None:
        """First traced iteration with ``gap <= relative * initial_gap``."""
        hits = np.nonzero(self.gaps <= relative * self.initial_gap)[0]
        return int(self.iterations[hits[0]]) if hits.size else None

    def rows(self):
        for j in range(len(self.iterations)):
            yield {
                "iteration": int(self.iterations[j]),
                "f_ag_gap": float(self.values[j] - self.f_star),
                "f_ag_value": float(self.values[j]),
                "grad_estimator_evals": int(self.estimator_evals[j]),
                "raw_oracle_calls": int(self.raw_calls[j]),
                "wall_ns": int(self.wall_ns[j]),
            }


class TraceRecorder:
    """Collects trace rows every ``trace_every`` iterations and at the horizon.

    Iterations up to ``dense_until`` are all traced.
    """

    def __init__(self, horizon: int, trace_every: int | None, wall_clock: bool = True,
                 dense_until: int = 0):
        self.horizon = horizon
        self.wall_clock = wall_clock
        self.dense_until = dense_until
        self.every = default_trace_every(horizon) if trace_every is None else int(trace_every)
        if self.every < 1:
            raise ValueError("trace_every must be >= 1")
        self._t0 = time.perf_counter_ns()
        self.rows: list[tuple] = []

    def wants(self, k: int) -> bool:
        return k <= self.dense_until or k % self.every == 0 or k == self.horizon

    def add(self, k, value, estimator_evals, raw_calls, x_norm):
        wall = time.perf_counter_ns() - self._t0 if self.wall_clock else 0
        self.rows.append((k, value, estimator_evals, raw_calls, wall, x_norm))

    def fill(self, traj: Trajectory) -> Trajectory:
        if self.rows:
            cols = list(zip(*self.rows))
            traj.iterations = np.array(cols[0], dtype=np.int64)
            traj.values = np.array(cols[1], dtype=float)
            traj.estimator_evals = np.array(cols[2], dtype=np.int64)
            traj.raw_calls = np.array(cols[3], dtype=np.int64)
            traj.wall_ns = np.array(cols[4], dtype=np.int64)
            traj.x_norms = np.array(cols[5], dtype=float)
        return traj


def _start_point(problem: FiniteSumProblem, x0, radius: float) -> np.ndarray:
    x0 = np.zeros(problem.dim) if x0 is None else as_point(x0, problem.dim, "x0").copy()
    if np.linalg.norm(x0) > radius * (1 + 1e-12):
        raise ValueError("x0 must lie inside the ball of radius R")
    return x0


def run_acsa(problem: FiniteSumProblem, bias: BiasModel, s: Schedule, x0=None,
             trace_every: int | None = None, seed: int = 0, full_batch: bool = False,
             stream: int = 0) -> Trajectory:
    """Biased AC-SA with the mini-batch first-order oracle.

    Sample indices are drawn i.i.d. from an :class:`IndexStream`; with
    ``full_batch`` every step uses all ``m`` samples instead.
    """
    x0 = _start_point(problem, x0, s.radius)
    samples = IndexStream(seed, problem.sample_count, stream=stream)
    all_indices = np.arange(problem.sample_count)
    calls = problem.sample_count if full_batch else s.batch

    def supplier(x_md):
        idx = all_indices if full_batch else samples.next_block(s.batch)
        return batched_biased_grad(problem, bias, x_md, idx)

    state = OptimizerState.start(x0)
    trace = TraceRecorder(s.horizon, trace_every)
    max_norm = float(np.linalg.norm(x0))
    for _ in range(s.horizon):
        state = acsa_step(state, s, supplier, calls)
        norm = float(np.linalg.norm(state.x))
        max_norm = max(max_norm, norm)
        if trace.wants(state.k):
            trace.add(state.k, problem.eval_full(state.x_ag), state.oracle_calls,
                      state.oracle_calls, norm)
    traj = Trajectory("acsa", problem.f_star, problem.eval_full(x0), state.x_ag, state.x,
                      completed=state.k, max_x_norm=max_norm)
    return trace.fill(traj)


def run_sgd(problem: FiniteSumProblem, bias: BiasModel, step: float, batch: int, horizon: int,
            radius: float | None = None, x0=None, trace_every: int | None = None, seed: int = 0,
            full_batch: bool = False, stream: int = 0) -> Trajectory:
    """Plain projected mini-batch SGD with a constant step (baseline)."""
    if not step > 0:
        raise ValueError("step must be > 0")
    radius = problem.radius if radius is None else radius
    x = _start_point(problem, x0, radius)
    x0 = x.copy()
    samples = IndexStream(seed, problem.sample_count, stream=stream)
    all_indices = np.arange(problem.sample_count)
    calls = problem.sample_count if full_batch else batch
    trace = TraceRecorder(horizon, trace_every)
    max_norm = float(np.linalg.norm(x))
    for k in range(1, horizon + 1):
        idx = all_indices if full_batch else samples.next_block(batch)
        g = batched_biased_grad(problem, bias, x, idx)
        gnorm = float(np.linalg.norm(g))
        if not math.isfinite(gnorm):
            raise DivergenceError(k - 1, gnorm)
        x = project_ball(x - step * g, radius)
        norm = float(np.linalg.norm(x))
        max_norm = max(max_norm, norm)
        if trace.wants(k):
            trace.add(k, problem.eval_full(x), k * calls, k * calls, norm)
    traj = Trajectory("sgd_baseline", problem.f_star, problem.eval_full(x0), x, x,
                      completed=horizon, max_x_norm=max_norm)
    return trace.fill(traj)
