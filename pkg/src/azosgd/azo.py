"""AZO-SGD: the AC-SA skeleton driven by the batched two-point estimator.

Least-squares problems run through the fused chunk kernel: directions and
sample indices for ``K`` iterations are drawn up front and the kernel performs
the ``K`` updates without returning to Python. Any other problem, or
``threads > 1``, goes through :func:`azosgd.acsa.acsa_step` one iteration at a
time. Both paths consume the same streams in the same order.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from .acsa import (DivergenceError, OptimizerState, Schedule, TraceRecorder, Trajectory,
                   _start_point, acsa_step)
from .estimator import EstimatorParams, batched_estimate
from .oracles import NoiseModel
from .problem import FiniteSumProblem, LeastSquaresProblem
from .sphere import DirectionStream, IndexStream
from .theory import max_noise

SWEEP_THRESHOLD = 1e-3
_CHUNK_FLOATS = 1 << 20


class NoiseAboveFrontier(UserWarning):
    """The configured noise level exceeds the admissible level for the target accuracy."""


@dataclass(frozen=True, eq=False)
class AzoConfig:
    """Full parameter set of one AZO-SGD run.

    ``stop_relative`` ends the run at the first traced iteration whose gap is
    at most ``stop_relative * initial_gap``. ``epsilon`` (optional) enables
    the noise-frontier warning. Iterations up to ``trace_dense_until`` are
    traced regardless of ``trace_every``.
    """

    schedule: Schedule
    tau: float
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    x0: np.ndarray | None = None
    trace_every: int | None = None
    threads: int = 1
    epsilon: float | None = None
    stop_relative: float | None = None
    wall_clock: bool = True
    trace_dense_until: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.trace_every is not None and self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")
        if self.x0 is not None and np.linalg.norm(self.x0) > self.schedule.radius * (1 + 1e-12):
            raise ValueError("x0 must lie inside the ball of radius R")


def _warn_frontier(problem: FiniteSumProblem, cfg: AzoConfig) -> None:
    if cfg.epsilon is None or cfg.noise.level == 0.0:
        return
    limit = max_noise(cfg.epsilon, cfg.schedule.smoothness, cfg.schedule.radius, problem.dim)
    if cfg.noise.level > limit:
        warnings.warn(f"noise level {cfg.noise.level:g} exceeds the admissible {limit:g} "
                      f"for epsilon={cfg.epsilon:g}", NoiseAboveFrontier, stacklevel=3)


def run_azo_sgd(problem: FiniteSumProblem, cfg: AzoConfig) -> Trajectory:
    """Run AZO-SGD for ``cfg.schedule.horizon`` iterations (or until the stop rule fires).

    Every iteration costs ``B`` estimator evaluations and ``2B`` raw
    zero-order calls.
    """
    s = cfg.schedule
    _warn_frontier(problem, cfg)
    x0 = _start_point(problem, cfg.x0, s.radius)
    initial = problem.eval_full(x0)
    stop_value = -math.inf
    if cfg.stop_relative is not None:
        stop_value = problem.f_star + cfg.stop_relative * (initial - problem.f_star)
    directions = DirectionStream(cfg.seed, problem.dim)
    samples = IndexStream(cfg.seed, problem.sample_count)
    trace = TraceRecorder(s.horizon, cfg.trace_every, cfg.wall_clock, cfg.trace_dense_until)
    if isinstance(problem, LeastSquaresProblem) and cfg.threads == 1:
        x, x_ag, done, max_norm = _run_chunked(problem, cfg, x0, directions, samples, trace,
                                               stop_value)
    else:
        x, x_ag, done, max_norm = _run_generic(problem, cfg, x0, directions, samples, trace,
                                               stop_value)
    traj = Trajectory("azo_sgd", problem.f_star, initial, x_ag, x, completed=done,
                      max_x_norm=max_norm)
    return trace.fill(traj)


def _run_generic(problem, cfg, x0, directions, samples, trace, stop_value):
    s = cfg.schedule
    params = EstimatorParams(cfg.tau, s.batch)

    def supplier(x_md):
        return batched_estimate(problem, cfg.noise, x_md, params, directions, samples,
                                cfg.threads)

    state = OptimizerState.start(x0)
    max_norm = float(np.linalg.norm(x0))
    while state.k < s.horizon:
        state = acsa_step(state, s, supplier, s.batch)
        norm = float(np.linalg.norm(state.x))
        max_norm = max(max_norm, norm)
        if trace.wants(state.k):
            value = problem.eval_full(state.x_ag)
            trace.add(state.k, value, state.k * s.batch, 2 * state.k * s.batch, norm)
            if value <= stop_value:
                break
    return state.x, state.x_ag, state.k, max_norm


def _run_chunked(problem, cfg, x0, directions, samples, trace, stop_value):
    s = cfg.schedule
    B, d = s.batch, problem.dim
    chunk = max(1, _CHUNK_FLOATS // (B * d))
    x = x0.copy()
    x_ag = x0.copy()
    max_norm = float(np.linalg.norm(x0))
    values = np.empty(chunk)
    xnorms = np.empty(chunk)
    k = 0
    while k < s.horizon:
        count = min(chunk, s.horizon - k)
        E = directions.next_block(count * B)
        idx = samples.next_block(count * B)
        record = np.fromiter((trace.wants(k + t + 1) for t in range(count)), dtype=np.uint8,
                             count=count)
        done, gnorm, status = kernels.lsq_azo_chunk(
            problem.matrix, problem.rhs, x, x_ag, E, idx, k, count, B, s.gamma, s.growing,
            s.radius, cfg.tau, cfg.noise.code, cfg.noise.level, cfg.noise.width,
            record, values, xnorms, stop_value)
        if done:
            max_norm = max(max_norm, float(xnorms[:done].max()))
        for t in np.nonzero(record[:done])[0]:
            it = k + int(t) + 1
            trace.add(it, float(values[t]), it * B, 2 * it * B, float(xnorms[t]))
        k += done
        if status == 1:
            raise DivergenceError(k, gnorm)
        if status == 2:
            break
    return x, x_ag, k, max_norm


@dataclass
class SweepReport:
    """Per-batch-size results of a sweep, in the order the batches were given."""

    batches: list[int]
    trajectories: list[Trajectory]
    threshold: float

    @property
    def iterations_to_threshold(self) -> list[int | None]:
        return [t.iterations_to_threshold(self.threshold) for t in self.trajectories]

    @property
    def raw_calls(self) -> list[int]:
        """Raw zero-order calls spent to reach the threshold (or in total if never reached)."""
        out = []
        for B, t, its in zip(self.batches, self.trajectories, self.iterations_to_threshold):
            out.append(2 * B * (t.completed if its is None else its))
        return out

    def rows(self):
        for B, its, calls in zip(self.batches, self.iterations_to_threshold, self.raw_calls):
            yield {"B": B, "iterations_to_threshold": its, "raw_calls": calls}


def run_batch_sweep(problem: FiniteSumProblem, cfg_template: AzoConfig, batches,
                    threshold: float = SWEEP_THRESHOLD, stop_at_threshold: bool = False,
                    jobs: int = 1) -> SweepReport:
    """One run per batch size, all with the template's seed.

    With ``stop_at_threshold`` each run ends as soon as it reaches the threshold.
    """
    batches = [int(b) for b in batches]
    if not batches:
        raise ValueError("batches must be non-empty")
    configs = []
    for B in batches:
        changes = {"schedule": cfg_template.schedule.replace(batch=B)}
        if stop_at_threshold:
            changes["stop_relative"] = threshold
        configs.append(replace(cfg_template, **changes))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trajectories = list(pool.map(lambda c: run_azo_sgd(problem, c), configs))
    else:
        trajectories = [run_azo_sgd(problem, c) for c in configs]
    return SweepReport(batches, trajectories, threshold)
