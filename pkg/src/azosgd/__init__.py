"""Accelerated zero-order SGD under bounded adversarial noise.

The compiled kernels are used when available; ``azosgd.BACKEND`` names the
active implementation (``"cython"`` or ``"python"``).
"""
from ._backend import name as BACKEND
from .acsa import (DivergenceError, OptimizerState, Schedule, Trajectory, acsa_step,
                   default_trace_every, project_ball, run_acsa, run_sgd, schedule_at)
from .azo import AzoConfig, NoiseAboveFrontier, SweepReport, run_azo_sgd, run_batch_sweep
from .estimator import EstimatorParams, batched_estimate, estimate_coefficients, two_point_estimate
from .oracles import BiasModel, NoiseModel, batched_biased_grad, biased_grad, zero_order_eval
from .problem import (FiniteSumProblem, LeastSquaresProblem, LinearSurrogate, ZeroFunction,
                      make_overparam_lsq)
from .sphere import DirectionStream, IndexStream
from .theory import (TheoryBudget, batch_size, budget, iterations, max_noise, smoothing,
                     convergence_bound, theorem1_bound, total_calls)
from .verification import (McReport, check_appendix_a, check_auxiliary_inequalities, mc_bias,
                           mc_second_moment)

__version__ = "0.1.0"
