"""``azosgd`` command-line driver: run, sweep, theory, verify.

Exit codes: 0 success, 1 a verification report failed, 2 invalid config,
3 unwritable output.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import verification
from .acsa import Schedule, run_acsa, run_sgd
from .azo import AzoConfig, run_azo_sgd, run_batch_sweep
from .config import ConfigError, ExperimentConfig, describe_defaults, parse_config
from .oracles import BiasModel, NoiseModel
from .problem import (LeastSquaresProblem, gradient_variance_at, make_overparam_lsq,
                      per_sample_smoothness)
from .theory import budget

TRACE_HEADER = ("iteration", "f_ag_gap", "f_ag_value", "grad_estimator_evals",
                "raw_oracle_calls", "wall_ns")
SUMMARY_HEADER = ("B", "iterations_to_threshold", "raw_calls")
VERIFY_HEADER = ("quantity", "d", "tau", "delta", "empirical", "bound", "stderr", "pass")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_OUTPUT = 0, 1, 2, 3

_FLAGS = {
    "seed": "seed", "batch": "batch", "tau": "tau", "gamma": "gamma",
    "noise_kind": "noise_kind", "noise_level": "noise_level", "epsilon": "epsilon",
    "horizon": "horizon", "mode": "mode", "trace_every": "trace_every", "threads": "threads",
    "out": "output_path",
}


class OutputError(OSError):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _open_output(path) -> "object":
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def write_rows(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[key]) for key in header])


def load_problem(cfg: ExperimentConfig) -> LeastSquaresProblem:
    """Generate the configured instance, or load ``problem_file``.

    A problem file needs ``matrix`` and ``rhs``; missing derived fields are
    filled in (``f_star`` from ``f_star_hint``, ``x_star`` as the min-norm
    least-squares solution).
    """
    if cfg.problem_file is None:
        try:
            return make_overparam_lsq(cfg.dim, cfg.samples, cfg.instance_seed, cfg.consistent)
        except ValueError as exc:
            raise ConfigError("samples", str(exc)) from None
    try:
        with open(cfg.problem_file, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError("problem_file", f"cannot load {cfg.problem_file}: {exc}") from None
    if "matrix" not in doc or "rhs" not in doc:
        raise ConfigError("problem_file", "needs 'matrix' and 'rhs'")
    A = np.array(doc["matrix"], dtype=float)
    b = np.array(doc["rhs"], dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ConfigError("problem_file", "matrix and rhs shapes are incompatible")
    x_star = np.array(doc["x_star"], dtype=float) if "x_star" in doc else np.linalg.lstsq(A, b, rcond=None)[0]
    radius = doc.get("radius", 2.0 * float(np.linalg.norm(x_star)) or 1.0)
    return LeastSquaresProblem(
        matrix=A, rhs=b,
        smoothness=float(doc.get("smoothness", per_sample_smoothness(A))),
        radius=float(radius),
        f_star=float(doc.get("f_star", cfg.f_star_hint)),
        sigma_star_sq=float(doc.get("sigma_star_sq", gradient_variance_at(A, b, x_star))),
        x_star=x_star, seed=doc.get("seed"), consistent=doc.get("consistent"),
    )


def _schedule(cfg: ExperimentConfig, problem, batch: int) -> Schedule:
    try:
        return Schedule(problem.smoothness, problem.radius, batch, cfg.horizon,
                        f_star=problem.f_star, sigma_star_sq=problem.sigma_star_sq,
                        mode=cfg.mode, gamma=cfg.gamma)
    except ValueError as exc:
        raise ConfigError("gamma", str(exc)) from None


def _bias(cfg: ExperimentConfig, problem) -> BiasModel:
    direction = None
    if cfg.bias_kind == "fixed_vector":
        direction = np.ones(problem.dim)
    return BiasModel(cfg.bias_kind, cfg.bias_magnitude, direction)


def _azo_config(cfg: ExperimentConfig, problem, batch: int) -> AzoConfig:
    return AzoConfig(_schedule(cfg, problem, batch), cfg.tau,
                     NoiseModel.for_tau(cfg.noise_kind, cfg.noise_level, cfg.tau),
                     seed=cfg.seed, trace_every=cfg.trace_every, threads=cfg.threads,
                     epsilon=cfg.epsilon,
                     stop_relative=cfg.threshold if cfg.stop_at_threshold else None,
                     wall_clock=cfg.wall_clock)


def _trajectory(cfg: ExperimentConfig, problem):
    if cfg.method == "azo_sgd":
        return run_azo_sgd(problem, _azo_config(cfg, problem, cfg.batch))
    if cfg.method == "acsa":
        return run_acsa(problem, _bias(cfg, problem), _schedule(cfg, problem, cfg.batch),
                        trace_every=cfg.trace_every, seed=cfg.seed, full_batch=cfg.full_batch)
    step = cfg.sgd_step if cfg.sgd_step is not None else 1.0 / (12.0 * problem.smoothness)
    return run_sgd(problem, _bias(cfg, problem), step, cfg.batch, cfg.horizon,
                   trace_every=cfg.trace_every, seed=cfg.seed, full_batch=cfg.full_batch)


def _with_wall(cfg, rows):
    for row in rows:
        if not cfg.wall_clock:
            row["wall_ns"] = 0
        yield row


def cmd_run(cfg: ExperimentConfig) -> int:
    path = cfg.output_path or "trace.csv"
    problem = load_problem(cfg)
    with _open_output(path) as fh:
        traj = _trajectory(cfg, problem)
        write_rows(fh, TRACE_HEADER, _with_wall(cfg, traj.rows()))
    print(f"{cfg.method}: {traj.completed} iterations, final gap {traj.final_gap!r} -> {path}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    out_dir = Path(cfg.output_path or "sweep")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc.strerror}") from None
    if not os.access(out_dir, os.W_OK):
        raise OutputError(f"cannot write into {out_dir}")
    problem = load_problem(cfg)
    template = _azo_config(cfg, problem, cfg.batches[0])
    report = run_batch_sweep(problem, template, cfg.batches, cfg.threshold, cfg.stop_at_threshold,
                             jobs=cfg.threads)
    for B, traj in zip(report.batches, report.trajectories):
        with _open_output(out_dir / f"trace_B{B}.csv") as fh:
            write_rows(fh, TRACE_HEADER, _with_wall(cfg, traj.rows()))
    with _open_output(out_dir / "summary.csv") as fh:
        write_rows(fh, SUMMARY_HEADER, report.rows())
    for row in report.rows():
        print(f"B={row['B']}: iterations_to_threshold={row['iterations_to_threshold']}")
    return EXIT_OK


def cmd_theory(cfg: ExperimentConfig) -> int:
    if cfg.epsilon is None:
        raise ConfigError("epsilon", "is required for theory")
    L, R, sigma = cfg.smoothness, cfg.radius, cfg.sigma_star_sq
    if L is not None and R is not None and sigma is None:
        sigma = 0.0  # explicit constants without an instance: consistent case
    if L is None or R is None:
        problem = load_problem(cfg)
        L = problem.smoothness if L is None else L
        R = problem.radius if R is None else R
        sigma = problem.sigma_star_sq if sigma is None else sigma
        dim = problem.dim
    else:
        dim = cfg.dim
    result = budget(cfg.epsilon, L, R, dim, sigma).to_dict()
    text = json.dumps(result, indent=2)
    if cfg.output_path:
        with _open_output(cfg.output_path) as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig) -> int:
    path = cfg.output_path or "verify.csv"
    noise_kind = "coordinate_oscillation" if cfg.noise_kind == "zero" else cfg.noise_kind
    with _open_output(path) as fh:
        reports = verification.run_bias_grid(cfg.mc_samples, cfg.seed, noise_kind)
        reports += verification.run_second_moment_grid(cfg.mc_samples, cfg.seed, noise_kind)
        rows = [r.row() for r in reports]
        app = verification.check_auxiliary_inequalities(cfg.seed)
        rows.append({"quantity": "squared_norm_sum", "d": 32, "tau": 0.0, "delta": 0.0,
                     "empirical": -min(app.worst_slack_pair, app.worst_slack_triple),
                     "bound": 1e-12, "stderr": 0.0,
                     "pass": min(app.worst_slack_pair, app.worst_slack_triple) >= -1e-12})
        rows.append({"quantity": "poincare", "d": 32, "tau": 1e-2, "delta": 0.0,
                     "empirical": app.poincare_lhs, "bound": app.poincare_rhs,
                     "stderr": app.poincare_stderr,
                     "pass": app.poincare_lhs - app.poincare_rhs <= 4 * app.poincare_stderr})
        write_rows(fh, VERIFY_HEADER, rows)
    failed = sum(not row["pass"] for row in rows)
    print(f"{len(rows) - failed}/{len(rows)} verification reports passed -> {path}")
    return EXIT_FAILED if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "theory": cmd_theory, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="azosgd",
        description="Zero-order accelerated SGD experiments.",
        epilog="config keys and defaults:\n" + describe_defaults(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, epilog="config keys and defaults:\n" + describe_defaults(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--out", help="output file (output directory for sweep)")
        p.add_argument("--seed", help="stream seed; also the instance seed unless problem_seed is set")
        p.add_argument("--batch", help="batch size; for sweep a comma list of sizes")
        p.add_argument("--tau", help="smoothing step")
        p.add_argument("--gamma", help="base step size")
        p.add_argument("--noise-kind", dest="noise_kind", help="zero, constant_sign, "
                       "coordinate_oscillation or machine_epsilon")
        p.add_argument("--noise-level", dest="noise_level", help="noise bound Delta")
        p.add_argument("--epsilon", help="target accuracy")
        p.add_argument("--horizon", help="iteration count N")
        p.add_argument("--mode", help="paper_schedule or fixed_gamma")
        p.add_argument("--trace-every", dest="trace_every", help="trace stride")
        p.add_argument("--threads", help="worker threads")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key")
    return parser


def _overrides(args) -> dict[str, str]:
    pairs = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(item, "--set expects KEY=VALUE")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value
    for flag, key in _FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            pairs[key] = value
    if args.command == "sweep" and "batch" in pairs:
        pairs["batches"] = pairs.pop("batch")
    return pairs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
