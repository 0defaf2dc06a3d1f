"""Flat ``key = value`` experiment configs with typed, validated fields."""
from __future__ import annotations

from dataclasses import dataclass, fields

from ._backend import NOISE_CODES
from .acsa import MODES

METHODS = ("azo_sgd", "acsa", "sgd_baseline")
BIAS_KINDS = ("zero", "fixed_vector", "radial")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    # problem
    dim: int = 256
    samples: int = 128
    problem_seed: int | None = None
    consistent: bool = True
    problem_file: str | None = None
    f_star_hint: float = 0.0
    # method
    method: str = "azo_sgd"
    mode: str = "paper_schedule"
    gamma: float | None = None
    tau: float = 1e-3
    batch: int = 16
    batches: tuple = (8, 16, 64)
    horizon: int = 1000
    full_batch: bool = False
    sgd_step: float | None = None
    bias_kind: str = "zero"
    bias_magnitude: float = 0.0
    noise_kind: str = "zero"
    noise_level: float | None = None
    # run control
    seed: int = 0
    trace_every: int | None = None
    threads: int = 1
    threshold: float = 1e-3
    stop_at_threshold: bool = False
    wall_clock: bool = False
    output_path: str | None = None
    # theory
    epsilon: float | None = None
    smoothness: float | None = None
    radius: float | None = None
    sigma_star_sq: float | None = None
    # verification
    mc_samples: int = 10_000

    def validate(self) -> "ExperimentConfig":
        checks = [
            ("dim", self.dim >= 1, "must be >= 1"),
            ("samples", self.samples >= 1, "must be >= 1"),
            ("method", self.method in METHODS, f"must be one of {', '.join(METHODS)}"),
            ("mode", self.mode in MODES, f"must be one of {', '.join(MODES)}"),
            ("gamma", self.gamma is None or self.gamma > 0, "must be > 0"),
            ("gamma", self.mode != "fixed_gamma" or self.gamma is not None,
             "is required in fixed_gamma mode"),
            ("tau", self.tau > 0, "must be > 0"),
            ("batch", self.batch >= 1, "batch must be >= 1"),
            ("batches", len(self.batches) > 0 and all(b >= 1 for b in self.batches),
             "every batch must be >= 1"),
            ("horizon", self.horizon >= 0, "must be >= 0"),
            ("sgd_step", self.sgd_step is None or self.sgd_step > 0, "must be > 0"),
            ("bias_kind", self.bias_kind in BIAS_KINDS, f"must be one of {', '.join(BIAS_KINDS)}"),
            ("bias_magnitude", self.bias_magnitude >= 0, "must be >= 0"),
            ("noise_kind", self.noise_kind in NOISE_CODES,
             f"must be one of {', '.join(NOISE_CODES)}"),
            ("noise_level", self.noise_level is None or self.noise_level >= 0, "must be >= 0"),
            ("seed", self.seed >= 0, "must be >= 0"),
            ("problem_seed", self.problem_seed is None or self.problem_seed >= 0, "must be >= 0"),
            ("trace_every", self.trace_every is None or self.trace_every >= 1, "must be >= 1"),
            ("threads", self.threads >= 1, "must be >= 1"),
            ("threshold", 0 < self.threshold < 1, "must lie in (0, 1)"),
            ("epsilon", self.epsilon is None or self.epsilon > 0, "must be > 0"),
            ("smoothness", self.smoothness is None or self.smoothness > 0, "must be > 0"),
            ("radius", self.radius is None or self.radius > 0, "must be > 0"),
            ("sigma_star_sq", self.sigma_star_sq is None or self.sigma_star_sq >= 0, "must be >= 0"),
            ("mc_samples", self.mc_samples >= 10_000, "must be >= 10000"),
        ]
        for key, ok, message in checks:
            if not ok:
                raise ConfigError(key, message)
        return self

    @property
    def instance_seed(self) -> int:
        return self.seed if self.problem_seed is None else self.problem_seed


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
KEYS = tuple(_TYPES)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(key: str, text: str):
    kind = _TYPES[key]
    text = text.strip()
    optional = "None" in kind
    if optional and text.lower() in ("", "none"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        if kind.startswith("bool"):
            return _parse_bool(text)
        if kind == "tuple":
            return tuple(int(part) for part in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {text!r} ({exc})") from None
    return text


def parse_pairs(pairs: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig() if base is None else base
    for key, text in pairs.items():
        if key not in _TYPES:
            raise ConfigError(key, "unknown key")
        setattr(cfg, key, _convert(key, text))
    return cfg


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    pairs: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            pairs[key] = value
    return pairs


def parse_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """File values first, then ``overrides``; the result is validated."""
    pairs = {} if path is None else read_config_file(path)
    pairs.update(overrides or {})
    return parse_pairs(pairs).validate()


def describe_defaults() -> str:
    default = ExperimentConfig()
    return "\n".join(f"  {key} = {getattr(default, key)}" for key in KEYS)
