"""Experiment configuration: dataclass, ``key=value`` file format and presets."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import ParameterError
from ..slr import SOLVERS

RECOVERY_METHODS = ("dt", "ct", "tpower", "qslr")
TESTING_METHODS = ("dt", "mdp", "qslr")
METHODS = ("dt", "ct", "tpower", "mdp", "qslr")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "recovery"
    n: int = 300
    d: int = 300
    k_values: tuple[int, ...] = (5, 10, 15)
    theta: float = 3.0
    trials: int = 20
    methods: tuple[str, ...] | None = None
    solver: str = "lasso_topk"
    lam: float = 0.1
    lambda_rule: str = "fixed"
    rescale: bool = False
    base_seed: int = 0
    out_path: str | None = None
    tau: float = 4.0
    ct_split: bool = True
    tpower_epsilon: float = 0.01
    workers: int = 1
    timing: bool = False
    spike_mode: str | None = None

    def __post_init__(self):
        if self.methods is None:
            default = RECOVERY_METHODS if self.kind == "recovery" else TESTING_METHODS
            object.__setattr__(self, "methods", default)
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        self.validate()

    def validate(self) -> None:
        if self.kind not in ("recovery", "testing"):
            raise ParameterError(f"kind must be 'recovery' or 'testing', got {self.kind!r}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.n < 1 or self.d < 2:
            raise ParameterError("need n >= 1 and d >= 2")
        if not self.k_values:
            raise ParameterError("k_values must not be empty")
        for k in self.k_values:
            if not 1 <= k < self.d:
                raise ParameterError(f"every k must satisfy 1 <= k < d, got k={k}")
        if self.theta < 0:
            raise ParameterError("theta must be nonnegative")
        allowed = RECOVERY_METHODS if self.kind == "recovery" else TESTING_METHODS
        if not self.methods:
            raise ParameterError("no methods configured")
        for m in self.methods:
            if m not in METHODS:
                raise ParameterError(f"unknown method {m!r}; choose from {list(METHODS)}")
            if m not in allowed:
                raise ParameterError(f"method {m!r} does not support {self.kind} experiments")
        if self.solver not in SOLVERS:
            raise ParameterError(f"unknown solver {self.solver!r}; choose from {sorted(SOLVERS)}")
        if self.lambda_rule not in ("fixed", "plugin"):
            raise ParameterError(f"unknown lambda rule {self.lambda_rule!r}")
        if self.lam < 0 or self.tau < 0:
            raise ParameterError("lambda and tau must be nonnegative")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    @property
    def spike(self) -> str:
        """Spike construction: random signs for recovery, random sphere for testing."""
        if self.spike_mode:
            return self.spike_mode
        return "random_signs" if self.kind == "recovery" else "random_sphere"

    def solver_params(self) -> dict:
        if self.solver == "lasso_topk":
            return {"lam": self.lam, "lambda_rule": self.lambda_rule}
        return {}

    def with_updates(self, **updates) -> "ExperimentConfig":
        return replace(self, **updates)


PRESETS = {
    # Full-scale support-recovery sweep; the k grid is an interpretation (see README).
    "figure1": ExperimentConfig(kind="recovery", n=625, d=625, k_values=(5, 10, 15, 20, 25),
                                theta=3.0, trials=50, methods=RECOVERY_METHODS),
    "figure1-desk": ExperimentConfig(kind="recovery", n=300, d=300, k_values=(5, 10, 15),
                                     theta=3.0, trials=20, methods=RECOVERY_METHODS),
    "figure2": ExperimentConfig(kind="testing", n=200, d=500, k_values=(30,), theta=4.0,
                                trials=100, methods=TESTING_METHODS),
    "figure2-rescaled": ExperimentConfig(kind="testing", n=200, d=500, k_values=(30,), theta=4.0,
                                         trials=100, methods=TESTING_METHODS, rescale=True),
}

# key in a config file (or CLI flag name) -> (dataclass field, parser)
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ParameterError(f"expected a boolean, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


KEYS = {
    "kind": ("kind", str),
    "n": ("n", int),
    "d": ("d", int),
    "k": ("k_values", _int_list),
    "k_values": ("k_values", _int_list),
    "theta": ("theta", float),
    "trials": ("trials", int),
    "seed": ("base_seed", int),
    "base_seed": ("base_seed", int),
    "solver": ("solver", str),
    "lambda": ("lam", float),
    "lambda_rule": ("lambda_rule", str),
    "method": ("methods", _str_list),
    "methods": ("methods", _str_list),
    "rescale": ("rescale", _bool),
    "out": ("out_path", str),
    "out_path": ("out_path", str),
    "tau": ("tau", float),
    "ct_split": ("ct_split", _bool),
    "tpower_epsilon": ("tpower_epsilon", float),
    "workers": ("workers", int),
    "timing": ("timing", _bool),
    "spike_mode": ("spike_mode", str),
}


def parse_values(raw: dict[str, str]) -> dict:
    """Convert ``key -> text`` pairs into dataclass field updates."""
    out = {}
    for key, text in raw.items():
        if key == "preset":
            continue
        if key not in KEYS:
            raise ParameterError(f"unknown configuration key {key!r}")
        name, conv = KEYS[key]
        try:
            out[name] = conv(text)
        except ValueError as exc:
            raise ParameterError(f"bad value for {key!r}: {text!r}") from exc
    return out


def read_config_file(path) -> dict[str, str]:
    """Read ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    raw = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def build_config(kind: str, file_values: dict[str, str] | None = None,
                 overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Start from defaults (or a ``preset``), apply the file, then the overrides."""
    file_values = dict(file_values or {})
    overrides = dict(overrides or {})
    preset = overrides.get("preset", file_values.get("preset"))
    if preset is not None:
        if preset not in PRESETS:
            raise ParameterError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]
        if base.kind != kind:
            raise ParameterError(f"preset {preset!r} is a {base.kind} experiment")
    else:
        base = ExperimentConfig(kind=kind)
    updates = parse_values(file_values)
    updates.update(parse_values(overrides))
    if updates.get("kind", kind) != kind:
        raise ParameterError(f"config kind {updates['kind']!r} does not match {kind!r}")
    updates["kind"] = kind
    return replace(base, **updates)
