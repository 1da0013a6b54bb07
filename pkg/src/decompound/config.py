"""Run configuration files.

A configuration is a plain text file of ``key = value`` lines. Blank lines
and text after ``#`` are ignored; lists are comma separated. Relative paths
are resolved against the directory holding the file. Example::

    mode = simulate
    seed = 20170101
    psi = 0.8, 0.2
    mu = 2, -1
    tau = 1
    n = 5000
    delta = 1
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .model import ModelParams
from .sampler import Hyperparameters, InitPolicy

__all__ = ["ConfigError", "Mode", "RunConfig", "parse_config", "parse_config_text"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line or key."""


class Mode(enum.Enum):
    SIMULATE = "simulate"
    FIT = "fit"
    DIAGNOSE = "diagnose"
    DISTANCE = "distance"
    CONTRACT = "contract"


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


_PARSERS = {
    "mode": lambda s: Mode(s.strip()),
    "seed": _seed,
    "J": int,
    "psi": _floats,
    "mu": _floats,
    "tau": float,
    "psi0": _floats,
    "mu0": _floats,
    "tau0": float,
    "n": int,
    "delta": float,
    "alpha0": float,
    "beta0": float,
    "alpha1": float,
    "beta1": float,
    "kappa": float,
    "xi": _floats,
    "n_iter": int,
    "burn_in": int,
    "thin": int,
    "init_policy": lambda s: InitPolicy(s.strip()),
    "init_params": lambda s: {"default": "default", "truth": "truth"}[s.strip()],
    "data": str,
    "data_format": lambda s: {"path_csv": "path_csv", "increment_csv": "increment_csv"}[s.strip()],
    "zero_threshold": float,
    "trace": str,
    "max_lag": int,
    "grid_min": float,
    "grid_max": float,
    "grid_points": int,
    "predictive": _bool,
    "relabel": _bool,
    "distance_kind": lambda s: s.strip().lower(),
    "contract_n": _ints,
    "contract_delta": float,
    "replications": int,
    "radius_multiplier": float,
    "contract_fitter": lambda s: {"mcmc": "mcmc", "known_counts": "known_counts"}[s.strip()],
    "workers": int,
}

_PATH_KEYS = ("data", "trace")


@dataclass
class RunConfig:
    """Validated settings for one run; defaults documented per field."""

    mode: Mode
    seed: int | None = None
    J: int | None = None
    # model for simulation / truth for comparisons
    psi: tuple[float, ...] | None = None
    mu: tuple[float, ...] | None = None
    tau: float | None = None
    # reference model for `distance`
    psi0: tuple[float, ...] | None = None
    mu0: tuple[float, ...] | None = None
    tau0: float | None = None
    n: int | None = None
    delta: float = 1.0
    alpha0: float = 1.0
    beta0: float = 1.0
    alpha1: float = 1.0
    beta1: float = 1.0
    kappa: float = 1.0
    xi: tuple[float, ...] | None = None
    n_iter: int = 15000
    burn_in: int = 5000
    thin: int = 5
    init_policy: InitPolicy = InitPolicy.PRIOR_CONDITIONED
    init_params: str = "default"
    data: Path | None = None
    data_format: str = "increment_csv"
    zero_threshold: float = 0.0
    trace: Path | None = None
    max_lag: int = 50
    grid_min: float | None = None
    grid_max: float | None = None
    grid_points: int = 401
    predictive: bool = False
    relabel: bool = True
    distance_kind: str = "all"
    contract_n: tuple[int, ...] = (500, 2000, 8000)
    contract_delta: float | None = None
    replications: int = 10
    radius_multiplier: float = 1.0
    contract_fitter: str = "mcmc"
    workers: int = 1
    source: Path | None = field(default=None, repr=False)

    @property
    def n_components(self) -> int | None:
        for cand in (self.J, self.psi and len(self.psi), self.xi and len(self.xi)):
            if cand:
                return int(cand)
        return None

    def truth(self) -> ModelParams | None:
        if self.psi is None or self.mu is None or self.tau is None:
            return None
        return ModelParams(self.psi, self.mu, self.tau)

    def reference(self) -> ModelParams | None:
        if self.psi0 is None or self.mu0 is None or self.tau0 is None:
            return None
        return ModelParams(self.psi0, self.mu0, self.tau0)

    def hyperparameters(self) -> Hyperparameters:
        J = self.n_components
        xi = np.zeros(J) if self.xi is None else np.asarray(self.xi)
        return Hyperparameters(xi, self.alpha0, self.beta0, self.alpha1, self.beta1, self.kappa)

    def validate(self) -> "RunConfig":
        mode = self.mode
        required = {
            Mode.SIMULATE: ("seed", "psi", "mu", "tau", "n"),
            Mode.FIT: ("seed", "data"),
            Mode.DIAGNOSE: ("trace",),
            Mode.DISTANCE: ("psi", "mu", "tau", "psi0", "mu0", "tau0"),
            Mode.CONTRACT: ("seed", "psi", "mu", "tau"),
        }[mode]
        for key in required:
            if getattr(self, key) is None:
                raise ConfigError(f"missing required key {key!r} for mode {mode.value!r}")
        for a, b in (("psi", "mu"), ("psi0", "mu0")):
            va, vb = getattr(self, a), getattr(self, b)
            if va is not None and vb is not None and len(va) != len(vb):
                raise ConfigError(f"keys {a!r} and {b!r} must have equal length")
        J = self.n_components
        if mode in (Mode.FIT, Mode.CONTRACT, Mode.SIMULATE) and J is None:
            raise ConfigError("cannot determine the number of components: set 'J', 'psi' or 'xi'")
        for key in ("psi", "xi"):
            v = getattr(self, key)
            if v is not None and J is not None and len(v) != J:
                raise ConfigError(f"key {key!r} has length {len(v)}, expected J={J}")
        for key in ("n_iter", "thin", "replications", "grid_points", "workers"):
            if getattr(self, key) < 1:
                raise ConfigError(f"key {key!r} must be >= 1")
        if self.burn_in < 0 or (mode is Mode.FIT and self.burn_in >= self.n_iter):
            raise ConfigError("key 'burn_in' must be >= 0 and smaller than n_iter")
        if self.n is not None and self.n < 1:
            raise ConfigError("key 'n' must be >= 1")
        if not self.delta > 0:
            raise ConfigError("key 'delta' must be positive")
        try:
            self.truth()
            self.reference()
            if J is not None:
                self.hyperparameters()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.init_params == "truth" and self.truth() is None:
            raise ConfigError("init_params = truth needs 'psi', 'mu' and 'tau'")
        return self


def parse_config_text(text: str, base_dir: Path | None = None, overrides: dict | None = None, source: str = "<config>") -> RunConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from exc
    for key, value in (overrides or {}).items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown override key {key!r}")
        if value is not None:
            values[key] = Mode(value) if key == "mode" and not isinstance(value, Mode) else value
    for key in _PATH_KEYS:
        if key in values and values[key] is not None:
            p = Path(values[key])
            values[key] = p if p.is_absolute() or base_dir is None else base_dir / p
    if "mode" not in values:
        raise ConfigError(f"{source}: missing required key 'mode'")
    known = {f.name for f in fields(RunConfig)}
    cfg = RunConfig(**{k: v for k, v in values.items() if k in known})
    cfg.source = Path(source) if source != "<config>" else None
    return cfg.validate()


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a configuration file.

    ``overrides`` (e.g. the subcommand's mode or ``--seed``) take precedence
    over values in the file and are applied before validation.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    return parse_config_text(text, path.parent, overrides, str(path))
