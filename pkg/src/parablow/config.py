"""Plain ``key=value`` run configuration and initial-condition families."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .model import ModelParams, ParameterError, StepOptions
from .spatial import DomainSpec

FAMILIES = ("eigen", "bump", "mix", "random", "file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int
    T: float
    m: float
    p: float
    alpha: float | None = None
    alpha_over_lambda1: float | None = None
    extent: float = 1.0
    n_y: int | None = None
    extent_y: float = 1.0
    initial: str = "eigen"
    amplitude: float = 1.0
    amplitude2: float = 0.0
    initial_file: str | None = None
    dt: float | None = None
    sigma: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-12
    tol_abs: float = 1e-10
    tol_rel: float = 1e-12
    max_iter: int = 500
    blowup_threshold: float = 1e8
    decay_floor: float | None = None
    cadence: int = 0
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if (self.alpha is None) == (self.alpha_over_lambda1 is None):
            raise ConfigError("give exactly one of alpha, alpha_over_lambda1")
        if self.initial not in FAMILIES:
            raise ConfigError(f"unknown initial family {self.initial!r}; choose from {', '.join(FAMILIES)}")
        if self.initial == "file" and not self.initial_file:
            raise ConfigError("initial=file needs initial_file")
        if self.initial != "file" and not self.amplitude > 0:
            raise ConfigError("amplitude must be positive")
        if self.amplitude2 < 0:
            raise ConfigError("amplitude2 must be nonnegative")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.cadence < 0:
            raise ConfigError("cadence must be nonnegative")
        try:
            self.params_template()
            self.step_options()
            self.domain()
        except (ParameterError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def adaptive(self):
        return self.dt is None

    def domain(self):
        if self.n_y is None:
            return DomainSpec.interval(self.n, self.extent)
        return DomainSpec.rectangle(self.n, self.n_y, self.extent, self.extent_y)

    def params_template(self):
        """Exponents checked with a placeholder coupling (the real one may need ``lambda1``)."""
        return ModelParams(self.m, self.p, 0.0)

    def params(self, op):
        alpha = self.alpha if self.alpha is not None else self.alpha_over_lambda1 * op.lambda1
        return ModelParams(self.m, self.p, alpha)

    def step_options(self):
        return StepOptions(
            tol_abs=self.tol_abs,
            tol_rel=self.tol_rel,
            max_iter=self.max_iter,
            sigma=self.sigma,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            blowup_threshold=self.blowup_threshold,
        )


_INT = {"n", "n_y", "max_iter", "cadence", "seed"}
_STR = {"initial", "initial_file", "out"}
_FIELDS = {f.name for f in fields(RunConfig)}
_KEYS = (_FIELDS - {"m", "p"}) | {"m", "p", "nu", "mu"}
_REQUIRED = ("n", "T")


def _convert(key, raw):
    if key in _STR:
        return raw
    try:
        if key in _INT:
            return int(raw)
        value = float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return value


def parse_config(text):
    """Parse ``key=value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _convert(key, value)
    has_mp = "m" in raw or "p" in raw
    has_numu = "nu" in raw or "mu" in raw
    if has_mp and has_numu:
        raise ConfigError("give either m/p or nu/mu, not both")
    if has_numu:
        if "nu" not in raw or "mu" not in raw:
            raise ConfigError("missing required key: both nu and mu are needed")
        try:
            params = ModelParams.from_exponents(raw.pop("nu"), raw.pop("mu"), 0.0)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        raw["m"], raw["p"] = params.m, params.p
    for key in _REQUIRED + ("m", "p"):
        if key not in raw:
            raise ConfigError(f"missing required key: {key}")
    if "alpha" not in raw and "alpha_over_lambda1" not in raw:
        raise ConfigError("missing required key: alpha (or alpha_over_lambda1)")
    return RunConfig(**raw)


def load_config(path):
    cfg = parse_config(Path(path).read_text())
    if cfg.initial == "file" and not Path(cfg.initial_file).is_absolute():
        # relative data paths are taken relative to the config file
        cfg = replace(cfg, initial_file=str(Path(path).parent / cfg.initial_file))
    return cfg


def format_config(cfg):
    """Inverse of ``parse_config``: every non-``None`` field, one per line."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name}={value!r}" if isinstance(value, float) else f"{f.name}={value}")
    return "\n".join(lines) + "\n"


def bump(spec):
    """``prod_k 4 x_k (L_k - x_k) / L_k^2``: one at the centre, zero on the boundary."""
    axes = spec.axes()
    factors = [4.0 * x * (L - x) / L**2 for x, L in zip(axes, spec.extent)]
    if spec.dim == 1:
        return factors[0]
    return np.outer(factors[1], factors[0]).ravel()


def read_field_file(path, size):
    """Two columns ``u,v`` (optional header line); every node must be positive."""
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#", skiprows=_header_rows(path))
    if data.shape != (size, 2):
        raise ConfigError(f"{path}: expected {size} rows of u,v, got shape {data.shape}")
    u, v = data[:, 0].copy(), data[:, 1].copy()
    if np.any(u <= 0) or np.any(v <= 0):
        raise ConfigError(f"{path}: initial fields must be strictly positive at every node")
    return u, v


def _header_rows(path):
    with open(path) as fh:
        first = fh.readline().strip()
    try:
        [float(s) for s in first.split(",")]
    except ValueError:
        return 1
    return 0


def make_initial(cfg, op):
    """Initial pair ``(u0, v0)`` for the configured family."""
    if cfg.initial == "file":
        return read_field_file(cfg.initial_file, op.size)
    if cfg.initial == "eigen":
        u = cfg.amplitude * op.rho1
    elif cfg.initial == "bump":
        u = cfg.amplitude * bump(op.spec)
    elif cfg.initial == "mix":
        u = cfg.amplitude * op.rho1 + cfg.amplitude2 * bump(op.spec)
    else:
        rng = np.random.default_rng(cfg.seed)
        u = cfg.amplitude * rng.uniform(0.05, 1.0, op.size)
        return u, cfg.amplitude * rng.uniform(0.05, 1.0, op.size)
    return u, u.copy()
