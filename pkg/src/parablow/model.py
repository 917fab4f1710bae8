"""Parameters and state containers shared by the step engine and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Exponents of the transformed system ``m u^{m-1} u_t + A u = alpha v`` (and
    ``p v^{p-1} v_t + A v = alpha u``), with ``0 < p <= m < 1``."""

    m: float
    p: float
    alpha: float

    def __post_init__(self):
        m, p, a = float(self.m), float(self.p), float(self.alpha)
        if not (0.0 < p <= m < 1.0):
            raise ParameterError(f"need 0 < p <= m < 1, got m={m}, p={p}")
        if not (a >= 0.0 and np.isfinite(a)):
            raise ParameterError(f"need alpha >= 0, got {a}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def from_exponents(cls, nu, mu, alpha):
        """Build from the diffusion exponents of the original system (``u1^{nu+1}``)."""
        if nu <= 0 or mu <= 0:
            raise ParameterError(f"need nu, mu > 0, got nu={nu}, mu={mu}")
        return cls(1.0 / (nu + 1.0), 1.0 / (mu + 1.0), alpha)

    @property
    def nu(self):
        return 1.0 / self.m - 1.0

    @property
    def mu(self):
        return 1.0 / self.p - 1.0

    @property
    def symmetric(self):
        return self.m == self.p

    def with_alpha(self, alpha):
        return ModelParams(self.m, self.p, alpha)


@dataclass(frozen=True, eq=False)
class State:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    n: int = 0
    sup_u: float = field(init=False)
    sup_v: float = field(init=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        v = np.array(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError(f"u and v must be 1-d arrays of equal length, got {u.shape}, {v.shape}")
        if not (np.all(u > 0) and np.all(v > 0)):
            raise ValueError("state fields must be strictly positive at every node")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("state fields must be finite")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "sup_u", float(u.max()))
        object.__setattr__(self, "sup_v", float(v.max()))


@dataclass(frozen=True)
class StepOptions:
    tol_abs: float = 1e-10
    tol_rel: float = 1e-12
    max_iter: int = 500
    lin_tol: float = 1e-12
    sigma: float = 0.5
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    blowup_threshold: float = 1e8

    def __post_init__(self):
        for name in ("tol_abs", "tol_rel", "lin_tol", "sigma", "dt_min", "dt_max", "blowup_threshold"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if not self.sigma < 1:
            raise ParameterError("sigma must be < 1")
        if self.dt_min > self.dt_max:
            raise ParameterError("dt_min must not exceed dt_max")
