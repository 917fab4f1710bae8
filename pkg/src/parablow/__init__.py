"""Implicit time stepping with blow-up detection for a coupled quasilinear parabolic system.

The solver works with the transformed unknowns ``u = u1^{1/m}``, ``v = v1^{1/p}``
of the system ``m u^{m-1} u_t - Laplace u = alpha v``,
``p v^{p-1} v_t - Laplace v = alpha u`` with homogeneous Dirichlet data.
"""

from .config import RunConfig, load_config, make_initial, parse_config
from .diagnostics import (
    blowup_upper_bound,
    growth_envelope_check,
    j_energy,
    lemma_checks,
    phi,
    psi_n,
    theta_limit,
)
from .model import ModelParams, State, StepOptions
from .oracle import OracleConfig, newton_step_oracle, self_convergence
from .run import RunReport, StepReport, integrate
from .spatial import DomainSpec, build_operator, quadrature
from .step import constant_supersolution, max_stable_dt, monotone_step

__version__ = "0.1.0"
