"""Implicit collocation step for the fractional reaction-diffusion fields.

One step advances c (or w) from t_n to t_{n+1}:

    c_{n+1} - kappa * Lap(c_{n+1}) - beta * rho * dc_{n+1}/drho
        = (4/3) c_n - (1/3) c_{n-1} - sum_k (a'_k - a'_{k+1}) u_{n-k}
          + (2 t*/3) (2 S_n - S_{n-1})

with kappa = a'_0 D / R_{n+1}^2, beta = (2 t*/3)(2 v_n(1) - v_{n-1}(1)) / R_{n+1},
u_j = (D / R_j^2) Lap(c_j) and S = -(consumption) + forcing.  The equation is
enforced at the Gauss nodes.  The ``bdf1`` variant is the matching one-step
formula (c_{n+1} - c_n on the left, t* in place of 2t*/3) used to start.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .basis import SpectralField, TrialBasis
from .fracmem import FractionalWeights, HistoryCache, history_sum, history_weights

log = logging.getLogger(__name__)

COND_WARN = 1e12
RESIDUAL_TOL = 1e-10


class StepFailure(RuntimeError):
    """A parabolic solve could not be completed."""

    def __init__(self, message, **diagnostics):
        super().__init__(message + " " + ", ".join(f"{k}={v!r}" for k, v in diagnostics.items()))
        self.diagnostics = diagnostics


@dataclass
class ParabolicStepInputs:
    n: int
    t_star: float
    D: float
    R_next: float
    v1_n: float
    v1_nm1: float
    c_n: np.ndarray
    c_nm1: np.ndarray
    source_n: np.ndarray
    source_nm1: np.ndarray
    history: HistoryCache
    weights: FractionalWeights
    scheme: str = "bdf2"

    def __post_init__(self):
        if not self.R_next > 0:
            raise ValueError("R_next must be positive")
        if len(self.history) != self.n:
            raise ValueError(f"history length {len(self.history)} != step index {self.n}")
        if self.scheme not in ("bdf2", "bdf1"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def dt_eff(self):
        return 2.0 * self.t_star / 3.0 if self.scheme == "bdf2" else self.t_star

    @property
    def memory_scale(self):
        # a'_k already carries the 2t*/3 factor
        return 1.0 if self.scheme == "bdf2" else 1.5

    @property
    def kappa(self):
        return self.memory_scale * self.weights.a_prime[0] * self.D / self.R_next**2

    @property
    def beta(self):
        if self.scheme == "bdf2":
            vbar = 2.0 * self.v1_n - self.v1_nm1
        else:
            vbar = self.v1_n
        return self.dt_eff * vbar / self.R_next


def assemble_matrix(inputs: ParabolicStepInputs, basis: TrialBasis) -> np.ndarray:
    rho = basis.rho_nodes[:, None]
    return (basis.values_at_nodes
            - inputs.kappa * basis.lap_at_nodes
            - inputs.beta * rho * basis.drho_at_nodes)


def assemble_rhs(inputs: ParabolicStepInputs, basis: TrialBasis) -> np.ndarray:
    V = basis.values_at_nodes
    cn = V @ inputs.c_n
    if inputs.scheme == "bdf2":
        b = cn - (V @ inputs.c_nm1 - cn) / 3.0
        b = b + inputs.dt_eff * (2.0 * inputs.source_n - inputs.source_nm1)
    else:
        b = cn + inputs.dt_eff * inputs.source_n
    if inputs.n > 0:
        hw = history_weights(inputs.n, inputs.weights)
        b = b - inputs.memory_scale * history_sum(inputs.history, hw)
    return b


def solve_step(inputs: ParabolicStepInputs, basis: TrialBasis):
    """Coefficients of the field at t_{n+1} plus a diagnostics dict."""
    A = assemble_matrix(inputs, basis)
    b = assemble_rhs(inputs, basis)
    diag = dict(step=inputs.n, R=inputs.R_next, t_star=inputs.t_star, N=basis.N)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise StepFailure("non-finite collocation system", **diag)
    anorm = np.linalg.norm(A, 1)
    lu, piv = sla.lu_factor(A, check_finite=False)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    diag["cond"] = cond
    if rcond == 0 or np.any(np.diag(lu) == 0):
        raise StepFailure("singular collocation matrix", **diag)
    if cond > COND_WARN:
        log.warning("collocation matrix condition estimate %.3e at step %d", cond, inputs.n)
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    resid = np.max(np.abs(A @ x - b))
    scale = max(np.max(np.abs(b)), np.finfo(float).tiny)
    diag["residual"] = resid / scale if np.any(b) else resid
    if not np.all(np.isfinite(x)) or (np.any(b) and resid > RESIDUAL_TOL * scale):
        raise StepFailure("collocation residual too large", **diag)
    return SpectralField(x, basis), diag
