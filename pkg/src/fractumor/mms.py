"""Manufactured solutions: exact fields, a Riemann-Liouville oracle, and the
forcing that makes the exact fields solve the model equations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .kinetics import Forcing, KineticsModel

_CSTEP = 1e-30


def complex_step(fn, t):
    """df/dt by the complex-step rule; `fn` must accept complex input."""
    return np.imag(fn(t + 1j * _CSTEP)) / _CSTEP


def rl_frac_deriv_oracle(u, t, alpha, quad_order=40, du=None):
    """Riemann-Liouville derivative of order `alpha` of `u` at time `t`.

    Uses u(0) t^-a / Gamma(1-a) + (1/Gamma(1-a)) int_0^t u'(s) (t-s)^-a ds with
    the integral done by Gauss-Jacobi quadrature against the kernel.  `du` is
    u'; without it u' comes from the complex step, so `u` must then accept
    complex arguments.
    """
    if quad_order < 2:
        raise ValueError("quad_order must be >= 2")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if t <= 0:
        raise ValueError("t must be positive")
    x, wts = roots_jacobi(int(quad_order), -alpha, 0.0)
    s = 0.5 * t * (1.0 + x)
    deriv = du(s) if du is not None else complex_step(u, s)
    g = math.gamma(1.0 - alpha)
    integral = (0.5 * t) ** (1.0 - alpha) * np.dot(wts, deriv)
    u0 = float(np.real(u(0.0)))
    return (u0 * t ** (-alpha) + integral) / g


@dataclass(frozen=True)
class Term:
    """tau(t) * psi(rho), with derivatives supplied explicitly.

    `tau` must accept complex t (it is differentiated by complex step).
    """

    tau: Callable
    psi: Callable
    dpsi: Callable
    d2psi: Callable


class SeparableField:
    """Sum of separable terms with value, time/space derivatives, Laplacian."""

    def __init__(self, terms: Sequence[Term]):
        self.terms = tuple(terms)

    def __call__(self, rho, t):
        return sum(tm.tau(t) * tm.psi(rho) for tm in self.terms)

    def dt(self, rho, t):
        return sum(complex_step(tm.tau, t) * tm.psi(rho) for tm in self.terms)

    def drho(self, rho, t):
        return sum(tm.tau(t) * tm.dpsi(rho) for tm in self.terms)

    def drho2(self, rho, t):
        return sum(tm.tau(t) * tm.d2psi(rho) for tm in self.terms)

    def laplacian(self, rho, t):
        rho = np.asarray(rho, dtype=float)
        return sum(tm.tau(t) * radial_laplacian(tm, rho) for tm in self.terms)


def radial_laplacian(term, rho):
    """psi'' + 2 psi'/rho, with the rho = 0 limit 3 psi''(0)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = term.d2psi(rho) + 2.0 * term.dpsi(rho) / rho
    return np.where(rho == 0.0, 3.0 * term.d2psi(rho), lap)


def _poly(*coef):
    """psi, psi', psi'' for a polynomial with ascending coefficients."""
    P = np.polynomial.Polynomial(coef)
    return P, P.deriv(1), P.deriv(2)


def _layer(eps):
    """psi(rho) = eps / (1 + eps - rho^2) - 1.

    Even in rho with psi(1) = 0 and a pole just outside rho = 1, so Legendre
    coefficients decay geometrically but slowly (steep layer near the edge).
    """
    def psi(r):
        r = np.asarray(r, dtype=float)
        return eps / (1.0 + eps - r * r) - 1.0

    def dpsi(r):
        r = np.asarray(r, dtype=float)
        return 2.0 * eps * r / (1.0 + eps - r * r) ** 2

    def d2psi(r):
        r = np.asarray(r, dtype=float)
        u = 1.0 + eps - r * r
        return 2.0 * eps / u**2 + 8.0 * eps * r * r / u**3

    return psi, dpsi, d2psi


def _term(tau, triple):
    return Term(tau, *triple)


class ExactSolution:
    """Closed-form c, w, p, q, d, v as separable fields plus R(t)."""

    def __init__(self, name, c, w, p, q, d, v, R, n_total=1.0):
        self.name = name
        self.c, self.w, self.p, self.q, self.d, self.v = c, w, p, q, d, v
        self._R = R
        self.n_total = n_total

    def R(self, t):
        return self._R(t)

    def dR(self, t):
        return complex_step(self._R, t)

    def fields_at(self, rho, t):
        return tuple(getattr(self, k)(rho, t) for k in "cwpqd")

    def nu(self, rho, t):
        return (self.v(rho, t) - rho * self.v(1.0, t)) / self.R(t)


def _example1_pqd():
    s = _poly(2.0, -4.0, 4.0)             # (2 rho - 1)^2 + 1
    bump = _poly(0.0, -4.0, 4.0)          # (2 rho - 1)^2 - 1
    one = _poly(1.0)
    p = SeparableField([_term(lambda t: -np.exp(t), s)])
    q = SeparableField([_term(lambda t: -t, bump)])
    d = SeparableField([_term(np.exp, s), _term(lambda t: t, bump),
                        _term(lambda t: 1.0 + 0 * t, one)])
    return p, q, d


def _common_motion():
    v = SeparableField([_term(lambda t: 1.0 + 0 * t, _poly(0.0, 0.0, 0.5))])
    return v, (lambda t: (t + 1.0) / 2.0)


def example1_solution():
    """Exact fields of the polynomial test problem, R(t) = (t+1)/2, v = rho^2/2."""
    c = SeparableField([_term(lambda t: 4.0 * t, _poly(1.0, 0.0, -3.0, 2.0))])
    w = SeparableField([_term(lambda t: 8.0 * t, _poly(1.0, 0.0, -1.0))])
    p, q, d = _example1_pqd()
    v, R = _common_motion()
    return ExactSolution("example-1", c, w, p, q, d, v, R)


def boundary_layer_solution(eps_c=0.01, eps_w=0.03):
    """Like example1_solution, but c and w have steep non-polynomial profiles.

    Used for the spatial study: the polynomial family lies inside the trial
    space, so it cannot show spatial convergence.
    """
    c = SeparableField([_term(lambda t: 4.0 * t, _layer(eps_c))])
    w = SeparableField([_term(lambda t: 8.0 * t, _layer(eps_w))])
    p, q, d = _example1_pqd()
    v, R = _common_motion()
    return ExactSolution("boundary-layer", c, w, p, q, d, v, R)


FAMILIES = {"example-1": example1_solution, "boundary-layer": boundary_layer_solution}


def make_exact(name) -> ExactSolution:
    try:
        return FAMILIES[name]()
    except KeyError:
        raise ValueError(f"unknown manufactured family {name!r}; "
                         f"choose from {sorted(FAMILIES)}") from None


class FractionalTerm:
    """RL derivative of (D / R(t)^2) * Laplacian(field) for a separable field.

    Each term contributes D * lap(psi)(rho) * RL[tau / R^2](t); the scalar
    RL values are memoized per time level.
    """

    def __init__(self, field: SeparableField, R, D, alpha, quad_order=40):
        self.field, self.R, self.D, self.alpha = field, R, D, alpha
        self.quad_order = quad_order
        self._memo = {}

    def _time_part(self, i, t):
        key = (i, float(t))
        if key not in self._memo:
            tau, R = self.field.terms[i].tau, self.R
            self._memo[key] = rl_frac_deriv_oracle(lambda s: tau(s) / R(s) ** 2, float(t),
                                                   self.alpha, self.quad_order)
        return self._memo[key]

    def __call__(self, rho, t):
        rho = np.asarray(rho, dtype=float)
        if float(t) == 0.0:
            return np.zeros_like(rho)
        total = np.zeros_like(rho)
        for i, tm in enumerate(self.field.terms):
            lap = radial_laplacian(tm, rho)
            total = total + self.D * lap * self._time_part(i, t)
        return total


def forcing_from_exact(exact: ExactSolution, model: KineticsModel, alpha, D1, D2,
                       quad_order=40) -> Forcing:
    """Residual forcings making `exact` solve the model equations.

    Each returned callable maps (rho, t) to (left side - right side without
    forcing) of its equation, evaluated on the exact fields.
    """
    frac_c = FractionalTerm(exact.c, exact.R, D1, alpha, quad_order)
    frac_w = FractionalTerm(exact.w, exact.R, D2, alpha, quad_order)

    def state(rho, t):
        return exact.fields_at(np.asarray(rho, dtype=float), t)

    def f_c(rho, t):
        rho = np.asarray(rho, dtype=float)
        c, w, p, q, d = state(rho, t)
        adv = exact.v(1.0, t) * rho / exact.R(t) * exact.c.drho(rho, t)
        return exact.c.dt(rho, t) - frac_c(rho, t) - adv + model.f(c, w, p, q, d)

    def f_w(rho, t):
        rho = np.asarray(rho, dtype=float)
        c, w, p, q, d = state(rho, t)
        adv = exact.v(1.0, t) * rho / exact.R(t) * exact.w.drho(rho, t)
        return exact.w.dt(rho, t) - frac_w(rho, t) - adv + model.g(c, w, p, q, d)

    def hyperbolic(idx, fld):
        def f(rho, t):
            rho = np.asarray(rho, dtype=float)
            c, w, p, q, d = state(rho, t)
            rhs = model.rhs(c, w, p, q, d)[idx]
            return fld.dt(rho, t) + exact.nu(rho, t) * fld.drho(rho, t) - rhs
        return f

    def f_v(rho, t):
        rho = np.asarray(rho, dtype=float)
        c, w, p, q, d = state(rho, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = (exact.v.drho(rho, t) + 2.0 * exact.v(rho, t) / rho) / exact.R(t)
        # rho -> 0 limit: v ~ v'(0) rho + O(rho^2) gives 3 v'(0)
        lhs = np.where(rho == 0.0, 3.0 * exact.v.drho(0.0, t) / exact.R(t), lhs)
        return lhs - model.h(c, w, p, q, d)

    return Forcing(c=f_c, w=f_w, p=hyperbolic(0, exact.p), q=hyperbolic(1, exact.q),
                   d=hyperbolic(2, exact.d), v=f_v)
