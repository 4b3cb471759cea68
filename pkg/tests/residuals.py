"""Independent residuals of the model equations on the manufactured families.

Derivatives come from sympy and the fractional term from an adaptive mpmath
integral, so nothing here shares numerics with the library (complex step,
Gauss-Jacobi).
"""
import mpmath
import numpy as np
import sympy as sp

ALPHA, D1, D2 = 0.1, 1 / 12, 1 / 12

r, t = sp.symbols("rho t", real=True)


def _symbolic_family(name):
    s = (2 * r - 1) ** 2 + 1
    bump = (2 * r - 1) ** 2 - 1
    p = -sp.exp(t) * s
    q = -t * bump
    d = sp.exp(t) * s + t * bump + 1
    if name == "example-1":
        c = 4 * t * (2 * r + 1) * (r - 1) ** 2
        w = -8 * t * (r**2 - 1)
    else:
        c = 4 * t * (sp.Rational(1, 100) / (1 + sp.Rational(1, 100) - r**2) - 1)
        w = 8 * t * (sp.Rational(3, 100) / (1 + sp.Rational(3, 100) - r**2) - 1)
    v = r**2 / 2
    R = (t + 1) / 2
    return dict(c=c, w=w, p=p, q=q, d=d, v=v, R=R)


def _rl_time_part(tau_over_R2, tt):
    """Caputo-form RL derivative of a scalar function of t via adaptive quadrature."""
    mpmath.mp.dps = 30
    g = sp.lambdify(t, tau_over_R2, "mpmath")
    dg = sp.lambdify(t, sp.diff(tau_over_R2, t), "mpmath")
    a = mpmath.mpf(ALPHA)
    integral = mpmath.quad(lambda s: dg(s) * (tt - s) ** (-a), [0, tt])
    return float((g(0) * mpmath.mpf(tt) ** (-a) + integral) / mpmath.gamma(1 - a))


def _fractional(expr, D, rho, tt):
    # expr = tau(t) psi(rho) with a single time factor
    tau = expr.subs(r, sp.Rational(1, 2)) / expr.subs(t, 1).subs(r, sp.Rational(1, 2))
    psi = sp.simplify(expr / tau)
    lap = sp.diff(psi, r, 2) + 2 * sp.diff(psi, r) / r
    R = (t + 1) / 2
    return D * float(lap.subs(r, rho)) * _rl_time_part(tau / R**2, tt)


def _residuals(model, family, forcing, rho, tt):
    f = _symbolic_family(family)
    at = {r: rho, t: tt}
    val = {k: float(f[k].subs(at)) for k in "cwpqd"}
    R, v1 = float(f["R"].subs(at)), float(f["v"].subs({r: 1, t: tt}))
    nu = (float(f["v"].subs(at)) - rho * v1) / R
    args = tuple(val[k] for k in "cwpqd")
    out = {}
    for name, D, cons in (("c", D1, model.f), ("w", D2, model.g)):
        lhs = float(sp.diff(f[name], t).subs(at)) - v1 * rho / R * float(sp.diff(f[name], r).subs(at))
        rhs = _fractional(f[name], D, rho, tt) - cons(*args) + forcing(name, rho, tt)
        out[name] = lhs - rhs
    G = model.g_matrix(*args)
    for i, name in enumerate("pqd"):
        lhs = float(sp.diff(f[name], t).subs(at)) + nu * float(sp.diff(f[name], r).subs(at))
        rhs = sum(G[i, j] * val[k] for j, k in enumerate("pqd")) + forcing(name, rho, tt)
        out[name] = lhs - rhs
    div = sp.diff(r**2 * f["v"], r) / r**2 / f["R"]
    out["v"] = float(div.subs(at)) - model.h(*args) - forcing("v", rho, tt)
    return out




def worst_residual(model, family, forcing, n_points=100, seed=11):
    rng = np.random.default_rng(seed)
    pts = rng.uniform([0.01, 0.01], [1.0, 1.0], size=(n_points, 2))
    worst = 0.0
    for rho, tt in pts:
        res = _residuals(model, family, forcing, float(rho), float(tt))
        worst = max(worst, max(abs(x) for x in res.values()))
    return worst
