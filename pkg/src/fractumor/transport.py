"""Velocity reconstruction, characteristic back-tracing, and the leapfrog
update of the cell densities and the tumor radius."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .basis import gauss_rule


def uniform_grid(N_h):
    if N_h < 3:
        raise ValueError("transport grid needs at least 3 intervals")
    return np.linspace(0.0, 1.0, int(N_h) + 1)


@dataclass
class NodalField:
    """Values on a uniform grid over [0, 1], evaluated by a not-a-knot cubic spline."""

    grid: np.ndarray
    values: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError("values and grid differ in shape")
        self._spline = CubicSpline(self.grid, self.values, bc_type="not-a-knot")

    def __call__(self, rho):
        return self._spline(rho)


def _cell_quadrature(grid, order):
    """Composite Gauss points/weights, shape (cells, order)."""
    rule = gauss_rule(order - 1)
    a, b = grid[:-1, None], grid[1:, None]
    half = 0.5 * (b - a)
    pts = a + half * (rule.nodes[None, :] + 1.0)
    wts = half * rule.weights[None, :]
    return pts, wts


def moment_integrals(h, grid, order=3):
    """Cumulative integrals int_0^{grid_j} s^2 h(s) ds for every grid node.

    `h` is a callable or an array of values on `grid` (splined).
    """
    if not callable(h):
        h = NodalField(grid, np.asarray(h, dtype=float))
    pts, wts = _cell_quadrature(grid, order)
    cells = np.sum(wts * pts**2 * h(pts), axis=1)
    return np.concatenate([[0.0], np.cumsum(cells)])


@dataclass
class VelocityField:
    grid: np.ndarray
    v: np.ndarray
    R: float
    moment: float = 0.0    # int_0^1 rho^2 h drho
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._spline = CubicSpline(self.grid, self.v, bc_type="not-a-knot")

    @property
    def v1(self):
        return float(self.v[-1])

    def __call__(self, rho):
        return self._spline(rho)

    def nu(self, rho):
        return nu_eval(self, rho)


def velocity_from_h(h, R, grid, order=3) -> VelocityField:
    """Solve (1/rho^2) d/drho (rho^2 v / R) = h with v(0) = 0.

    v(rho) = (R / rho^2) int_0^rho s^2 h(s) ds, sampled on `grid`.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    I = moment_integrals(h, grid, order)
    if not np.all(np.isfinite(I)):
        raise FloatingPointError("non-finite growth rate in velocity reconstruction")
    v = np.zeros_like(grid)
    pos = grid > 0
    v[pos] = R * I[pos] / grid[pos] ** 2
    return VelocityField(grid, v, float(R), float(I[-1]))


def nu_eval(vf: VelocityField, rho):
    """Transport speed (v(rho) - rho v(1)) / R."""
    rho = np.asarray(rho, dtype=float)
    out = (vf(rho) - rho * vf.v1) / vf.R
    # exact at the ends: nu(0) = nu(1) = 0
    out = np.where((rho == 0.0) | (rho == 1.0), 0.0, out)
    return out if out.ndim else float(out)


def trace_back(rho, nu, t_star):
    """Feet of the characteristics through `rho`.

    Returns (foot at t_{n-1}, half-foot at t_n, number of clamped points).
    `nu` is a callable rho -> transport speed at t_n.
    """
    rho = np.asarray(rho, dtype=float)
    half = rho - t_star * nu(rho)
    hc = np.clip(half, 0.0, 1.0)
    foot = rho - 2.0 * t_star * nu(hc)
    fc = np.clip(foot, 0.0, 1.0)
    clamped = int(np.count_nonzero(hc != half) + np.count_nonzero(fc != foot))
    return fc, hc, clamped


@dataclass
class TransportResult:
    p: np.ndarray
    q: np.ndarray
    d: np.ndarray
    clamped: int
    evaluations: int


def advance_pqd(grid, now, before, c_now, w_now, model, nu, t_n, t_star, startup=False):
    """Leapfrog step of (p, q, d) along characteristics.

    `now` and `before` are (p, q, d) NodalField triples at t_n and t_{n-1};
    `c_now`, `w_now` are callables rho -> value at t_n.  With ``startup`` a
    single forward-Euler step is taken from t_0 and `before` is ignored.
    """
    if startup:
        foot = np.clip(grid - t_star * nu(grid), 0.0, 1.0)
        clamped = int(np.count_nonzero(foot != grid - t_star * nu(grid)))
        mid, base, scale = foot, now, t_star
    else:
        foot, mid, clamped = trace_back(grid, nu, t_star)
        base, scale = before, 2.0 * t_star
    pn, qn, dn = (f(mid) for f in now)
    slope = model.rhs(c_now(mid), w_now(mid), pn, qn, dn)
    out = []
    for i, (name, f) in enumerate(zip("pqd", base)):
        val = f(foot) + scale * (slope[i] + model.forcing(name, mid, t_n))
        out.append(val)
    return TransportResult(*out, clamped=clamped, evaluations=2 * grid.size)


def radius_advance(R_prev, h, t_star, grid=None, order=3, steps=2):
    """R_{n+1} = R_{n-1} exp(2 t* int_0^1 rho^2 h drho).

    ``steps=1`` gives the one-step start R_1 = R_0 exp(t* int rho^2 h_0).
    `h` may also be the precomputed integral (a number), in which case `grid`
    is not needed.
    """
    if not R_prev > 0:
        raise ValueError("R must be positive")
    if np.ndim(h) == 0 and not callable(h):
        integral = float(h)
    else:
        integral = moment_integrals(h, grid, order)[-1]
    return float(R_prev * np.exp(steps * t_star * integral))
