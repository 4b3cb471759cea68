"""Legendre machinery and the boundary-adapted trial basis on rho in [0, 1].

All spectral work happens on x in [-1, 1] with x = 2*rho - 1.  The trial
functions vanish at x = 1 (rho = 1) and have zero slope at x = -1 (rho = 0),
so every expansion satisfies the homogeneous boundary conditions exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

NEWTON_TOL = 1e-15
NEWTON_MAXITER = 100


class QuadratureError(RuntimeError):
    """Raised when node computation fails to converge."""


def legendre_table(nmax, x):
    """Values, first and second derivatives of L_0..L_nmax at points `x`.

    Returns three arrays of shape ``(nmax + 1,) + x.shape``.  Derivatives
    use the recurrences L'_{n+1} = L'_{n-1} + (2n+1) L_n (and the same for
    L''), which stay finite at the endpoints.
    """
    x = np.asarray(x, dtype=float)
    L = np.zeros((nmax + 1,) + x.shape)
    dL = np.zeros_like(L)
    d2L = np.zeros_like(L)
    L[0] = 1.0
    if nmax >= 1:
        L[1] = x
        dL[1] = 1.0
    for n in range(1, nmax):
        L[n + 1] = ((2 * n + 1) * x * L[n] - n * L[n - 1]) / (n + 1)
        dL[n + 1] = dL[n - 1] + (2 * n + 1) * L[n]
        d2L[n + 1] = d2L[n - 1] + (2 * n + 1) * dL[n]
    return L, dL, d2L


def legendre_eval(n: int, x: float) -> float:
    """L_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return float(legendre_table(n, x)[0][n])


def legendre_deriv(n: int, x: float) -> float:
    """L_n'(x)."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return float(legendre_table(n, x)[1][n])


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))

    def mapped(self, a, b):
        """Nodes and weights transplanted to [a, b]."""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


def _newton(x, fn, what):
    for _ in range(NEWTON_MAXITER):
        f, df = fn(x)
        dx = f / df
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOL:
            return x
    # one more look: roots can stall a hair above tol from rounding
    if np.max(np.abs(dx)) <= 1e3 * NEWTON_TOL:
        return x
    raise QuadratureError(f"{what}: Newton iteration did not converge "
                          f"(last step {np.max(np.abs(dx)):.3e})")


@lru_cache(maxsize=None)
def gauss_rule(N: int) -> QuadratureRule:
    """Legendre-Gauss rule with N+1 nodes (the zeros of L_{N+1}).

    Exact for polynomials of degree <= 2N+1.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    m = N + 1
    k = np.arange(m)
    # Chebyshev-Gauss guess, ascending
    x0 = -np.cos((2 * k + 1) * np.pi / (2 * m))

    def fn(x):
        L, dL, _ = legendre_table(m, x)
        return L[m], dL[m]

    x = _newton(x0, fn, f"gauss_rule({N})")
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry
    dL = legendre_table(m, x)[1][m]
    w = 2.0 / ((1.0 - x**2) * dL**2)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, "gauss")


@lru_cache(maxsize=None)
def lobatto_rule(N: int) -> QuadratureRule:
    """Legendre-Gauss-Lobatto rule with N+1 nodes including +-1.

    Exact for polynomials of degree <= 2N-1.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    if N > 1:
        # interior nodes are the zeros of L_N'
        def fn(y):
            _, dL, d2L = legendre_table(N, y)
            return dL[N], d2L[N]

        inner = _newton(x[1:-1].copy(), fn, f"lobatto_rule({N})")
        x[1:-1] = 0.5 * (inner - inner[::-1])
    L = legendre_table(N, x)[0][N]
    w = 2.0 / (N * (N + 1) * L**2)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, "gauss-lobatto")


def _trial_coeffs(i):
    i = np.asarray(i, dtype=float)
    return (2 * i + 3) / (i + 2) ** 2, ((i + 1) / (i + 2)) ** 2


def trial_table(N, x):
    """Values and x-derivatives (0, 1, 2) of p_0..p_N at points `x`."""
    L, dL, d2L = legendre_table(N + 2, x)
    i = np.arange(N + 1)
    b, c = _trial_coeffs(i)
    shape = (N + 1,) + (1,) * np.ndim(x)
    b = b.reshape(shape)
    c = c.reshape(shape)
    out = []
    for T in (L, dL, d2L):
        out.append(T[: N + 1] - b * T[1 : N + 2] - c * T[2 : N + 3])
    return tuple(out)


def trial_eval(i: int, x: float) -> float:
    return float(trial_table(i, x)[0][i])


def trial_deriv(i: int, x: float) -> float:
    """d p_i / dx."""
    return float(trial_table(i, x)[1][i])


def trial_second_deriv(i: int, x: float) -> float:
    return float(trial_table(i, x)[2][i])


@dataclass(frozen=True, eq=False)
class TrialBasis:
    """Trial functions p_0..p_N with cached data at the Gauss collocation nodes.

    The ``*_at_nodes`` matrices are indexed (node, function) and carry the
    rho-derivative factors, so ``lap_at_nodes @ coeffs`` is the spherical
    Laplacian of the expansion at the nodes.
    """

    N: int
    rule: QuadratureRule = field(init=False, repr=False)
    rho_nodes: np.ndarray = field(init=False, repr=False)
    values_at_nodes: np.ndarray = field(init=False, repr=False)
    drho_at_nodes: np.ndarray = field(init=False, repr=False)
    lap_at_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be >= 0")
        rule = gauss_rule(self.N)
        rho = 0.5 * (rule.nodes + 1.0)
        V, D, Lap = self.matrices(rho)
        object.__setattr__(self, "rule", rule)
        object.__setattr__(self, "rho_nodes", rho)
        object.__setattr__(self, "values_at_nodes", V)
        object.__setattr__(self, "drho_at_nodes", D)
        object.__setattr__(self, "lap_at_nodes", Lap)

    @property
    def size(self):
        return self.N + 1

    def matrices(self, rho):
        """(values, d/drho, spherical Laplacian) matrices at `rho`.

        The Laplacian rows are only meaningful for rho > 0.
        """
        rho = np.asarray(rho, dtype=float)
        P, dP, d2P = trial_table(self.N, 2.0 * rho - 1.0)
        V = P.T
        D = 2.0 * dP.T
        with np.errstate(divide="ignore", invalid="ignore"):
            Lap = 4.0 * d2P.T + (2.0 / rho)[:, None] * D
        return V, D, Lap

    def value_matrix(self, rho):
        rho = np.asarray(rho, dtype=float)
        return trial_table(self.N, 2.0 * rho - 1.0)[0].T

    def interpolate(self, values_at_nodes):
        """Coefficients of the expansion matching `values_at_nodes`."""
        return np.linalg.solve(self.values_at_nodes, values_at_nodes)


@lru_cache(maxsize=None)
def trial_basis(N: int) -> TrialBasis:
    return TrialBasis(N)


@dataclass
class SpectralField:
    """A field c(rho) = sum_j coeffs[j] p_j(2 rho - 1)."""

    coeffs: np.ndarray
    basis: TrialBasis

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} coefficients, "
                             f"got shape {self.coeffs.shape}")

    @classmethod
    def zeros(cls, basis):
        return cls(np.zeros(basis.size), basis)

    def __call__(self, rho):
        return field_eval(self, rho)


def field_eval(field: SpectralField, rho_points) -> np.ndarray:
    rho = np.asarray(rho_points, dtype=float)
    if field.coeffs.shape != (field.basis.size,):
        raise ValueError("coefficient length does not match basis")
    return field.basis.value_matrix(rho.ravel()).dot(field.coeffs).reshape(rho.shape)


def field_drho(field: SpectralField, rho_points) -> np.ndarray:
    rho = np.asarray(rho_points, dtype=float)
    _, dP, _ = trial_table(field.basis.N, 2.0 * rho.ravel() - 1.0)
    return (2.0 * dP.T.dot(field.coeffs)).reshape(rho.shape)


def spherical_laplacian_eval(field: SpectralField, rho_points) -> np.ndarray:
    """phi'' + (2/rho) phi' at interior points rho in (0, 1]."""
    rho = np.asarray(rho_points, dtype=float)
    if np.any(rho <= 0.0) or np.any(rho > 1.0):
        raise ValueError("spherical Laplacian needs 0 < rho <= 1")
    _, _, Lap = field.basis.matrices(rho.ravel())
    return Lap.dot(field.coeffs).reshape(rho.shape)
