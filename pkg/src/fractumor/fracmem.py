"""L1 memory weights for the time-fractional diffusion term and its history sum."""
from __future__ import annotations

import math

import numpy as np


def _power_increment(k, beta):
    """(k+1)**beta - k**beta, evaluated without cancellation for large k."""
    k = np.asarray(k, dtype=float)
    out = np.ones_like(k)  # k == 0
    pos = k > 0
    kp = k[pos]
    out[pos] = kp**beta * np.expm1(beta * np.log1p(1.0 / kp))
    return out


def a_coeff(k, t_star, alpha):
    """Raw L1 weight a_k = ((k+1)^(1-a) - k^(1-a)) / (t*^a Gamma(2-a))."""
    _check(t_star, alpha)
    val = _power_increment(k, 1.0 - alpha) / (t_star**alpha * math.gamma(2.0 - alpha))
    return val if np.ndim(k) else float(val)


def a_prime_coeff(k, t_star, alpha):
    """Scheme-scaled weight a'_k = (2 t*/3) a_k."""
    _check(t_star, alpha)
    val = (2.0 * t_star ** (1.0 - alpha) * _power_increment(k, 1.0 - alpha)
           / (3.0 * math.gamma(2.0 - alpha)))
    return val if np.ndim(k) else float(val)


def _check(t_star, alpha):
    if not t_star > 0:
        raise ValueError("t_star must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


class FractionalWeights:
    """Precomputed a_k and a'_k for k = 0..M.

    With ``strict_aprime_n_zero`` the oldest difference of a length-n history
    uses a'_n = 0 instead of the formula value.
    """

    def __init__(self, alpha, t_star, M, strict_aprime_n_zero=False):
        _check(t_star, alpha)
        self.alpha = float(alpha)
        self.t_star = float(t_star)
        self.M = int(M)
        self.strict_aprime_n_zero = bool(strict_aprime_n_zero)
        k = np.arange(self.M + 1)
        self.a = a_coeff(k, t_star, alpha)
        self.a_prime = a_prime_coeff(k, t_star, alpha)
        for arr in (self.a, self.a_prime):
            arr.setflags(write=False)

    def history_weights(self, n):
        return history_weights(n, self)


def history_weights(n: int, weights: FractionalWeights) -> np.ndarray:
    """Differences a'_k - a'_{k+1} for k = 0..n-1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ap = weights.a_prime
    if n >= ap.size:
        ap = a_prime_coeff(np.arange(n + 1), weights.t_star, weights.alpha)
    out = ap[:n] - ap[1 : n + 1]
    if weights.strict_aprime_n_zero:
        out[-1] = ap[n - 1]
    return out


class HistoryCache:
    """Append-only store of diffusion-term vectors at the collocation nodes.

    Entry j holds (D / R_{j+1}^2) * Laplacian(c_{j+1}) for completed step j+1.
    """

    def __init__(self, width, capacity=16):
        self.width = int(width)
        self._data = np.empty((max(int(capacity), 1), self.width))
        self._len = 0
        self.terms_summed = 0

    def __len__(self):
        return self._len

    def append(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.width,):
            raise ValueError(f"expected vector of length {self.width}")
        if self._len == self._data.shape[0]:
            grown = np.empty((2 * self._data.shape[0], self.width))
            grown[: self._len] = self._data[: self._len]
            self._data = grown
        self._data[self._len] = vec
        self._len += 1

    @property
    def entries(self):
        """Read-only view, oldest first."""
        view = self._data[: self._len]
        view.flags.writeable = False
        return view

    @classmethod
    def from_array(cls, arr, width):
        arr = np.asarray(arr, dtype=float).reshape(-1, width)
        cache = cls(width, capacity=max(len(arr), 16))
        cache._data[: len(arr)] = arr
        cache._len = len(arr)
        return cache


def history_sum(cache: HistoryCache, weights) -> np.ndarray:
    """sum_k weights[k] * entry(step n-k), accumulated with Kahan compensation.

    Weight index k pairs with the newest entry when k = 0.
    """
    weights = np.asarray(weights, dtype=float)
    n = len(cache)
    if weights.shape != (n,):
        raise ValueError(f"{weights.size} weights for a history of length {n}")
    total = np.zeros(cache.width)
    if n == 0:
        return total
    data = cache.entries
    comp = np.zeros(cache.width)
    for k in range(n):
        y = weights[k] * data[n - 1 - k] - comp
        t = total + y
        comp = (t - total) - y
        total = t
    cache.terms_summed += n
    return total
