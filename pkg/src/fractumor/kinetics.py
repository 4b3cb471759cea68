"""Rate functions of the tumor model and the assembled transfer matrix.

Everything here is vectorized: states may be scalars or equally shaped
arrays, and matrices come back with shape ``(3, 3) + state_shape``.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, fields
from typing import Callable, Optional

import numpy as np


@dataclass
class PointState:
    c: np.ndarray
    w: np.ndarray
    p: np.ndarray
    q: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class Forcing:
    """Source terms of (rho, t) added to each equation; None means zero."""

    c: Optional[Callable] = None
    w: Optional[Callable] = None
    p: Optional[Callable] = None
    q: Optional[Callable] = None
    d: Optional[Callable] = None
    v: Optional[Callable] = None

    def __call__(self, name, rho, t):
        fn = getattr(self, name)
        if fn is None:
            return np.zeros(np.shape(rho))
        return np.broadcast_to(fn(rho, t), np.shape(rho)).astype(float)

    def plus_constant(self, eps):
        """Every slot shifted by the constant `eps` (stability runs)."""
        def shifted(fn):
            if fn is None:
                return lambda rho, t: np.full(np.shape(rho), eps)
            return lambda rho, t: fn(rho, t) + eps
        return Forcing(**{f.name: shifted(getattr(self, f.name)) for f in fields(self)})


class KineticsModel:
    """Base class; subclasses supply the transfer matrix, h, and consumption."""

    name = "abstract"
    n_total = 1.0
    forcing = Forcing()

    def g_matrix(self, c, w, p, q, d):
        raise NotImplementedError

    def h(self, c, w, p, q, d):
        raise NotImplementedError

    def f(self, c, w, p, q, d):
        """Nutrient consumption, entering the c-equation as -f."""
        raise NotImplementedError

    def g(self, c, w, p, q, d):
        """Drug consumption, entering the w-equation as -g."""
        raise NotImplementedError

    def with_forcing(self, forcing):
        other = object.__new__(type(self))
        other.__dict__.update(self.__dict__)
        other.forcing = forcing
        return other

    def rhs(self, c, w, p, q, d):
        """G(state) @ (p, q, d), shape (3,) + state_shape."""
        G = self.g_matrix(c, w, p, q, d)
        x = np.stack(np.broadcast_arrays(p, q, d))
        return np.einsum("ij...,j...->i...", G, x)


def _const(value):
    return lambda x: np.full(np.shape(x), float(value))


def _as_rate(fn):
    if callable(fn):
        return fn
    return _const(fn)


class FullTemplate(KineticsModel):
    """The general proliferative/quiescent/dead model.

    Rate functions are user supplied (numbers are promoted to constants).
    K_B, K_Q, K_A, K_P, K_D, K_1, K_2 take c; G_1, G_2, K_3, K_4 take w.
    """

    name = "full-template"
    RATE_NAMES = ("K_B", "K_Q", "K_A", "K_P", "K_D", "G1", "G2", "K1", "K2", "K3", "K4")

    def __init__(self, K_R=0.0, n_total=1.0, forcing=None, **rates):
        if K_R < 0:
            raise ValueError("K_R must be nonnegative")
        if not n_total > 0:
            raise ValueError("n_total must be positive")
        unknown = set(rates) - set(self.RATE_NAMES)
        if unknown:
            raise ValueError(f"unknown rate functions: {sorted(unknown)}")
        self.K_R = float(K_R)
        self.n_total = float(n_total)
        self.rates = {k: _as_rate(rates.get(k, 0.0)) for k in self.RATE_NAMES}
        self.forcing = forcing or Forcing()

    def h(self, c, w, p, q, d):
        return (self.rates["K_B"](c) * p - self.K_R * d) / self.n_total

    def g_matrix(self, c, w, p, q, d):
        r = self.rates
        c, w, p, q, d = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (c, w, p, q, d)))
        KB, KQ, KA, KP, KD = (r[k](c) for k in ("K_B", "K_Q", "K_A", "K_P", "K_D"))
        G1, G2 = r["G1"](w), r["G2"](w)
        hh = self.h(c, w, p, q, d)
        zero = np.zeros_like(c)
        return np.array([
            [KB - KQ - KA - G1 - hh, KP, zero],
            [KQ, -(KP + KD + G2) - hh, zero],
            [KA + G1, KD + G2, -self.K_R - hh],
        ])

    def f(self, c, w, p, q, d):
        return self.rates["K1"](c) * p + self.rates["K2"](c) * q

    def g(self, c, w, p, q, d):
        return self.rates["K3"](w) * p + self.rates["K4"](w) * q


class Example1(KineticsModel):
    """The manufactured test model with polynomial kinetics.

    Its c- and w-equations carry +c/16 + 12p/88 and +3c/115 + 12p/188, so the
    registered consumption terms are the negatives of those.
    """

    name = "example-1"

    def __init__(self, forcing=None):
        self.n_total = 1.0
        self.forcing = forcing or Forcing()

    def g_matrix(self, c, w, p, q, d):
        c, w, p, q, d = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (c, w, p, q, d)))
        one, zero = np.ones_like(c), np.zeros_like(c)
        return np.array([
            [q, c / 2.0, p],
            [one, 2.0 * p, zero],
            [one, p, zero],
        ])

    def h(self, c, w, p, q, d):
        return (2.0 * np.asarray(p) - np.asarray(d)) / 2.0

    def f(self, c, w, p, q, d):
        return -(np.asarray(c) / 16.0 + 12.0 * np.asarray(p) / 88.0)

    def g(self, c, w, p, q, d):
        return -(3.0 * np.asarray(c) / 115.0 + 12.0 * np.asarray(p) / 188.0)


MODELS = {FullTemplate.name: FullTemplate, Example1.name: Example1}


def make_model(name, **params):
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return cls(**params)


def assemble_g(model: KineticsModel, s: PointState) -> np.ndarray:
    return model.g_matrix(s.c, s.w, s.p, s.q, s.d)


def h_rate(model: KineticsModel, s: PointState):
    return model.h(s.c, s.w, s.p, s.q, s.d)


def f_consumption(model: KineticsModel, s: PointState):
    return model.f(s.c, s.w, s.p, s.q, s.d)


def g_consumption(model: KineticsModel, s: PointState):
    return model.g(s.c, s.w, s.p, s.q, s.d)


# -- expression parsing for rate functions and initial profiles in config files

_FUNCS = {
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh,
    "sin": np.sin, "cos": np.cos, "abs": np.abs, "minimum": np.minimum,
    "maximum": np.maximum,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load,
            ast.Call, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def parse_expression(text: str, var: str) -> Callable:
    """Compile an arithmetic expression in one variable to a numpy callable.

    >>> parse_expression("0.5*c/(1+c)", "c")(1.0)
    0.25
    """
    tree = ast.parse(str(text).strip(), mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ValueError(f"disallowed syntax in {text!r}: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS \
                and node.id != var:
            raise ValueError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name)
                                               and node.func.id in _FUNCS):
            raise ValueError(f"disallowed call in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError(f"non-numeric constant in {text!r}")
    code = compile(tree, "<expr>", "eval")
    env = {"__builtins__": {}, **_FUNCS, **_CONSTS}

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = eval(code, env, {var: x})
        out = np.broadcast_to(np.asarray(out, dtype=float), x.shape)
        return out.copy() if out.ndim else float(out)

    fn.expression = str(text)
    return fn
