"""Time loop for the coupled free-boundary system.

Per step n -> n+1 the order is fixed:

1. h at t_n from the current fields (plus the velocity forcing);
2. velocity v_n and transport speed nu_n;
3. radius R_{n+1};
4. p, q, d at t_{n+1} along characteristics;
5. c, w at t_{n+1} using R_{n+1} and the extrapolated boundary velocity;
6. append the diffusion terms of c_{n+1}, w_{n+1} to the memory caches.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import SpectralField, trial_basis
from .fracmem import FractionalWeights, HistoryCache
from .kinetics import Forcing, make_model, parse_expression
from .mms import forcing_from_exact, make_exact
from .parabolic import ParabolicStepInputs, StepFailure, solve_step
from .transport import NodalField, advance_pqd, radius_advance, uniform_grid, velocity_from_h

log = logging.getLogger(__name__)

CLAMP_WARN_FRACTION = 1e-3


class ConfigError(ValueError):
    pass


@dataclass
class SolverConfig:
    alpha: float = 0.1
    T: float = 1.0
    M: int = 100
    N: int = 20
    N_h: int = 200
    D1: float = 1.0 / 12.0
    D2: float = 1.0 / 12.0
    R0: float = 0.5
    model: str = "example-1"
    mms: str = "example-1"
    K_R: float = 0.0
    n_total: float = 1.0
    K_B: str = "0"
    K_Q: str = "0"
    K_A: str = "0"
    K_P: str = "0"
    K_D: str = "0"
    G1: str = "0"
    G2: str = "0"
    K1: str = "0"
    K2: str = "0"
    K3: str = "0"
    K4: str = "0"
    p0: str = "0"
    q0: str = "0"
    d0: str = "0"
    c_bar: str = "0"
    w_bar: str = "0"
    perturbation: float = 0.0
    startup: str = "bdf1"
    quad_order: int = 3
    oracle_order: int = 40
    strict_aprime_n_zero: bool = False
    output_stride: int = 1

    @property
    def t_star(self):
        return self.T / self.M

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def validate(self):
        checks = [
            (0.0 < self.alpha < 1.0, "alpha must lie in (0, 1)"),
            (self.T > 0, "T must be positive"),
            (self.M >= 1, "M must be >= 1"),
            (self.N >= 0, "N must be >= 0"),
            (self.N_h >= 3, "N_h must be >= 3"),
            (self.D1 > 0 and self.D2 > 0, "D1 and D2 must be positive"),
            (self.R0 > 0, "R0 must be positive"),
            (self.n_total > 0, "n_total must be positive"),
            (self.K_R >= 0, "K_R must be nonnegative"),
            (self.startup in ("bdf1", "copy"), "startup must be 'bdf1' or 'copy'"),
            (self.quad_order >= 1, "quad_order must be >= 1"),
            (self.oracle_order >= 2, "oracle_order must be >= 2"),
            (self.output_stride >= 1, "output_stride must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.mms != "none" and (self.c_bar.strip() != "0" or self.w_bar.strip() != "0"):
            raise ConfigError("manufactured runs use homogeneous boundary data (c_bar = w_bar = 0)")
        return self

    def canonical(self):
        return "\n".join(f"{f.name} = {getattr(self, f.name)!r}"
                         for f in dataclasses.fields(self)) + "\n"

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _time_derivative(fn, t, h=1e-3):
    # five-point stencil; boundary data are smooth user expressions
    return (-fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)) / (12 * h)


@dataclass
class Problem:
    model: object
    p0: Callable
    q0: Callable
    d0: Callable
    c_bar: Callable = lambda t: 0.0
    w_bar: Callable = lambda t: 0.0
    dc_bar: Callable = lambda t: 0.0
    dw_bar: Callable = lambda t: 0.0
    exact: object = None


def build_problem(config: SolverConfig) -> Problem:
    config.validate()
    try:
        if config.model == "full-template":
            rates = {k: parse_expression(getattr(config, k), "w" if k in ("G1", "G2", "K3", "K4")
                                         else "c") for k in
                     ("K_B", "K_Q", "K_A", "K_P", "K_D", "G1", "G2", "K1", "K2", "K3", "K4")}
            model = make_model("full-template", K_R=config.K_R, n_total=config.n_total, **rates)
        else:
            model = make_model(config.model)
    except (ValueError, SyntaxError) as err:
        raise ConfigError(str(err)) from err

    if config.mms != "none":
        try:
            exact = make_exact(config.mms)
        except ValueError as err:
            raise ConfigError(str(err)) from err
        forcing = forcing_from_exact(exact, model, config.alpha, config.D1, config.D2,
                                     config.oracle_order)
        if config.perturbation:
            forcing = forcing.plus_constant(config.perturbation)
        return Problem(model.with_forcing(forcing),
                       p0=lambda r: exact.p(r, 0.0), q0=lambda r: exact.q(r, 0.0),
                       d0=lambda r: exact.d(r, 0.0), exact=exact)

    try:
        p0, q0, d0 = (parse_expression(getattr(config, k), "rho") for k in ("p0", "q0", "d0"))
        cb, wb = (parse_expression(getattr(config, k), "t") for k in ("c_bar", "w_bar"))
    except (ValueError, SyntaxError) as err:
        raise ConfigError(str(err)) from err
    if config.perturbation:
        model = model.with_forcing(Forcing().plus_constant(config.perturbation))
    return Problem(model, p0, q0, d0, c_bar=cb, w_bar=wb,
                   dc_bar=lambda t: _time_derivative(cb, t),
                   dw_bar=lambda t: _time_derivative(wb, t))


@dataclass
class TumorState:
    n: int
    R: float
    R_prev: float
    v1_prev: float
    c: np.ndarray
    c_prev: np.ndarray
    w: np.ndarray
    w_prev: np.ndarray
    p: np.ndarray
    q: np.ndarray
    d: np.ndarray
    p_prev: np.ndarray
    q_prev: np.ndarray
    d_prev: np.ndarray
    hist_c: HistoryCache
    hist_w: HistoryCache
    clamped: int = 0
    evaluations: int = 0
    laplacian_evals: int = 0

    ARRAYS = ("c", "c_prev", "w", "w_prev", "p", "q", "d", "p_prev", "q_prev", "d_prev")
    SCALARS = ("R", "R_prev", "v1_prev")
    COUNTERS = ("n", "clamped", "evaluations", "laplacian_evals")


@dataclass
class Snapshot:
    n: int
    t: float
    R: float
    c: np.ndarray
    w: np.ndarray
    c_bar: float
    w_bar: float
    p: np.ndarray
    q: np.ndarray
    d: np.ndarray
    v: np.ndarray


@dataclass
class RunResult:
    trajectory: list
    state: TumorState
    summary: dict = field(default_factory=dict)


class Simulation:
    """Owns the discretization objects for one configuration."""

    def __init__(self, config: SolverConfig, problem: Optional[Problem] = None):
        self.config = config.validate()
        self.problem = problem or build_problem(config)
        self.model = self.problem.model
        self.basis = trial_basis(config.N)
        self.grid = uniform_grid(config.N_h)
        self.t_star = config.t_star
        self.weights = FractionalWeights(config.alpha, self.t_star, config.M,
                                         config.strict_aprime_n_zero)
        self.max_cond = 0.0
        # per-level quantities reused by the next step and by snapshots
        self._level_cache = {}

    # -- field helpers

    def spectral(self, coeffs):
        return SpectralField(coeffs, self.basis)

    def _full(self, coeffs, lift):
        fld = self.spectral(coeffs)
        return lambda rho: fld(rho) + lift

    def initial_state(self) -> TumorState:
        pr = self.problem
        g = self.grid
        width = self.basis.size
        zeros = np.zeros(width)
        p, q, d = (np.asarray(np.broadcast_to(f(g), g.shape), dtype=float).copy()
                   for f in (pr.p0, pr.q0, pr.d0))
        R0 = float(self.config.R0)
        return TumorState(n=0, R=R0, R_prev=R0, v1_prev=0.0,
                          c=zeros.copy(), c_prev=zeros.copy(), w=zeros.copy(), w_prev=zeros.copy(),
                          p=p, q=q, d=d, p_prev=p.copy(), q_prev=q.copy(), d_prev=d.copy(),
                          hist_c=HistoryCache(width, self.config.M + 1),
                          hist_w=HistoryCache(width, self.config.M + 1))

    def _velocity(self, st, t, cf, wf, P, Q, Dd):
        model = self.model

        def H(rho):
            return model.h(cf(rho), wf(rho), P(rho), Q(rho), Dd(rho)) + model.forcing("v", rho, t)

        return H, velocity_from_h(H, st.R, self.grid, self.config.quad_order)

    def _sources(self, t, c, w, p, q, d):
        """-(consumption) + forcing at the collocation nodes, for c and w."""
        pr, model = self.problem, self.model
        rho = self.basis.rho_nodes
        V = self.basis.values_at_nodes
        cv, wv = V @ c + pr.c_bar(t), V @ w + pr.w_bar(t)
        pv, qv, dv = (NodalField(self.grid, a)(rho) for a in (p, q, d))
        sc = -model.f(cv, wv, pv, qv, dv) + model.forcing("c", rho, t) - pr.dc_bar(t)
        sw = -model.g(cv, wv, pv, qv, dv) + model.forcing("w", rho, t) - pr.dw_bar(t)
        return sc, sw

    def _level(self, st):
        """Fields, h, velocity and sources at level st.n (cached for reuse)."""
        hit = self._level_cache.get(st.n)
        if hit is not None and hit["c_ref"] is st.c and hit["p_ref"] is st.p:
            return hit
        pr, t = self.problem, st.n * self.t_star
        cf, wf = self._full(st.c, pr.c_bar(t)), self._full(st.w, pr.w_bar(t))
        now = tuple(NodalField(self.grid, a) for a in (st.p, st.q, st.d))
        H, vf = self._velocity(st, t, cf, wf, *now)
        lev = dict(t=t, cf=cf, wf=wf, now=now, H=H, vf=vf, c_ref=st.c, p_ref=st.p,
                   sources=self._sources(t, st.c, st.w, st.p, st.q, st.d))
        self._level_cache = {k: v for k, v in self._level_cache.items() if k >= st.n - 1}
        self._level_cache[st.n] = lev
        return lev

    def velocity_at(self, st):
        return self._level(st)["vf"]

    def step(self, st: TumorState) -> TumorState:
        cfg, pr, model = self.config, self.problem, self.model
        n, ts = st.n, self.t_star
        try:
            lev = self._level(st)
        except FloatingPointError as err:
            raise StepFailure(str(err), step=n) from err
        t, cf, wf, now, vf = lev["t"], lev["cf"], lev["wf"], lev["now"], lev["vf"]
        first = n == 0

        # radius
        if first:
            R_next = radius_advance(st.R, vf.moment, ts, steps=1)
        else:
            R_next = radius_advance(st.R_prev, vf.moment, ts, steps=2)

        # cell densities
        before = None if first else tuple(NodalField(self.grid, a)
                                          for a in (st.p_prev, st.q_prev, st.d_prev))
        tr = advance_pqd(self.grid, now, before, cf, wf, model, vf.nu, t, ts, startup=first)

        # nutrient and drug
        src_c, src_w = lev["sources"]
        if first:
            src_c_prev, src_w_prev, v1_prev = src_c, src_w, vf.v1
            c_prev, w_prev = st.c, st.w
        else:
            hit = self._level_cache.get(n - 1)
            if hit is not None and hit["c_ref"] is st.c_prev and hit["p_ref"] is st.p_prev:
                src_c_prev, src_w_prev = hit["sources"]
            else:
                src_c_prev, src_w_prev = self._sources((n - 1) * ts, st.c_prev, st.w_prev,
                                                       st.p_prev, st.q_prev, st.d_prev)
            v1_prev, c_prev, w_prev = st.v1_prev, st.c_prev, st.w_prev
        scheme = "bdf1" if (first and cfg.startup == "bdf1") else "bdf2"
        new = {}
        for name, D, cur, prev, s_n, s_nm1, hist in (
                ("c", cfg.D1, st.c, c_prev, src_c, src_c_prev, st.hist_c),
                ("w", cfg.D2, st.w, w_prev, src_w, src_w_prev, st.hist_w)):
            inputs = ParabolicStepInputs(
                n=n, t_star=ts, D=D, R_next=R_next, v1_n=vf.v1, v1_nm1=v1_prev,
                c_n=cur, c_nm1=prev, source_n=s_n, source_nm1=s_nm1,
                history=hist, weights=self.weights, scheme=scheme)
            try:
                fld, diag = solve_step(inputs, self.basis)
            except StepFailure as err:
                err.diagnostics.update(field=name)
                raise
            self.max_cond = max(self.max_cond, diag["cond"])
            new[name] = fld.coeffs
            hist.append(D / R_next**2 * (self.basis.lap_at_nodes @ fld.coeffs))
        laps = st.laplacian_evals + 2

        out = TumorState(
            n=n + 1, R=R_next, R_prev=st.R, v1_prev=vf.v1,
            c=new["c"], c_prev=st.c, w=new["w"], w_prev=st.w,
            p=tr.p, q=tr.q, d=tr.d, p_prev=st.p, q_prev=st.q, d_prev=st.d,
            hist_c=st.hist_c, hist_w=st.hist_w,
            clamped=st.clamped + tr.clamped, evaluations=st.evaluations + tr.evaluations,
            laplacian_evals=laps)
        bad = [k for k in ("c", "w", "p", "q", "d") if not np.all(np.isfinite(getattr(out, k)))]
        if bad or not np.isfinite(R_next) or R_next <= 0:
            raise StepFailure("non-finite state", step=n + 1, fields=bad, R=R_next)
        return out

    def snapshot(self, st, vf=None) -> Snapshot:
        t = st.n * self.t_star
        vf = vf or self.velocity_at(st)
        return Snapshot(n=st.n, t=t, R=st.R, c=st.c.copy(), w=st.w.copy(),
                        c_bar=float(self.problem.c_bar(t)), w_bar=float(self.problem.w_bar(t)),
                        p=st.p.copy(), q=st.q.copy(), d=st.d.copy(), v=vf.v.copy())

    def run(self, state: Optional[TumorState] = None, steps: Optional[int] = None,
            record: bool = True) -> RunResult:
        st = state if state is not None else self.initial_state()
        steps = self.config.M - st.n if steps is None else int(steps)
        if st.n + steps > self.config.M:
            raise ValueError(f"cannot run past M={self.config.M}")
        stride = self.config.output_stride
        traj, step_times = [], []
        wall0 = time.perf_counter()
        for _ in range(steps):
            if record and st.n % stride == 0:
                traj.append(self.snapshot(st))
            t0 = time.perf_counter()
            st = self.step(st)
            step_times.append(time.perf_counter() - t0)
        if record:
            traj.append(self.snapshot(st))
        frac = st.clamped / st.evaluations if st.evaluations else 0.0
        if frac > CLAMP_WARN_FRACTION:
            log.warning("%.3g%% of characteristic feet were clamped", 100 * frac)
        summary = dict(
            steps=st.n, t_final=st.n * self.t_star, R_final=st.R,
            clamped_fraction=frac, clamp_warning=frac > CLAMP_WARN_FRACTION,
            max_condition=self.max_cond, startup=self.config.startup,
            history_terms=st.hist_c.terms_summed + st.hist_w.terms_summed,
            wall_time=time.perf_counter() - wall0, step_times=step_times,
        )
        return RunResult(traj, st, summary)


def run_simulation(config: SolverConfig, problem: Optional[Problem] = None) -> RunResult:
    """Run `config` from t = 0 to T and return the recorded trajectory."""
    return Simulation(config, problem).run()
