"""Error measurement, convergence studies, the perturbation experiment, and
the table reproduction suite."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import gauss_rule, trial_basis
from .driver import SolverConfig, run_simulation
from .mms import ExactSolution, make_exact
from .transport import NodalField, uniform_grid

FIELDS = ("c", "w", "p", "q", "d")
ERROR_GRID = np.linspace(0.0, 1.0, 1001)


def _l2_rule(cells=100, order=8):
    rule = gauss_rule(order - 1)
    edges = np.linspace(0.0, 1.0, cells + 1)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (rule.nodes + 1.0)).ravel(), (half * rule.weights).ravel()


L2_POINTS, L2_WEIGHTS = _l2_rule()


def l2_norm(values):
    """Unweighted L2 norm on [0, 1] of values sampled at L2_POINTS."""
    return float(np.sqrt(np.dot(L2_WEIGHTS, np.asarray(values) ** 2)))


class _Sampler:
    """Evaluates one recorded snapshot (or the exact solution) at given points."""

    @staticmethod
    def for_snapshot(snap, rho):
        B = trial_basis(snap.c.size - 1)
        V, Dr, _ = B.matrices(rho)
        grid = uniform_grid(snap.p.size - 1)
        vals = {"c": V @ snap.c + snap.c_bar, "w": V @ snap.w + snap.w_bar}
        for k in ("p", "q", "d"):
            vals[k] = NodalField(grid, getattr(snap, k))(rho)
        grads = {"c": Dr @ snap.c, "w": Dr @ snap.w}
        return vals, grads, snap.R

    @staticmethod
    def for_exact(exact: ExactSolution, rho, t):
        vals = dict(zip(FIELDS, exact.fields_at(rho, t)))
        vals = {k: np.broadcast_to(v, rho.shape) for k, v in vals.items()}
        grads = {"c": exact.c.drho(rho, t), "w": exact.w.drho(rho, t)}
        return vals, grads, exact.R(t)


@dataclass
class ErrorReport:
    max_error: dict
    l2_final: dict
    grad_l2_final: dict
    grid_points: int = ERROR_GRID.size
    times: int = 0
    reference: str = "exact"

    def row(self, fields=FIELDS):
        return [self.max_error[k] for k in fields]


def _reference_at(reference, i, snap, rho):
    if isinstance(reference, ExactSolution):
        return _Sampler.for_exact(reference, rho, snap.t)
    ref = reference[i]
    if abs(ref.t - snap.t) > 1e-12 * max(1.0, abs(snap.t)):
        raise ValueError("reference trajectory is recorded at different times")
    return _Sampler.for_snapshot(ref, rho)


def error_norms(trajectory, reference) -> ErrorReport:
    """Errors of `trajectory` against an ExactSolution or a reference trajectory.

    The max error is taken over a 1001-point uniform rho grid and every
    recorded time; L2 and gradient-L2 errors are taken at the final time.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    if not isinstance(reference, ExactSolution) and len(reference) != len(trajectory):
        raise ValueError("reference trajectory has a different length")
    max_err = dict.fromkeys(FIELDS + ("R",), 0.0)
    for i, snap in enumerate(trajectory):
        vals, _, R = _Sampler.for_snapshot(snap, ERROR_GRID)
        ref, _, Rref = _reference_at(reference, i, snap, ERROR_GRID)
        for k in FIELDS:
            max_err[k] = max(max_err[k], float(np.max(np.abs(vals[k] - ref[k]))))
        max_err["R"] = max(max_err["R"], abs(R - Rref))
    last = len(trajectory) - 1
    vals, grads, _ = _Sampler.for_snapshot(trajectory[last], L2_POINTS)
    ref, rgrads, _ = _reference_at(reference, last, trajectory[last], L2_POINTS)
    return ErrorReport(
        max_error=max_err,
        l2_final={k: l2_norm(vals[k] - ref[k]) for k in FIELDS},
        grad_l2_final={k: l2_norm(grads[k] - rgrads[k]) for k in ("c", "w")},
        times=len(trajectory),
        reference="exact" if isinstance(reference, ExactSolution) else "trajectory",
    )


def convergence_order(e1, e2, n1, n2):
    """Observed order from errors e1, e2 at resolutions n1, n2.

    p = ln(e2 / e1) / ln(n1 / n2).
    """
    if not (e1 > 0 and e2 > 0):
        raise ValueError("errors must be positive")
    if not (n1 > 0 and n2 > 0) or n1 == n2:
        raise ValueError("resolutions must be positive and distinct")
    return math.log(e2 / e1) / math.log(n1 / n2)


# -- studies


def _run_errors(config: SolverConfig):
    result = run_simulation(config)
    return error_norms(result.trajectory, make_exact(config.mms)), result.summary["wall_time"]


def _run_trajectory(config: SolverConfig):
    return run_simulation(config).trajectory


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass
class StudyResult:
    vary: str
    levels: list
    errors: dict                 # field -> list of max errors per level
    orders: dict                 # field -> list of orders per consecutive pair
    reference: str
    alpha: float
    wall_times: list = field(default_factory=list)

    @property
    def reference_order(self):
        return 2.0 - self.alpha / 2.0

    def write_errors(self, path, fields=FIELDS):
        prefix = "M" if self.vary == "time" else "N"
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["field"] + [f"{prefix}={n}" for n in self.levels])
            for k in fields:
                out.writerow([k] + [f"{e:.6e}" for e in self.errors[k]])

    def write_orders(self, path, fields=FIELDS):
        prefix = "M" if self.vary == "time" else "N"
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["levels"] + list(fields) + ["2-alpha/2"])
            for i in range(len(self.levels) - 1):
                pair = f"{prefix}={self.levels[i]},{self.levels[i + 1]}"
                out.writerow([pair] + [f"{self.orders[k][i]:.4f}" for k in fields]
                             + [f"{self.reference_order:.4f}"])


def run_convergence_study(base: SolverConfig, vary: str, levels: Sequence[int],
                          reference: str | None = None, reference_level: int | None = None,
                          workers: int = 1, out_dir=None) -> StudyResult:
    """Run `base` at each level of M (``vary="time"``) or N (``vary="space"``).

    Time studies measure against the exact manufactured solution.  Space
    studies default to a reference run at ``reference_level`` (twice the
    finest N) with the same M, which isolates the spatial error from the
    time-stepping error; pass ``reference="exact"`` to compare with the
    exact fields instead.
    """
    if vary not in ("time", "space"):
        raise ValueError("vary must be 'time' or 'space'")
    levels = [int(n) for n in levels]
    if not levels or any(n < 1 for n in levels):
        raise ValueError("levels must be positive integers")
    if base.mms == "none":
        raise ValueError("convergence studies need a manufactured family (mms)")
    key = "M" if vary == "time" else "N"
    reference = reference or ("exact" if vary == "time" else "trajectory")
    configs = [base.replace(**{key: n}) for n in levels]

    if reference == "exact":
        out = _map(_run_errors, configs, workers)
        reports, walls = [r for r, _ in out], [w for _, w in out]
    elif reference == "trajectory":
        if vary != "space":
            raise ValueError("trajectory references apply to space studies only")
        ref_n = reference_level or 2 * max(levels)
        trajs = _map(_run_trajectory, [base.replace(N=ref_n)] + configs, workers)
        reports = [error_norms(t, trajs[0]) for t in trajs[1:]]
        walls = []
        reference = f"N={ref_n}"
    else:
        raise ValueError("reference must be 'exact' or 'trajectory'")

    errors = {k: [r.max_error[k] for r in reports] for k in FIELDS + ("R",)}
    orders = {k: [convergence_order(errors[k][i], errors[k][i + 1], levels[i], levels[i + 1])
                  if errors[k][i] > 0 and errors[k][i + 1] > 0 else float("nan")
                  for i in range(len(levels) - 1)]
              for k in errors}
    result = StudyResult(vary, levels, errors, orders, reference, base.alpha, walls)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.write_errors(out_dir / f"{vary}_errors.csv")
        if len(levels) > 1:
            result.write_orders(out_dir / f"{vary}_orders.csv")
    return result


# -- perturbation experiment


@dataclass
class DeviationReport:
    epsilon: float
    pqd: float          # max |delta p|, |delta q|, |delta d| over grid and time
    R: float            # max |delta R| over time
    grad_cw: float      # max over time of the L2 norm of the rho-gradient deviation of c, w
    per_field: dict

    @property
    def deviation(self):
        return max(self.pqd, self.R, self.grad_cw)


def trajectory_deviation(a, b, epsilon=0.0) -> DeviationReport:
    per = dict.fromkeys(FIELDS + ("R", "grad_c", "grad_w"), 0.0)
    for sa, sb in zip(a, b):
        va, _, Ra = _Sampler.for_snapshot(sa, ERROR_GRID)
        vb, _, Rb = _Sampler.for_snapshot(sb, ERROR_GRID)
        for k in FIELDS:
            per[k] = max(per[k], float(np.max(np.abs(va[k] - vb[k]))))
        per["R"] = max(per["R"], abs(Ra - Rb))
        _, ga, _ = _Sampler.for_snapshot(sa, L2_POINTS)
        _, gb, _ = _Sampler.for_snapshot(sb, L2_POINTS)
        for k in ("c", "w"):
            per[f"grad_{k}"] = max(per[f"grad_{k}"], l2_norm(ga[k] - gb[k]))
    return DeviationReport(epsilon, max(per["p"], per["q"], per["d"]), per["R"],
                           max(per["grad_c"], per["grad_w"]), per)


def stability_experiment(config: SolverConfig, epsilon: float, baseline=None) -> DeviationReport:
    """Deviation caused by adding the constant `epsilon` to every forcing term."""
    if not epsilon >= 0:
        raise ValueError("epsilon must be nonnegative")
    base = baseline if baseline is not None else run_simulation(config.replace(perturbation=0.0))
    if epsilon == 0:
        return trajectory_deviation(base.trajectory, base.trajectory, 0.0)
    pert = run_simulation(config.replace(perturbation=config.perturbation + epsilon))
    return trajectory_deviation(base.trajectory, pert.trajectory, epsilon)


def stability_study(config: SolverConfig, epsilons: Sequence[float], path=None):
    """Reports for each epsilon; the ratio column compares consecutive rows."""
    if not epsilons or any(not e > 0 for e in epsilons):
        raise ValueError("epsilons must be positive")
    base = run_simulation(config.replace(perturbation=0.0))
    reports = [stability_experiment(config, e, base) for e in epsilons]
    if path is not None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["epsilon", "dev_pqd", "dev_R", "dev_grad_cw", "deviation", "ratio"])
            for i, r in enumerate(reports):
                ratio = reports[i - 1].deviation / r.deviation if i else float("nan")
                out.writerow([repr(r.epsilon), f"{r.pqd:.6e}", f"{r.R:.6e}",
                              f"{r.grad_cw:.6e}", f"{r.deviation:.6e}", f"{ratio:.4f}"])
    return reports


# -- table suite

TIME_LEVELS = (100, 1000, 2000, 3000, 4000, 5000, 6000)
SPACE_LEVELS = (10, 20, 40, 80, 100)


def reproduce_tables(out_dir, base: SolverConfig | None = None, time_levels=TIME_LEVELS,
                     space_levels=SPACE_LEVELS, workers: int = 1):
    """Time errors and orders at N = 20, and space errors at M = 200."""
    base = base or SolverConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    time_study = run_convergence_study(base.replace(N=20, mms="example-1"), "time",
                                       time_levels, workers=workers)
    time_study.write_errors(out_dir / "table1_time_errors.csv")
    # orders are reported from the second level on, as in the published layout
    tail = slice_study(time_study, 1)
    tail.write_orders(out_dir / "table2_time_orders.csv")
    space_study = run_convergence_study(base.replace(M=200, mms="boundary-layer"), "space",
                                        space_levels, workers=workers)
    space_study.write_errors(out_dir / "table3_space_errors.csv", fields=("c", "w"))
    return time_study, space_study


def slice_study(study: StudyResult, start: int) -> StudyResult:
    """The same study restricted to levels[start:]."""
    return StudyResult(study.vary, study.levels[start:],
                       {k: v[start:] for k, v in study.errors.items()},
                       {k: v[start:] for k, v in study.orders.items()},
                       study.reference, study.alpha, study.wall_times[start:])
