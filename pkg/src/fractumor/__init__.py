"""Solver for a time-fractional parabolic-hyperbolic free-boundary tumor model.

Nutrient and drug concentrations are advanced by Legendre collocation with L1
memory weights; cell densities are carried along characteristics; the radius
follows the boundary velocity.
"""
from .basis import TrialBasis, gauss_rule, lobatto_rule, trial_basis
from .driver import (ConfigError, Problem, RunResult, Simulation, Snapshot, SolverConfig,
                     TumorState, build_problem, run_simulation)
from .fracmem import FractionalWeights, HistoryCache, history_sum
from .kinetics import Example1, FullTemplate, make_model
from .mms import example1_solution, forcing_from_exact, rl_frac_deriv_oracle
from .parabolic import StepFailure
from .persist import load_snapshot, read_config, save_snapshot, write_trajectory_csv

__version__ = "0.1.0"
