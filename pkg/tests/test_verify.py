import copy

import numpy as np
import pytest

from fractumor.driver import SolverConfig, run_simulation
from fractumor.mms import example1_solution
from fractumor.verify import (L2_POINTS, ERROR_GRID, convergence_order, error_norms, l2_norm,
                              run_convergence_study, stability_experiment, trajectory_deviation)


@pytest.fixture(scope="module")
def short_run():
    return run_simulation(SolverConfig(M=20))


def test_trajectory_against_itself_is_zero(short_run):
    rep = error_norms(short_run.trajectory, short_run.trajectory)
    assert all(v == 0 for v in rep.max_error.values())
    assert all(v == 0 for v in rep.l2_final.values())
    assert rep.grid_points == 1001 and rep.times == 21


def test_constant_offset_shows_up_exactly(short_run):
    shifted = copy.deepcopy(short_run.trajectory)
    for s in shifted:
        s.c_bar += 1e-3
        s.d = s.d + 2e-3
    rep = error_norms(shifted, short_run.trajectory)
    assert rep.max_error["c"] == pytest.approx(1e-3, rel=1e-9)
    assert rep.max_error["d"] == pytest.approx(2e-3, rel=1e-9)
    assert rep.l2_final["c"] == pytest.approx(1e-3, rel=1e-9)
    assert rep.max_error["w"] == 0


def test_l2_rule_against_riemann_sum():
    f = lambda x: np.exp(-3 * x) * np.sin(7 * x) + x**2
    xs = (np.arange(100_000) + 0.5) / 100_000
    riemann = np.sqrt(np.mean(f(xs) ** 2))
    assert l2_norm(f(L2_POINTS)) == pytest.approx(riemann, abs=1e-6)


def test_errors_against_exact_are_small_and_positive(short_run):
    rep = error_norms(short_run.trajectory, example1_solution())
    assert all(0 < v < 0.5 for v in rep.max_error.values())
    assert rep.grad_l2_final["c"] > 0


def test_reference_length_mismatch(short_run):
    with pytest.raises(ValueError):
        error_norms(short_run.trajectory, short_run.trajectory[:3])
    with pytest.raises(ValueError):
        error_norms([], example1_solution())


@pytest.mark.parametrize("e1,e2,n1,n2,expect", [
    (3.50646e-05, 9.31974e-06, 1000, 2000, 1.9116),
    (4.54002e-06, 2.02089e-06, 2000, 3000, 1.9962),
])
def test_order_formula_on_published_errors(e1, e2, n1, n2, expect):
    assert convergence_order(e1, e2, n1, n2) == pytest.approx(expect, abs=5e-4)


def test_order_properties():
    assert convergence_order(1e-3, 1e-3, 10, 20) == 0
    assert convergence_order(4e-3, 1e-3, 10, 20) == pytest.approx(2.0)
    assert convergence_order(4e-9, 1e-9, 10, 20) == pytest.approx(convergence_order(4, 1, 10, 20))
    for bad in [(0, 1, 1, 2), (1, -1, 1, 2), (1, 1, 2, 2)]:
        with pytest.raises(ValueError):
            convergence_order(*bad)


def test_single_level_study_has_no_orders(tmp_path):
    res = run_convergence_study(SolverConfig(), "time", [10], out_dir=tmp_path)
    assert res.orders["c"] == []
    assert (tmp_path / "time_errors.csv").exists()
    assert not (tmp_path / "time_orders.csv").exists()


def test_time_study_csv_layout(tmp_path):
    res = run_convergence_study(SolverConfig(), "time", [10, 20, 40], out_dir=tmp_path)
    rows = (tmp_path / "time_orders.csv").read_text().splitlines()
    assert rows[0] == "levels,c,w,p,q,d,2-alpha/2"
    assert len(rows) == 3 and rows[1].startswith('"M=10,20"')
    assert rows[1].endswith("1.9500")
    errs = (tmp_path / "time_errors.csv").read_text().splitlines()
    assert errs[0] == "field,M=10,M=20,M=40"
    assert all(res.errors["p"][i] > res.errors["p"][i + 1] for i in range(2))


def test_space_study_uses_fine_reference(tmp_path):
    res = run_convergence_study(SolverConfig(M=10, mms="boundary-layer"), "space", [8, 16],
                                reference_level=32, out_dir=tmp_path)
    assert res.reference == "N=32"
    assert res.errors["c"][1] < res.errors["c"][0]
    header = (tmp_path / "space_errors.csv").read_text().splitlines()[0]
    assert header == "field,N=8,N=16"


def test_study_input_checks():
    with pytest.raises(ValueError):
        run_convergence_study(SolverConfig(), "both", [10, 20])
    with pytest.raises(ValueError):
        run_convergence_study(SolverConfig(mms="none"), "time", [10, 20])
    with pytest.raises(ValueError):
        run_convergence_study(SolverConfig(), "time", [10, 20], reference="trajectory")


def test_zero_perturbation_gives_zero_deviation():
    rep = stability_experiment(SolverConfig(M=10), 0.0)
    assert rep.deviation == 0
    with pytest.raises(ValueError):
        stability_experiment(SolverConfig(M=10), -1.0)


def test_deviation_is_roughly_linear_in_epsilon():
    cfg = SolverConfig(M=20)
    base = run_simulation(cfg)
    big = stability_experiment(cfg, 1e-2, base)
    small = stability_experiment(cfg, 1e-3, base)
    assert np.isfinite(big.deviation)
    assert 8 < big.deviation / small.deviation < 12
    assert trajectory_deviation(base.trajectory, base.trajectory).deviation == 0
