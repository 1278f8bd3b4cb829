"""Bounded simplex search and the objective kinds."""
import numpy as np
import pytest

from qsatsim.errors import InvalidParameters
from qsatsim.harness import sample_instances
from qsatsim.meanfield import SpikeForm, boundary_search_r1, integrate_S
from qsatsim.optimizer import (Objective, evaluate_objective, last_steps_bounds,
                               last_steps_family, last_steps_start, linear_bounds,
                               linear_family, minimize_bounded, optimize, write_best_schedule)
from qsatsim.sat import count_solutions
from qsatsim.schedules import PAPER_FORM, LinearForm, PhaseSchedule, linear_schedule

SPIKE_X = [3.987, 8.0, 5.811, 0.0003, -2.0]


def spike_family(x):
    return SpikeForm(LinearForm(*x[:4]), x[4], 0.02)


def test_quadratic_recovered():
    a = np.array([0.3, -1.2, 2.5])
    res = minimize_bounded(lambda x: float(np.sum((x - a) ** 2)), np.zeros(3),
                           [(-5, 5)] * 3, budget=2000, restarts=2)
    assert np.max(np.abs(res.x - a)) < 1e-6


def test_never_worse_than_start_and_budget():
    f = lambda x: float(np.sin(5 * x[0]) + x[1] ** 2)
    x0 = np.array([0.9, 0.4])
    res = minimize_bounded(f, x0, [(-1, 1), (-1, 1)], budget=15, restarts=3)
    assert res.value <= f(x0)
    assert len(res.trace) <= 15 and res.evaluations == len(res.trace)
    assert np.array_equal(res.trace[0][0], x0)


def test_respects_bounds():
    res = minimize_bounded(lambda x: float(np.sum(x)), np.array([0.5, 0.5]), [(0, 1), (0, 1)],
                           budget=200)
    assert all(np.all((x >= 0) & (x <= 1)) for x, _ in res.trace)
    assert res.value == pytest.approx(0.0, abs=1e-6)


def test_reproducible_trace():
    f = lambda x: float((x[0] - 0.2) ** 2 + abs(x[1]))
    runs = [minimize_bounded(f, [1.0, 1.0], [(-2, 2), (-2, 2)], budget=80, seed=4, restarts=2)
            for _ in range(2)]
    assert [(tuple(x), v) for x, v in runs[0].trace] == [(tuple(x), v) for x, v in runs[1].trace]


def test_invalid_inputs():
    with pytest.raises(InvalidParameters):
        minimize_bounded(lambda x: 0.0, [0.0], [(0, 1)], budget=0)
    with pytest.raises(InvalidParameters):
        minimize_bounded(lambda x: 0.0, [0.0], [(0, np.inf)])
    with pytest.raises(InvalidParameters):
        Objective("median-cost", linear_family(4))
    with pytest.raises(InvalidParameters):
        Objective("fastest", linear_family(4), [object()])


def test_nonfinite_values_become_inf():
    res = minimize_bounded(lambda x: float("nan") if x[0] > 0.5 else 1 - float(x[0]),
                           [0.4], [(0, 1)], budget=40)
    assert res.value <= 0.6
    assert not any(np.isnan(v) for _, v in res.trace)
    assert any(v == np.inf for _, v in res.trace)


@pytest.fixture(scope="module")
def sample10():
    return [it.instance for it in sample_instances(10, 20, seed=4)]


def test_zero_schedule_median_cost(sample10):
    j = 5
    fam = lambda x: PhaseSchedule(j, (0.0,) * j, (0.0,) * j)
    got = evaluate_objective(Objective("median-cost", fam, sample10), [])
    want = np.median([j * 2 ** 10 / count_solutions(inst) for inst in sample10])
    assert got == pytest.approx(want, rel=1e-12)
    got = evaluate_objective(Objective("median-psoln", fam, sample10), [])
    assert got == pytest.approx(-np.median([count_solutions(i) / 2 ** 10 for i in sample10]))


def test_uniform_expected_cost(sample10):
    fam = lambda x: PhaseSchedule(2, (0.0, 0.0), (0.0, 0.0))
    got = evaluate_objective(Objective("expected-final-cost", fam, sample10), [])
    assert got == pytest.approx(np.mean([inst.m / 8 for inst in sample10]), rel=1e-12)


def test_threads_do_not_change_value(sample10):
    fam = linear_family(10)
    a = evaluate_objective(Objective("median-cost", fam, sample10), PAPER_FORM.as_tuple())
    b = evaluate_objective(Objective("median-cost", fam, sample10, threads=3),
                           PAPER_FORM.as_tuple())
    assert a == b and np.isfinite(a)


def test_last_steps_family():
    j = 6
    start = last_steps_start(PAPER_FORM, j)
    fam = last_steps_family(PAPER_FORM, j)
    assert fam(start).equivalent(linear_schedule(PAPER_FORM, j))
    s = fam([0.1, 0.2, 0.3, 0.4])
    assert s.rho[-2:] == (0.1, 0.3) and s.tau[-2:] == (0.2, 0.4)
    assert s.rho[:-2] == linear_schedule(PAPER_FORM, j).rho[:-2]
    assert len(last_steps_bounds()) == 4 and len(linear_bounds()) == 4
    with pytest.raises(InvalidParameters):
        fam([0.1, 0.2])


def test_write_best_schedule(tmp_path, sample10):
    fam = last_steps_family(PAPER_FORM, 10)
    obj = Objective("median-cost", fam, sample10)
    res = optimize(obj, last_steps_start(PAPER_FORM, 10), last_steps_bounds(), budget=6)
    write_best_schedule(res, fam, tmp_path / "best.json")
    loaded = PhaseSchedule.load(tmp_path / "best.json")
    assert loaded.equivalent(fam(res.x))
    res.write_trace(tmp_path / "trace.csv")
    assert len((tmp_path / "trace.csv").read_text().splitlines()) == 1 + res.evaluations


def test_ode_objective_matches_model():
    obj = Objective("ode-r1", spike_family)
    val = evaluate_objective(obj, SPIKE_X)
    assert val == pytest.approx(integrate_S(spike_family(SPIKE_X), 3, 4.25).final[1], abs=0)
    assert val < 0.05
    lin = Objective("ode-r1", lambda x: LinearForm(*x))
    assert evaluate_objective(lin, PAPER_FORM.as_tuple()) == pytest.approx(0.399, abs=0.002)


def test_ode_objective_reproduces_boundary_search():
    bounds = [(-8, 8), (-8, 8), (0, 6), (0, 6), (-2, 2)]
    via_opt = optimize(Objective("ode-r1", spike_family), SPIKE_X, bounds, budget=25, seed=2)
    via_mf = boundary_search_r1(3, 4.25, family="spike", x0=SPIKE_X, screen=False,
                                budget=25, seed=2, steps=2000)
    assert via_opt.value == via_mf.r1
    assert np.array_equal(via_opt.x, via_mf.coefficients)
