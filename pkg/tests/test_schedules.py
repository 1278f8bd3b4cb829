import math

import numpy as np
import pytest

from qsatsim.errors import InvalidParameters
from qsatsim.sat import EnsembleParams, SatInstance, generate_instance
from qsatsim.schedules import (PAPER_FORM, ZERO_FORM, LinearForm, PhaseSchedule, aa_known_cost,
                               aa_psoln, aa_schedule, aa_theta, boyer_expected_cost,
                               boyer_m_sequence, last_steps_overrides, linear_schedule,
                               p_random, run_boyer_loop, sublinear_steps, with_overrides)


def test_linear_schedule_values():
    s = linear_schedule(PAPER_FORM, 20)
    assert abs(s.rho[0] - 0.0341290) < 5e-8
    z = linear_schedule(ZERO_FORM, 7)
    assert z.rho == (0.0,) * 7 and z.tau == (0.0,) * 7
    with pytest.raises(InvalidParameters):
        linear_schedule(PAPER_FORM, 0)


def test_linear_schedule_reconstructs_form():
    j = 13
    s = linear_schedule(PAPER_FORM, j)
    lam = np.arange(j) / j
    assert np.allclose(np.array(s.rho) * j, PAPER_FORM.R(lam), atol=1e-14)
    assert np.allclose(np.array(s.tau) * j, PAPER_FORM.T(lam), atol=1e-14)


def test_doubling_j_halves_phases():
    a, b = linear_schedule(PAPER_FORM, 10), linear_schedule(PAPER_FORM, 20)
    assert np.allclose(np.array(a.rho) / 2, np.array(b.rho)[::2])
    assert np.allclose(np.array(a.tau) / 2, np.array(b.tau)[::2])


def test_overrides():
    base = linear_schedule(PAPER_FORM, 10)
    assert with_overrides(base, []) is base
    o = with_overrides(base, last_steps_overrides(10, [0.1, 0.2, 0.3, 0.4]))
    assert o.rho[:8] == base.rho[:8] and o.rho[8:] == (0.1, 0.3) and o.tau[8:] == (0.2, 0.4)
    assert o.kind == "custom"
    shifted = with_overrides(base, [(3, base.rho[2] + 2, base.tau[2])])
    assert shifted.equivalent(base) and shifted.rho != base.rho
    with pytest.raises(InvalidParameters):
        with_overrides(base, [(11, 0.0, 0.0)])
    with pytest.raises(InvalidParameters):
        with_overrides(aa_schedule(3), [(1, 0.0, 0.0)])


def test_schedule_json_roundtrip(tmp_path):
    s = with_overrides(linear_schedule(PAPER_FORM, 9), [(9, 0.5, 0.25)])
    s.save(tmp_path / "s.json")
    back = PhaseSchedule.load(tmp_path / "s.json")
    assert back.equivalent(s)
    assert PhaseSchedule.from_dict({"kind": "aa", "j": 4}).kind == "aa"
    assert PhaseSchedule.from_dict({"preset": "paper", "j": 9}).equivalent(
        linear_schedule(PAPER_FORM, 9))


def test_schedule_validation():
    with pytest.raises(InvalidParameters):
        PhaseSchedule(2, (0.0,), (0.0, 0.0))
    with pytest.raises(InvalidParameters):
        PhaseSchedule(1, (0.0,), (0.0,), kind="weird")


def test_sublinear_steps():
    assert sublinear_steps(16, scale=3.0) == round(3 * 16 ** 0.2)
    assert sublinear_steps(1, scale=0.1) == 2
    assert sublinear_steps(16) == 12 and sublinear_steps(20) == 13


def test_aa_psoln_closed_form():
    n = 10
    assert abs(aa_psoln(5, n, 0) - 5 / 1024) < 1e-15
    assert aa_psoln(1024, n, 7) == pytest.approx(1.0)
    assert aa_psoln(0, n, 3) == 0.0
    # S = 2^n / 2 gives theta = pi/4, and (2j+1) theta = pi/2 needs S = 2^n/4 with j=1
    assert aa_psoln(256, n, 1) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidParameters):
        aa_psoln(2000, n, 1)


def test_aa_psoln_quasiperiodic():
    rng = np.random.default_rng(1)
    for _ in range(50):
        th = rng.uniform(0.01, math.pi / 2)
        j = np.arange(0, 40)
        a = np.sin((2 * j + 1) * th) ** 2
        b = np.sin((2 * j + 1) * th + 2 * math.pi) ** 2
        assert np.allclose(a, b)


def test_p_random():
    th = 0.1
    assert p_random(1, th) == pytest.approx(math.sin(th) ** 2, abs=1e-14)
    direct = np.mean(np.sin((2 * np.arange(7) + 1) * th) ** 2)
    assert abs(p_random(7, th) - direct) < 1e-12
    for M in (10, 100, 1000, 10000):
        assert abs(p_random(M, 0.3) - 0.5) <= 1 / (4 * M * math.sin(0.6)) + 1e-15
    rng = np.random.default_rng(2)
    for _ in range(500):
        M = int(rng.integers(1, 2 ** 13 + 1))
        th = rng.uniform(1e-6, math.pi / 2)
        assert 0.0 <= p_random(M, th) <= 1.0 + 1e-12
    assert p_random(5, math.pi / 2) == 1.0


def test_boyer_sequence_capped():
    seq = boyer_m_sequence(16)
    assert seq[0] == 1.0 and seq[-1] == 256.0
    assert max(seq) <= 2 ** 8
    assert all(b == pytest.approx(min(256.0, 6 * a / 5)) for a, b in zip(seq, seq[1:]))


def test_boyer_expected_cost():
    n = 16
    assert boyer_expected_cost(2 ** n, n) == 0.0
    known = aa_known_cost(20, n)
    c = boyer_expected_cost(20, n)
    assert c < 4 * known
    assert c < 2.2 * known
    with pytest.raises(InvalidParameters):
        boyer_expected_cost(0, n)
    costs = [boyer_expected_cost(S, 12) for S in range(1, 200)]
    assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))


def test_boyer_expected_cost_recursion_oracle():
    # independent forward evaluation: sum over trial index of P(reach t) * (M_t - 1)/2,
    # with the capped tail summed as a geometric series
    n, S = 12, 7
    th = aa_theta(S, n)
    cap = float(round(2 ** (n / 2)))
    M, reach, total = 1.0, 1.0, 0.0
    while M < cap:
        total += reach * (M - 1) / 2
        reach *= 1 - p_random(M, th)
        M = min(cap, 1.2 * M)
    total += reach * (cap - 1) / 2 / p_random(cap, th)
    assert boyer_expected_cost(S, n) == pytest.approx(total, rel=1e-12)


def test_boyer_loop_all_solutions():
    inst = SatInstance(EnsembleParams(6, 3, 0), ())
    run = run_boyer_loop(inst, seed=1)
    assert run.solved and run.steps == 0 and run.trials == 1


def test_boyer_loop_monte_carlo():
    from qsatsim.sat import count_solutions
    for seed in range(30):
        inst = generate_instance(EnsembleParams(12, 3, 51), seed)
        S = count_solutions(inst)
        if S:
            break
    runs = [run_boyer_loop(inst, seed=s).steps for s in range(300)]
    expect = boyer_expected_cost(S, 12)
    assert abs(np.mean(runs) - expect) < 0.25 * expect
