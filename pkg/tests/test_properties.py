"""Randomised invariants: norm, phase periodicity, conjugation, determinism."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qsatsim.harness import ExperimentConfig, ScheduleSpec, records_csv, run_experiment
from qsatsim.sat import EnsembleParams, emit_dimacs, generate_instance
from qsatsim.schedules import PhaseSchedule
from qsatsim.sim import run_trial

SETTINGS = settings(max_examples=25, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])

sizes = st.integers(min_value=3, max_value=9)
seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
slopes = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


@st.composite
def schedules(draw, max_j=6):
    j = draw(st.integers(min_value=1, max_value=max_j))
    rho = tuple(draw(st.lists(slopes, min_size=j, max_size=j)))
    tau = tuple(draw(st.lists(slopes, min_size=j, max_size=j)))
    return PhaseSchedule(j, rho, tau)


def instance(n, seed):
    return generate_instance(EnsembleParams.from_mu(n, 3, 4.25), seed)


@SETTINGS
@given(sizes, seeds, schedules())
def test_norm_preserved(n, seed, sched):
    psi, res = run_trial(instance(n, seed), sched)
    assert abs(np.vdot(psi, psi).real - 1) < 1e-9
    assert np.all((res.psoln_by_step >= 0) & (res.psoln_by_step <= 1 + 1e-12))


@SETTINGS
@given(sizes, seeds, schedules(),
       st.lists(st.integers(min_value=-2, max_value=2), min_size=12, max_size=12))
def test_phase_mod_two(n, seed, sched, shifts):
    inst = instance(n, seed)
    j = sched.j
    moved = PhaseSchedule(j, tuple(r + 2 * s for r, s in zip(sched.rho, shifts[:j])),
                          tuple(t + 2 * s for t, s in zip(sched.tau, shifts[6:6 + j])))
    a, ra = run_trial(inst, sched)
    b, rb = run_trial(inst, moved)
    assert np.max(np.abs(ra.psoln_by_step - rb.psoln_by_step)) < 1e-10
    # equal up to a global phase
    k = int(np.argmax(np.abs(a)))
    g = b[k] / a[k]
    assert abs(abs(g) - 1) < 1e-9 and np.max(np.abs(b - g * a)) < 1e-9


@SETTINGS
@given(sizes, seeds, schedules())
def test_conjugation(n, seed, sched):
    inst = instance(n, seed)
    neg = PhaseSchedule(sched.j, tuple(-r for r in sched.rho), tuple(-t for t in sched.tau))
    a, ra = run_trial(inst, sched)
    b, rb = run_trial(inst, neg)
    assert np.max(np.abs(b - np.conj(a))) < 1e-10
    assert np.max(np.abs(ra.psoln_by_step - rb.psoln_by_step)) < 1e-10


@SETTINGS
@given(st.integers(min_value=3, max_value=40), seeds,
       st.floats(min_value=0.5, max_value=6.0))
def test_generation_deterministic(n, seed, mu):
    p = EnsembleParams.from_mu(n, 3, mu)
    a, b = generate_instance(p, seed), generate_instance(p, seed)
    assert a.clauses == b.clauses and emit_dimacs(a) == emit_dimacs(b)


@settings(max_examples=6, deadline=None)
@given(st.sampled_from(["quantum", "gsat", "aa-boyer", "quantum-gsat-informed"]),
       st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=4))
def test_records_independent_of_threads(method, seed, threads):
    cfg = ExperimentConfig(method, (8, 9), 4, seed=seed, schedule=ScheduleSpec(steps=1))
    assert records_csv(run_experiment(cfg, threads=1)) == \
        records_csv(run_experiment(cfg, threads=threads))
