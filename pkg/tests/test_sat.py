import itertools
import math

import numpy as np
import pytest

from qsatsim.errors import DimacsParseError, InvalidParameters, ResourceGuard, UnsupportedInstance
from qsatsim.sat import (Clause, EnsembleParams, SatInstance, as_bits, bits_to_int, cost,
                         count_solutions, emit_dimacs, from_lists, generate_instance, hamming,
                         instance_seed, parse_dimacs, read_instance, write_instance)

TWO_SAT = "p cnf 3 2\n1 -2 0\n2 3 0\n"


def naive_cost(inst, bits):
    total = 0
    for cl in inst.clauses:
        if all(bool(bits[v]) == bool(neg) for v, neg in zip(cl.vars, cl.signs)):
            total += 1
    return total


def test_params_validation():
    with pytest.raises(InvalidParameters):
        EnsembleParams(3, 4, 1)
    with pytest.raises(InvalidParameters):
        EnsembleParams(3, 2, -1)
    p = EnsembleParams(20, 3, 85)
    assert p.n_clauses == 9120
    assert p.p == 0.125
    assert p.mu == 4.25
    assert EnsembleParams.from_mu(20, 3, 4.25).m == 85
    assert EnsembleParams.from_mu(13, 3, 4.25).m == 55


def test_clause_invariants():
    with pytest.raises(InvalidParameters):
        Clause((1, 1), (False, True))
    with pytest.raises(InvalidParameters):
        Clause((1, 2), (False,))


def test_generate_structure():
    inst = generate_instance(EnsembleParams(3, 2, 5), 99)
    assert len(inst.clauses) == 5
    assert all(len(set(c.vars)) == 2 for c in inst.clauses)


def test_generate_k_greater_than_n():
    with pytest.raises(InvalidParameters):
        generate_instance(EnsembleParams(2, 3, 1), 0)


def test_generation_determinism():
    p = EnsembleParams(20, 3, 85)
    a, b = generate_instance(p, 7), generate_instance(p, 7)
    assert emit_dimacs(a) == emit_dimacs(b)
    assert emit_dimacs(a) != emit_dimacs(generate_instance(p, 8))


def test_clause_distribution_uniform():
    # every one of the C(n,k) 2^k clauses equally likely (chi-square, n=6)
    n, k = 6, 3
    counts = {}
    for seed in range(400):
        for c in generate_instance(EnsembleParams(n, k, 20), seed).clauses:
            key = (tuple(sorted(zip(c.vars, c.signs))))
            counts[key] = counts.get(key, 0) + 1
    total = EnsembleParams(n, k, 1).n_clauses
    assert len(counts) == total
    obs = np.array(list(counts.values()), dtype=float)
    exp = obs.sum() / total
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    from scipy import stats
    assert stats.chi2.sf(chi2, total - 1) > 1e-4


def test_two_sat_example():
    inst = parse_dimacs(TWO_SAT)
    assert cost(inst, [0, 0, 1]) == 0
    assert cost(inst, [0, 1, 0]) == 1
    assert count_solutions(inst) == 4


def test_empty_instance():
    inst = SatInstance(EnsembleParams(4, 3, 0), ())
    assert cost(inst, 5) == 0
    assert count_solutions(inst) == 16


def test_hamming():
    assert hamming(0b0101, 0b0101) == 0
    assert hamming([0, 1, 0, 1], [0, 1, 1, 0]) == 2
    assert hamming(0, (1 << 9) - 1) == 9


def test_bits_roundtrip():
    for s in (0, 1, 37, 255):
        assert bits_to_int(as_bits(s, 8)) == s


def test_cost_matches_naive(rng):
    for t in range(40):
        inst = generate_instance(EnsembleParams(10, 3, 42), 1000 + t)
        table = inst.cost_table()
        for s in rng.integers(0, 1 << 10, 25):
            bits = as_bits(int(s), 10)
            c = naive_cost(inst, bits)
            assert cost(inst, bits) == c == table[s]
            assert 0 <= c <= inst.m


def test_count_solutions_independent_enumeration():
    inst = generate_instance(EnsembleParams.from_mu(12, 3, 4.25), 3)
    # second enumeration order: itertools.product over variable values
    brute = sum(1 for bits in itertools.product((0, 1), repeat=12)
                if naive_cost(inst, bits) == 0)
    assert count_solutions(inst) == brute


def test_enumeration_guard():
    inst = generate_instance(EnsembleParams(30, 3, 10), 0)
    with pytest.raises(ResourceGuard):
        count_solutions(inst)


def test_soluble_fraction_near_transition():
    p = EnsembleParams(16, 3, 68)
    sol = sum(count_solutions(generate_instance(p, instance_seed(5, i))) > 0 for i in range(500))
    assert 0.3 < sol / 500 < 0.8


def test_dimacs_roundtrip(tmp_path):
    inst = parse_dimacs(TWO_SAT)
    assert inst.clauses == from_lists(3, [[1, -2], [2, 3]]).clauses
    text = emit_dimacs(inst)
    assert emit_dimacs(parse_dimacs(text)) == text
    gen = generate_instance(EnsembleParams(12, 3, 51), 4)
    path = tmp_path / "x.cnf"
    write_instance(gen, path, count_solutions(gen))
    back = read_instance(path)
    assert back.clauses == gen.clauses and back.seed == gen.seed


@pytest.mark.parametrize("text,err", [
    ("p cnf 3\n1 2 0\n", DimacsParseError),
    ("1 2 0\n", DimacsParseError),
    ("p cnf 3 2\n1 -2 0\n1 2 3 0\n", UnsupportedInstance),
    ("p cnf 3 1\n1 -1 0\n", UnsupportedInstance),
])
def test_dimacs_errors(text, err):
    with pytest.raises(err):
        parse_dimacs(text)


def test_instance_seed_distinct():
    seeds = {instance_seed(1, n, i) for n in (12, 14) for i in range(200)}
    assert len(seeds) == 400
    assert instance_seed(1, 12, 3) == instance_seed(1, 12, 3)


def test_expected_solutions_match_binomial():
    # E[S] = 2^n (1-p)^m; loose check at n=10, m=30 over 300 instances
    p = EnsembleParams(10, 3, 30)
    S = [count_solutions(generate_instance(p, s)) for s in range(300)]
    expect = 2 ** 10 * (7 / 8) ** 30
    se = np.std(S) / math.sqrt(len(S))
    assert abs(np.mean(S) - expect) < 4 * se
