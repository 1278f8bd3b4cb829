"""Each kernel, under both backends, against a direct numpy oracle."""
import numpy as np
import pytest

from qsatsim import kernels
from qsatsim.sat import as_bits, cost

from conftest import small_instance


def walsh_matrix(n):
    idx = np.arange(1 << n)
    parity = kernels.popcount_table(n)[idx[:, None] & idx[None, :]] & 1
    return (1 - 2 * parity) / 2 ** (n / 2)


def test_cost_table(backend):
    inst = small_instance(9, seed=4)
    vm, nm = inst.masks
    table = kernels.cost_table(9, vm, nm)
    assert [cost(inst, s) for s in range(1 << 9)] == list(table)


@pytest.mark.parametrize("n", [1, 3, 6, 8])
def test_fwht_dense(backend, rng, n):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    out = psi.copy()
    kernels.fwht(out)
    assert np.allclose(out, walsh_matrix(n) @ psi, atol=1e-12, rtol=0)


def test_mul_phase(backend, rng):
    psi = rng.normal(size=64) + 0j
    index = rng.integers(0, 5, 64)
    table = np.exp(1j * rng.normal(size=5))
    out = psi.copy()
    kernels.mul_phase(out, table, index)
    assert np.allclose(out, psi * table[index])


def test_cost_hist(backend, rng):
    psi = rng.normal(size=128) + 1j * rng.normal(size=128)
    costs = rng.integers(0, 7, 128)
    h = kernels.cost_hist(psi, costs, 8)
    naive = np.zeros(9)
    for a, c in zip(psi, costs):
        naive[c] += abs(a) ** 2
    assert np.allclose(h, naive, atol=1e-14)


def test_descend_all_matches_single_steps(backend):
    from qsatsim.gsat import gsat_informed_cost
    inst = small_instance(9, seed=2)
    for strict in (False, True):
        ends = kernels.gsat_descend_all(inst.cost_table(), 9, 3, strict)
        table = inst.cost_table()
        for s in range(0, 512, 7):
            assert table[ends[s]] == gsat_informed_cost(inst, s, 3, strict)


def test_gsat_try_backends_agree(rng):
    inst = small_instance(14, seed=9)
    v, neg = inst.arrays
    ptr, oc, on = inst.occurrences
    for _ in range(20):
        start = rng.integers(0, 2, 14, dtype=np.uint8)
        u = rng.random(28)
        a, b = start.copy(), start.copy()
        ra = kernels.gsat_try_nb(v, neg, ptr, oc, on, a, u, 28, False) \
            if kernels.HAVE_NUMBA else kernels.gsat_try_np(v, neg, ptr, oc, on, a, u, 28, False)
        rb = kernels.gsat_try_np(v, neg, ptr, oc, on, b, u, 28, False)
        assert tuple(map(int, ra)) == tuple(map(int, rb))
        assert np.array_equal(a, b)
        assert cost(inst, a) == int(ra[0])


def test_gsat_try_incremental_bookkeeping(backend, rng):
    # every single move's cost change equals a full recount
    inst = small_instance(12, seed=1)
    v, neg = inst.arrays
    ptr, oc, on = inst.occurrences
    checks = 0
    while checks < 1000:
        a = rng.integers(0, 2, 12, dtype=np.uint8)
        before = a.copy()
        c, steps, _ = kernels.gsat_try(v, neg, ptr, oc, on, a, rng.random(1), 1, False)
        if steps == 0:
            continue
        assert int(np.count_nonzero(a != before)) == 1
        assert int(c) == cost(inst, a)
        checks += 1


def test_popcount_table():
    t = kernels.popcount_table(10)
    assert all(t[s] == bin(s).count("1") for s in range(1024))
    assert not t.flags.writeable
