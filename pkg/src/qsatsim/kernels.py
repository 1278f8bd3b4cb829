"""Hot loops over the 2^n state space, in numba and numpy flavours.

Every kernel exists twice: ``<name>_nb`` (loop form, compiled when numba is
available) and ``<name>_np`` (vectorised numpy). The public name is bound to
one of them at import time according to :mod:`qsatsim._accel`. Both versions
are kept importable so tests and the benchmark can compare them directly.
"""
from functools import lru_cache

import numpy as np

from ._accel import HAVE_NUMBA, njit

# ---------------------------------------------------------------- cost table


@njit
def cost_table_nb(n, varmask, negmask):
    size = 1 << n
    m = varmask.shape[0]
    out = np.zeros(size, np.int32)
    for s in range(size):
        c = 0
        for i in range(m):
            if ((s ^ negmask[i]) & varmask[i]) == 0:
                c += 1
        out[s] = c
    return out


def cost_table_np(n, varmask, negmask):
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, np.int32)
    for vm, nm in zip(varmask.tolist(), negmask.tolist()):
        out += ((idx ^ nm) & vm) == 0
    return out


# ----------------------------------------------------------- Walsh transform


@njit
def fwht_nb(a):
    # radix-4 passes halve the sweeps over memory; one radix-2 pass if log2 is odd
    size = a.shape[0]
    h = 1
    while 4 * h <= size:
        for i in range(0, size, 4 * h):
            for j in range(i, i + h):
                a0 = a[j]
                a1 = a[j + h]
                a2 = a[j + 2 * h]
                a3 = a[j + 3 * h]
                b0 = a0 + a1
                b1 = a0 - a1
                b2 = a2 + a3
                b3 = a2 - a3
                a[j] = b0 + b2
                a[j + h] = b1 + b3
                a[j + 2 * h] = b0 - b2
                a[j + 3 * h] = b1 - b3
        h *= 4
    if h < size:
        for j in range(h):
            x = a[j]
            y = a[j + h]
            a[j] = x + y
            a[j + h] = x - y
    scale = 1.0 / np.sqrt(size)
    for i in range(size):
        a[i] *= scale


def fwht_np(a):
    size = a.shape[0]
    h = 1
    while h < size:
        v = a.reshape(-1, 2, h)
        top = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = top - v[:, 1, :]
        h *= 2
    a *= 1.0 / np.sqrt(size)


# ------------------------------------------------------------ diagonal phase


@njit
def mul_phase_nb(a, table, index):
    for s in range(a.shape[0]):
        a[s] *= table[index[s]]


def mul_phase_np(a, table, index):
    a *= table[index]


# ----------------------------------------------------------- cost histogram


@njit
def cost_hist_nb(a, costs, m):
    out = np.zeros(m + 1)
    for s in range(a.shape[0]):
        z = a[s]
        out[costs[s]] += z.real * z.real + z.imag * z.imag
    return out


def cost_hist_np(a, costs, m):
    return np.bincount(costs, weights=np.abs(a) ** 2, minlength=m + 1)


# ------------------------------------------------ deterministic GSAT, all s


@njit
def gsat_descend_all_nb(table, n, t, strict):
    size = table.shape[0]
    out = np.empty(size, np.int64)
    for s0 in range(size):
        s = s0
        for _ in range(t):
            if table[s] == 0:
                break
            best = -1
            best_c = 1 << 30
            for i in range(n):
                c = table[s ^ (1 << i)]
                if c < best_c:
                    best_c = c
                    best = i
            if best_c > table[s] or (strict and best_c == table[s]):
                break
            s = s ^ (1 << best)
        out[s0] = s
    return out


def gsat_descend_all_np(table, n, t, strict):
    cur = np.arange(table.shape[0], dtype=np.int64)
    for _ in range(t):
        cur_c = table[cur]
        best_c = np.full(cur.shape, np.iinfo(np.int32).max, dtype=np.int64)
        best_i = np.zeros(cur.shape, dtype=np.int64)
        for i in range(n):
            c = table[cur ^ (1 << i)]
            better = c < best_c
            best_c[better] = c[better]
            best_i[better] = i
        move = (cur_c > 0) & ((best_c < cur_c) if strict else (best_c <= cur_c))
        cur = np.where(move, cur ^ (np.int64(1) << best_i), cur)
    return cur


# ------------------------------------------------------------- one GSAT try


@njit
def gsat_try_nb(clause_vars, clause_neg, occ_ptr, occ_clause, occ_neg,
                assign, uniforms, max_steps, strict):
    """Greedy descent from ``assign`` (modified in place).

    Returns (final cost, moves made, best cost seen).
    """
    m, k = clause_vars.shape
    n = assign.shape[0]
    ntrue = np.zeros(m, np.int32)
    cost = 0
    for c in range(m):
        t = 0
        for q in range(k):
            if assign[clause_vars[c, q]] != clause_neg[c, q]:
                t += 1
        ntrue[c] = t
        if t == 0:
            cost += 1
    best_seen = cost
    steps = 0
    delta = np.zeros(n, np.int32)
    while cost > 0 and steps < max_steps:
        for v in range(n):
            d = 0
            for q in range(occ_ptr[v], occ_ptr[v + 1]):
                c = occ_clause[q]
                if assign[v] != occ_neg[q]:
                    if ntrue[c] == 1:
                        d += 1
                elif ntrue[c] == 0:
                    d -= 1
            delta[v] = d
        dmin = delta[0]
        for v in range(1, n):
            if delta[v] < dmin:
                dmin = delta[v]
        if strict and dmin >= 0:
            break
        nties = 0
        for v in range(n):
            if delta[v] == dmin:
                nties += 1
        pick = int(uniforms[steps] * nties)
        if pick >= nties:
            pick = nties - 1
        chosen = -1
        for v in range(n):
            if delta[v] == dmin:
                if pick == 0:
                    chosen = v
                    break
                pick -= 1
        for q in range(occ_ptr[chosen], occ_ptr[chosen + 1]):
            c = occ_clause[q]
            if assign[chosen] != occ_neg[q]:
                ntrue[c] -= 1
            else:
                ntrue[c] += 1
        assign[chosen] = 1 - assign[chosen]
        cost += dmin
        steps += 1
        if cost < best_seen:
            best_seen = cost
    return cost, steps, best_seen


def gsat_try_np(clause_vars, clause_neg, occ_ptr, occ_clause, occ_neg,
                assign, uniforms, max_steps, strict):
    n = assign.shape[0]
    lit_true = assign[clause_vars] != clause_neg
    ntrue = lit_true.sum(axis=1)
    cost = int((ntrue == 0).sum())
    best_seen = cost
    steps = 0
    occ_var = np.repeat(np.arange(n), np.diff(occ_ptr))
    while cost > 0 and steps < max_steps:
        true_now = assign[occ_var] != occ_neg
        nt = ntrue[occ_clause]
        contrib = np.where(true_now, nt == 1, -(nt == 0).astype(np.int64))
        delta = np.bincount(occ_var, weights=contrib, minlength=n).astype(np.int64)
        dmin = delta.min()
        if strict and dmin >= 0:
            break
        ties = np.flatnonzero(delta == dmin)
        pick = min(int(uniforms[steps] * len(ties)), len(ties) - 1)
        v = ties[pick]
        sl = slice(occ_ptr[v], occ_ptr[v + 1])
        ntrue[occ_clause[sl]] += np.where(assign[v] != occ_neg[sl], -1, 1)
        assign[v] = 1 - assign[v]
        cost += int(dmin)
        steps += 1
        best_seen = min(best_seen, cost)
    return cost, steps, best_seen


# ------------------------------------------------------------------ helpers


@lru_cache(maxsize=32)
def popcount_table(n):
    out = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        out[1 << i: 1 << (i + 1)] = out[: 1 << i] + 1
    out.setflags(write=False)
    return out


if HAVE_NUMBA:
    cost_table = cost_table_nb
    fwht = fwht_nb
    mul_phase = mul_phase_nb
    cost_hist = cost_hist_nb
    gsat_descend_all = gsat_descend_all_nb
    gsat_try = gsat_try_nb
else:
    cost_table = cost_table_np
    fwht = fwht_np
    mul_phase = mul_phase_np
    cost_hist = cost_hist_np
    gsat_descend_all = gsat_descend_all_np
    gsat_try = gsat_try_np

KERNELS = {
    "cost_table": (cost_table_nb, cost_table_np),
    "fwht": (fwht_nb, fwht_np),
    "mul_phase": (mul_phase_nb, mul_phase_np),
    "cost_hist": (cost_hist_nb, cost_hist_np),
    "gsat_descend_all": (gsat_descend_all_nb, gsat_descend_all_np),
    "gsat_try": (gsat_try_nb, gsat_try_np),
}
