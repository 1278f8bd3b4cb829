"""Ensemble-averaged cost structure of random k-SAT.

Single states follow a binomial cost law. Pairs of states at Hamming distance
``d`` share a clause conflict only when all ``k`` clause variables fall in the
``n - d`` positions where the two states agree, which gives the two-binomial
construction in :func:`pair_cost_conditional`. Groups of four states are
classified by an :class:`OverlapVector` and handled through a per-clause
distribution over the 16 conflict subsets.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import InvalidParameters, ResourceGuard
from .sat import EnsembleParams

FOUR_STATE_M_LIMIT = 120
# Largest (m+1)^4 grid materialised at once; above it slices are built lazily.
_FULL_TABLE_CELLS = 1 << 24


# ------------------------------------------------------------- single state


def cost_distribution(params: EnsembleParams) -> np.ndarray:
    """P(C) for C = 0..m."""
    return stats.binom.pmf(np.arange(params.m + 1), params.m, params.p)


def cost_prob(params: EnsembleParams, C: int) -> float:
    if not 0 <= C <= params.m:
        return 0.0
    return float(stats.binom.pmf(C, params.m, params.p))


def expected_state_counts(params: EnsembleParams) -> np.ndarray:
    """v(C) = 2^n P(C)."""
    return 2.0 ** params.n * cost_distribution(params)


# -------------------------------------------------------------------- pairs


def shared_conflict_prob(params: EnsembleParams, d: int) -> float:
    """Probability a random clause conflicts with both states of a distance-d pair."""
    n, k = params.n, params.k
    return params.p * math.comb(n - d, k) / math.comb(n, k)


def _binom_pmf(N: int, q: float) -> np.ndarray:
    q = min(max(q, 0.0), 1.0)
    return stats.binom.pmf(np.arange(N + 1), N, q)


def pair_cost_conditional(params: EnsembleParams, d: int, C: int) -> np.ndarray:
    """P(c | C, d) as an array over c = 0..m."""
    if not 0 <= d <= params.n:
        raise InvalidParameters(f"distance {d} outside [0, {params.n}]")
    m, p = params.m, params.p
    out = np.zeros(m + 1)
    if not 0 <= C <= m:
        return out
    q = shared_conflict_prob(params, d)
    kept = _binom_pmf(C, q / p)
    new = _binom_pmf(m - C, (p - q) / (1 - p)) if p < 1 else np.eye(1, m - C + 1)[0]
    out[:] = np.convolve(kept, new)
    return np.clip(out, 0.0, 1.0)


def pair_cost_prob(params: EnsembleParams, d: int, C: int, c: int) -> float:
    if not 0 <= c <= params.m:
        return 0.0
    return float(pair_cost_conditional(params, d, C)[c])


@dataclass(frozen=True)
class PairStructureTable:
    """theta[d, C, c]: expected number of cost-c states at distance d from a cost-C state."""
    params: EnsembleParams
    theta: np.ndarray


def pair_structure(params: EnsembleParams, max_cells: int = 50_000_000) -> PairStructureTable:
    n, m = params.n, params.m
    if (n + 1) * (m + 1) ** 2 > max_cells:
        raise ResourceGuard(f"pair table of {(n + 1) * (m + 1) ** 2} cells exceeds budget")
    theta = np.empty((n + 1, m + 1, m + 1))
    for d in range(n + 1):
        w = math.comb(n, d)
        for C in range(m + 1):
            theta[d, C] = w * pair_cost_conditional(params, d, C)
    theta.setflags(write=False)
    return PairStructureTable(params, theta)


def dump_pair_slice(params: EnsembleParams, C: int, path: Path) -> None:
    """CSV of P(c|C,d) for d = 1..n, one row per (d, c)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "c", "prob"])
        for d in range(1, params.n + 1):
            row = pair_cost_conditional(params, d, C)
            for c, v in enumerate(row):
                w.writerow([d, c, f"{v:.12g}"])


# --------------------------------------------------------------- four states
#
# Group index i = 4*b_r' + 2*b_s + b_s', each bit saying whether that state
# disagrees with r on the variables of the group.

def _group_pattern(i: int) -> tuple[int, int, int, int]:
    """Values of (r, r', s, s') on a group-i variable, relative to r."""
    return 0, (i >> 2) & 1, (i >> 1) & 1, i & 1


@dataclass(frozen=True)
class OverlapVector:
    w: tuple[int, ...]

    def __post_init__(self):
        if len(self.w) != 8 or any(x < 0 for x in self.w):
            raise InvalidParameters(f"overlap vector needs 8 non-negative entries: {self.w}")

    @property
    def n(self) -> int:
        return sum(self.w)


def overlap_distances(W: OverlapVector) -> tuple[int, int, int, int]:
    """(d(r,r'), d(r,s), d(r',s'), d(s,s'))."""
    w = W.w
    D = w[4] + w[5] + w[6] + w[7]
    d = w[2] + w[3] + w[6] + w[7]
    dp = w[1] + w[3] + w[4] + w[6]
    delta = w[1] + w[2] + w[5] + w[6]
    return D, d, dp, delta


def overlap_multiplicity(W: OverlapVector) -> int:
    """N(W): number of ordered 4-tuples of n-bit assignments realising W."""
    n = W.n
    coef = math.factorial(n)
    for x in W.w:
        coef //= math.factorial(x)
    return (1 << n) * coef


def realize_overlap(W: OverlapVector) -> tuple[int, int, int, int]:
    """Four assignments (as ints, r = 0) with overlap vector W."""
    r = rp = s = sp = 0
    pos = 0
    for i, cnt in enumerate(W.w):
        _, a, b, c = _group_pattern(i)
        for _ in range(cnt):
            rp |= a << pos
            s |= b << pos
            sp |= c << pos
            pos += 1
    return r, rp, s, sp


def overlaps_matching(n: int, D: int, d: int, dp: int, delta: int):
    """All overlap vectors of length n with the given four distances."""
    out = []
    for w4 in range(D + 1):
        for w5 in range(D - w4 + 1):
            for w6 in range(D - w4 - w5 + 1):
                w7 = D - w4 - w5 - w6
                for w3 in range(n - D + 1):
                    w2 = d - w3 - w6 - w7
                    w1 = dp - w3 - w4 - w6
                    if w1 < 0 or w2 < 0:
                        continue
                    if w1 + w2 + w5 + w6 != delta:
                        continue
                    w0 = n - D - w1 - w2 - w3
                    if w0 < 0:
                        continue
                    out.append(OverlapVector((w0, w1, w2, w3, w4, w5, w6, w7)))
    return out


def _compositions(k: int, caps: tuple[int, ...]):
    if len(caps) == 1:
        if k <= caps[0]:
            yield (k,)
        return
    for a in range(min(k, caps[0]) + 1):
        for rest in _compositions(k - a, caps[1:]):
            yield (a,) + rest


@lru_cache(maxsize=4096)
def clause_subset_distribution(W: OverlapVector, k: int) -> np.ndarray:
    """Probability that one random clause conflicts with exactly the states in
    subset S, for S encoded as bits (r=1, r'=2, s=4, s'=8)."""
    n = W.n
    total = math.comb(n, k)
    pk = 2.0 ** -k
    out = np.zeros(16)
    for comp in _compositions(k, W.w):
        weight = 1.0
        for wi, ai in zip(W.w, comp):
            weight *= math.comb(wi, ai)
        weight /= total
        used = [i for i, a in enumerate(comp) if a]
        # states agreeing on every chosen variable are falsified together
        classes: dict[tuple[int, ...], int] = {}
        for st in range(4):
            key = tuple(_group_pattern(i)[st] for i in used)
            classes[key] = classes.get(key, 0) | (1 << st)
        for mask in classes.values():
            out[mask] += weight * pk
        out[0] += weight * (1.0 - len(classes) * pk)
    out.setflags(write=False)
    return out


def _check_m(params: EnsembleParams, m_limit: int) -> None:
    if params.m > m_limit:
        raise ResourceGuard(f"m={params.m} exceeds four-state limit {m_limit}")


@lru_cache(maxsize=16)
def _four_state_table_cached(W: OverlapVector, k: int, m: int) -> np.ndarray:
    L = m + 1
    pi = clause_subset_distribution(W, k)
    om = np.exp(-2j * np.pi * np.arange(L) / L)
    x = [om.reshape(tuple(L if b == a else 1 for b in range(4))) for a in range(4)]
    g = np.zeros((L,) * 4, dtype=complex)
    for mask in range(16):
        if pi[mask] == 0.0:
            continue
        term = pi[mask]
        for a in range(4):
            if mask >> a & 1:
                term = term * x[a]
        g = g + term
    table = np.fft.ifftn(g ** m).real
    np.clip(table, 0.0, 1.0, out=table)
    table.setflags(write=False)
    return table


def four_state_cost_table(params: EnsembleParams, W: OverlapVector,
                          m_limit: int = FOUR_STATE_M_LIMIT) -> np.ndarray:
    """Full joint law P(C, C', c, c' | W) as an (m+1)^4 array."""
    _check_m(params, m_limit)
    if W.n != params.n:
        raise InvalidParameters(f"overlap vector sums to {W.n}, expected n={params.n}")
    if (params.m + 1) ** 4 > _FULL_TABLE_CELLS:
        raise ResourceGuard("full four-state table too large; use four_state_cost_slice")
    return _four_state_table_cached(W, params.k, params.m)


@lru_cache(maxsize=64)
def _four_state_slice_cached(W: OverlapVector, k: int, m: int, C: int, Cp: int) -> np.ndarray:
    L = m + 1
    pi = clause_subset_distribution(W, k)
    om = np.exp(-2j * np.pi * np.arange(L) / L)
    x2 = om[:, None, None]
    x3 = om[None, :, None]
    x4 = om[None, None, :]
    back2 = om ** (-Cp) / L
    acc = np.zeros((L, L), dtype=complex)
    for i1 in range(L):
        x1 = om[i1]
        g = np.zeros((L, L, L), dtype=complex)
        for mask in range(16):
            if pi[mask] == 0.0:
                continue
            term = pi[mask] * (x1 if mask & 1 else 1.0)
            if mask & 2:
                term = term * x2
            if mask & 4:
                term = term * x3
            if mask & 8:
                term = term * x4
            g = g + term
        acc += (x1 ** (-C) / L) * np.tensordot(back2, g ** m, axes=(0, 0))
    out = np.fft.ifft2(acc).real
    np.clip(out, 0.0, 1.0, out=out)
    out.setflags(write=False)
    return out


def four_state_cost_slice(params: EnsembleParams, W: OverlapVector, C: int, Cp: int,
                          m_limit: int = FOUR_STATE_M_LIMIT) -> np.ndarray:
    """P(C, C', c, c' | W) over (c, c') for fixed (C, C')."""
    _check_m(params, m_limit)
    m = params.m
    if not (0 <= C <= m and 0 <= Cp <= m):
        return np.zeros((m + 1, m + 1))
    if (m + 1) ** 4 <= _FULL_TABLE_CELLS:
        return four_state_cost_table(params, W, m_limit)[C, Cp]
    return _four_state_slice_cached(W, params.k, m, C, Cp)


def four_state_cost_prob(params: EnsembleParams, W: OverlapVector, C: int, Cp: int,
                         c: int, cp: int, m_limit: int = FOUR_STATE_M_LIMIT) -> float:
    m = params.m
    if not all(0 <= x <= m for x in (C, Cp, c, cp)):
        return 0.0
    return float(four_state_cost_slice(params, W, C, Cp, m_limit)[c, cp])


def four_state_structure(params: EnsembleParams, D: int, d: int, dp: int, delta: int,
                         C: int, Cp: int, c: int, cp: int, *, normalize: bool = True,
                         m_limit: int = FOUR_STATE_M_LIMIT) -> float:
    """Ensemble count of (s, s') pairs in the given distance/cost relation.

    With ``normalize`` (default) the result is the expected number of such
    pairs per (r, r') pair at distance D with costs (C, C'). Otherwise it is
    the raw sum of N(W)·P(C,C',c,c'|W) over matching W.
    """
    n = params.n
    total = 0.0
    for W in overlaps_matching(n, D, d, dp, delta):
        total += overlap_multiplicity(W) * four_state_cost_prob(params, W, C, Cp, c, cp, m_limit)
    if not normalize:
        return total
    base = cost_prob(params, C) * pair_cost_prob(params, D, C, Cp)
    if base == 0.0:
        return 0.0
    return total / ((1 << n) * math.comb(n, D) * base)


def all_overlaps(n: int):
    """Every overlap vector for n variables (compositions of n into 8 parts)."""
    for cuts in itertools.combinations(range(n + 7), 7):
        prev = -1
        w = []
        for c in cuts:
            w.append(c - prev - 1)
            prev = c
        w.append(n + 7 - prev - 1)
        yield OverlapVector(tuple(w))
