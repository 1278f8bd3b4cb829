"""GSAT local search: the randomized baseline with restarts, a deterministic
single-step rule, and the GSAT-informed cost used to adjust phases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidParameters
from .sat import SatInstance, as_bits, bits_to_int, rng_for

DEFAULT_INFORMED_STEPS = 3


@dataclass(frozen=True)
class GsatConfig:
    """``max_steps_per_try=None`` means 2n. ``max_restarts=None`` keeps
    restarting until ``step_budget`` moves have been made."""
    max_steps_per_try: int | None = None
    max_restarts: int | None = None
    step_budget: int = 10_000_000
    seed: int = 0
    strict: bool = False

    def __post_init__(self):
        if self.max_steps_per_try is not None and self.max_steps_per_try < 1:
            raise InvalidParameters("max_steps_per_try must be at least 1")
        if self.max_restarts is not None and self.max_restarts < 0:
            raise InvalidParameters("max_restarts must be non-negative")
        if self.step_budget < 0:
            raise InvalidParameters("step_budget must be non-negative")

    def steps_per_try(self, n: int) -> int:
        return 2 * n if self.max_steps_per_try is None else self.max_steps_per_try


@dataclass
class GsatResult:
    solved: bool
    steps: int                 # moves, summed over tries
    best_cost: int
    tries: int
    neighbor_evaluations: int  # n per move
    assignment: np.ndarray     # final assignment of the last try


def gsat_run(instance: SatInstance, config: GsatConfig = GsatConfig()) -> GsatResult:
    """Random restarts of greedy descent, ties broken uniformly at random.

    Each try draws its starting bits and its tie-break uniforms up front, so
    both kernel backends consume the same random stream.
    """
    n = instance.n
    per_try = config.steps_per_try(n)
    v, neg = instance.arrays
    ptr, occ_c, occ_neg = instance.occurrences
    rng = rng_for(config.seed)
    steps = tries = 0
    best = instance.m
    assign = np.zeros(n, dtype=np.uint8)
    while True:
        if config.max_restarts is not None and tries > config.max_restarts:
            break
        remaining = config.step_budget - steps
        if remaining <= 0 and tries > 0:
            break
        assign = rng.integers(0, 2, size=n, dtype=np.uint8)
        uniforms = rng.random(per_try)
        limit = min(per_try, max(remaining, 0))
        c, moved, seen = kernels.gsat_try(v, neg, ptr, occ_c, occ_neg, assign, uniforms,
                                          limit, config.strict)
        tries += 1
        steps += int(moved)
        best = min(best, int(seen))
        if c == 0:
            return GsatResult(True, steps, 0, tries, steps * n, assign)
    return GsatResult(False, steps, best, tries, steps * n, assign)


def _neighbor_costs(instance: SatInstance, bits: np.ndarray) -> np.ndarray:
    n = instance.n
    if instance.m == 0:
        return np.zeros(n, dtype=np.int64)
    v, neg = instance.arrays
    nb = np.broadcast_to(bits, (n, n)) ^ np.eye(n, dtype=np.uint8)
    return np.all(nb[:, v] == neg, axis=2).sum(axis=1)


def gsat_step_deterministic(instance: SatInstance, s, strict: bool = False):
    """One move to the first minimum-cost neighbor in variable order.

    Moves sideways to an equal-cost neighbor unless ``strict``; stays put at a
    solution or when every neighbor is worse. Returns the same type as ``s``
    (int or bit array).
    """
    bits = as_bits(s, instance.n)
    here = int(np.all(bits[instance.arrays[0]] == instance.arrays[1], axis=1).sum()) \
        if instance.m else 0
    out = bits
    if here > 0:
        nc = _neighbor_costs(instance, bits)
        i = int(np.argmin(nc))
        if nc[i] < here or (not strict and nc[i] == here):
            out = bits.copy()
            out[i] ^= 1
    return bits_to_int(out) if isinstance(s, (int, np.integer)) else out


def gsat_informed_cost(instance: SatInstance, s, t: int = DEFAULT_INFORMED_STEPS,
                       strict: bool = False) -> int:
    """Cost after ``t`` deterministic GSAT steps from ``s``."""
    if t < 0:
        raise InvalidParameters("t must be non-negative")
    for _ in range(t):
        nxt = gsat_step_deterministic(instance, s, strict)
        if np.array_equal(as_bits(nxt, instance.n), as_bits(s, instance.n)):
            break
        s = nxt
    bits = as_bits(s, instance.n)
    if instance.m == 0:
        return 0
    v, neg = instance.arrays
    return int(np.all(bits[v] == neg, axis=1).sum())


def gsat_endpoints(instance: SatInstance, t: int = DEFAULT_INFORMED_STEPS,
                   strict: bool = False) -> np.ndarray:
    """State reached from every s after ``t`` deterministic steps."""
    if t < 0:
        raise InvalidParameters("t must be non-negative")
    return kernels.gsat_descend_all(instance.cost_table(), instance.n, t, strict)


def gsat_informed_table(instance: SatInstance, t: int = DEFAULT_INFORMED_STEPS,
                        strict: bool = False) -> np.ndarray:
    """``gsat_informed_cost`` for all 2^n states, as a cost table."""
    table = instance.cost_table()
    return np.asarray(table, dtype=np.int64)[gsat_endpoints(instance, t, strict)]
