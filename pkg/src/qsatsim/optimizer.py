"""Derivative-free tuning of phase parameters."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize as _spo

from .errors import InvalidParameters
from .sat import SatInstance, count_solutions
from .schedules import (LinearForm, PhaseSchedule, last_steps_overrides, linear_schedule,
                        with_overrides)

OBJECTIVE_KINDS = ("median-cost", "median-psoln", "expected-final-cost", "ode-r1")

R_BOUNDS = (-8.0, 8.0)
T_BOUNDS = (0.0, 6.0)
RHO_BOUNDS = (-1.0, 1.0)
TAU_BOUNDS = (0.0, 2.0)


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    trace: list[tuple[np.ndarray, float]]
    evaluations: int
    converged: bool

    def write_trace(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eval"] + [f"x{i}" for i in range(len(self.x))] + ["value"])
            for i, (x, v) in enumerate(self.trace):
                w.writerow([i] + [f"{c:.12g}" for c in x] + [f"{v:.12g}"])


class _BudgetSpent(Exception):
    pass


def minimize_bounded(fn: Callable[[np.ndarray], float], x0, bounds, *, budget: int = 200,
                     seed: int = 0, restarts: int = 0, xatol: float = 1e-8,
                     fatol: float = 1e-12) -> OptimizeResult:
    """Bounded Nelder-Mead with a hard evaluation budget and seeded restarts.

    Never returns a point worse than ``x0``; every evaluation lands in the trace.
    """
    if budget < 1:
        raise InvalidParameters("budget must be at least 1")
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(hi < lo):
        raise InvalidParameters("bounds must be finite and ordered")
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)
    trace: list[tuple[np.ndarray, float]] = []
    rng = np.random.default_rng(seed)

    def f(x):
        if len(trace) >= budget:
            raise _BudgetSpent
        x = np.clip(np.asarray(x, dtype=float), lo, hi)
        v = float(fn(x))
        if not np.isfinite(v):
            v = float("inf")
        trace.append((x.copy(), v))
        return v

    def best():
        i = int(np.argmin([v for _, v in trace]))
        return trace[i]

    f(x0)
    converged = False
    width = hi - lo
    for attempt in range(restarts + 1):
        start = best()[0]
        if attempt == 0:
            step = 0.05 * np.where(width > 0, width, 1.0)
        else:
            step = 0.1 * width * rng.uniform(0.5, 1.5, size=width.size)
        simplex = [start]
        for i in range(start.size):
            v = start.copy()
            v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
            simplex.append(v)
        try:
            res = _spo.minimize(f, start, method="Nelder-Mead",
                                bounds=list(zip(lo, hi)),
                                options={"initial_simplex": np.array(simplex),
                                         "maxfev": budget, "xatol": xatol, "fatol": fatol})
            converged = bool(res.success)
        except _BudgetSpent:
            converged = False
            break
    bx, bv = best()
    return OptimizeResult(bx, bv, trace, len(trace), converged)


# ----------------------------------------------------------------- families


def linear_family(j: int) -> Callable[[Sequence[float]], PhaseSchedule]:
    return lambda x: linear_schedule(LinearForm(*x), j)


def last_steps_family(form: LinearForm, j: int, nlast: int = 2):
    base = linear_schedule(form, j)

    def make(x):
        if len(x) != 2 * nlast:
            raise InvalidParameters(f"expected {2 * nlast} values, got {len(x)}")
        return with_overrides(base, last_steps_overrides(j, x))

    return make


def last_steps_start(form: LinearForm, j: int, nlast: int = 2) -> np.ndarray:
    s = linear_schedule(form, j)
    return np.array([v for h in range(j - nlast, j) for v in (s.rho[h], s.tau[h])])


def last_steps_bounds(nlast: int = 2):
    return [RHO_BOUNDS, TAU_BOUNDS] * nlast


def linear_bounds():
    return [R_BOUNDS, R_BOUNDS, T_BOUNDS, T_BOUNDS]


# --------------------------------------------------------------- objectives


@dataclass
class Objective:
    kind: str
    family: Callable
    instances: list[SatInstance] = field(default_factory=list)
    k: int = 3
    mu: float = 4.25
    threads: int = 1

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise InvalidParameters(f"unknown objective kind {self.kind!r}")
        if self.kind != "ode-r1" and not self.instances:
            raise InvalidParameters("simulator objectives need a nonempty sample")


def _trial(args):
    from .sim import run_trial
    inst, sched = args
    return run_trial(inst, sched)[1]


def evaluate_objective(obj: Objective, coefficients) -> float:
    """Scalar to minimise.

    median-cost: median of j/Psoln; median-psoln: minus the median Psoln;
    expected-final-cost: mean over the sample of sum_c c p(c); ode-r1: r(1).
    """
    x = np.asarray(coefficients, dtype=float)
    if obj.kind == "ode-r1":
        from .errors import IntegrationError
        from .meanfield import integrate_S
        try:
            return float(integrate_S(obj.family(x), obj.k, obj.mu).r[-1])
        except IntegrationError:
            return float("inf")
    sched = obj.family(x)
    work = [(inst, sched) for inst in obj.instances]
    if obj.threads > 1:
        with ThreadPoolExecutor(obj.threads) as ex:
            results = list(ex.map(_trial, work))
    else:
        results = [_trial(w) for w in work]
    if obj.kind == "median-cost":
        ps = np.array([r.psoln for r in results])
        with np.errstate(divide="ignore"):
            costs = np.where(ps > 0, sched.j / ps, np.inf)
        return float(np.median(costs))
    if obj.kind == "median-psoln":
        return -float(np.median([r.psoln for r in results]))
    return float(np.mean([r.expected_cost for r in results]))


def soluble_only(instances: Sequence[SatInstance]) -> list[SatInstance]:
    out = [i for i in instances if count_solutions(i) > 0]
    if not out:
        raise InvalidParameters("sample is empty after removing insoluble instances")
    return out


def optimize(objective: Objective, x0, bounds, budget: int = 200, seed: int = 0,
             restarts: int = 1) -> OptimizeResult:
    return minimize_bounded(lambda x: evaluate_objective(objective, x), x0, bounds,
                            budget=budget, seed=seed, restarts=restarts)


def write_best_schedule(result: OptimizeResult, family, path: Path) -> None:
    """Best parameters as a schedule file the CLI can load."""
    sched = family(result.x)
    d = sched.to_dict() if isinstance(sched, PhaseSchedule) else {
        "kind": "linear", "coefficients": dict(zip(("R0", "R1", "T0", "T1"), map(float, result.x)))}
    d["objective_value"] = result.value
    Path(path).write_text(json.dumps(d, indent=2) + "\n")
