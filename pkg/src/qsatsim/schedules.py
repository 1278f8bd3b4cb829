"""Phase schedules and the closed-form amplitude-amplification costs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidParameters


@dataclass(frozen=True)
class LinearForm:
    """R(lam) = R0 + R1 (1 - lam), T(lam) = T0 + T1 (1 - lam)."""
    R0: float
    R1: float
    T0: float
    T1: float

    def R(self, lam):
        return self.R0 + self.R1 * (1.0 - np.asarray(lam, dtype=float))

    def T(self, lam):
        return self.T0 + self.T1 * (1.0 - np.asarray(lam, dtype=float))

    def as_tuple(self):
        return (self.R0, self.R1, self.T0, self.T1)


PAPER_FORM = LinearForm(4.86376, -4.18118, 1.2, 3.1)
ZERO_FORM = LinearForm(0.0, 0.0, 0.0, 0.0)

KINDS = ("linear", "aa", "custom")


@dataclass(frozen=True)
class PhaseSchedule:
    """Per-step phase slopes. For ``kind == "aa"`` the slopes are ignored and
    each step is the solution sign flip followed by inversion about the mean."""
    j: int
    rho: tuple[float, ...]
    tau: tuple[float, ...]
    kind: str = "custom"
    form: LinearForm | None = None
    overrides: tuple[tuple[int, float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameters(f"unknown schedule kind {self.kind!r}")
        if self.j < 0 or len(self.rho) != self.j or len(self.tau) != self.j:
            raise InvalidParameters("rho and tau must both have length j")

    def equivalent(self, other: "PhaseSchedule", atol: float = 1e-12) -> bool:
        """Same operators step by step, phases compared modulo 2."""
        if (self.kind == "aa") != (other.kind == "aa") or self.j != other.j:
            return False
        if self.kind == "aa":
            return True

        def close(a, b):
            diff = np.mod(np.asarray(a) - np.asarray(b) + 1.0, 2.0) - 1.0
            return bool(np.all(np.abs(diff) <= atol))

        return close(self.rho, other.rho) and close(self.tau, other.tau)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "j": self.j}
        if self.form is not None:
            d["coefficients"] = dict(zip(("R0", "R1", "T0", "T1"), self.form.as_tuple()))
        if self.overrides:
            d["overrides"] = [list(o) for o in self.overrides]
        if self.kind == "custom" and self.form is None:
            d["rho"] = list(self.rho)
            d["tau"] = list(self.tau)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseSchedule":
        kind = d.get("kind", "linear")
        j = int(d["j"])
        if kind == "aa":
            return aa_schedule(j)
        if "coefficients" in d:
            c = d["coefficients"]
            form = LinearForm(float(c["R0"]), float(c["R1"]), float(c["T0"]), float(c["T1"]))
            sched = linear_schedule(form, j)
        elif d.get("preset") == "paper":
            sched = linear_schedule(PAPER_FORM, j)
        else:
            sched = PhaseSchedule(j, tuple(map(float, d["rho"])), tuple(map(float, d["tau"])))
        if d.get("overrides"):
            sched = with_overrides(sched, [tuple(o) for o in d["overrides"]])
        return sched

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: Path) -> "PhaseSchedule":
        return cls.from_dict(json.loads(Path(path).read_text()))


def linear_schedule(form: LinearForm, j: int) -> PhaseSchedule:
    if j < 1:
        raise InvalidParameters("linear schedule needs j >= 1")
    lam = np.arange(j) / j
    rho = tuple(float(x) for x in form.R(lam) / j)
    tau = tuple(float(x) for x in form.T(lam) / j)
    return PhaseSchedule(j, rho, tau, kind="linear", form=form)


def aa_schedule(j: int) -> PhaseSchedule:
    if j < 0:
        raise InvalidParameters("j must be non-negative")
    return PhaseSchedule(j, (1.0,) * j, (1.0,) * j, kind="aa")


def with_overrides(schedule: PhaseSchedule,
                   overrides: Sequence[tuple[int, float, float]]) -> PhaseSchedule:
    """Replace (rho, tau) at the listed 1-based steps."""
    if not overrides:
        return schedule
    if schedule.kind == "aa":
        raise InvalidParameters("cannot override steps of an amplitude-amplification schedule")
    rho, tau = list(schedule.rho), list(schedule.tau)
    norm = []
    for h, r, t in overrides:
        h = int(h)
        if not 1 <= h <= schedule.j:
            raise InvalidParameters(f"override step {h} outside 1..{schedule.j}")
        rho[h - 1], tau[h - 1] = float(r), float(t)
        norm.append((h, float(r), float(t)))
    merged = {h: (h, r, t) for h, r, t in (*schedule.overrides, *norm)}
    return replace(schedule, rho=tuple(rho), tau=tuple(tau), kind="custom",
                   overrides=tuple(merged[h] for h in sorted(merged)))


def last_steps_overrides(j: int, values: Sequence[float]) -> list[tuple[int, float, float]]:
    """Pack flat (rho, tau, rho, tau, ...) values onto the final steps of a j-step trial."""
    nlast = len(values) // 2
    if nlast > j:
        raise InvalidParameters(f"{nlast} overridden steps but j={j}")
    return [(j - nlast + 1 + i, float(values[2 * i]), float(values[2 * i + 1]))
            for i in range(nlast)]


def default_steps(n: int) -> int:
    return n


SUBLINEAR_SCALE = 7.0


def sublinear_steps(n: int, scale: float = SUBLINEAR_SCALE, power: float = 0.2) -> int:
    """j = round(scale · n^power), at least 2.

    The default scale puts j near the point where the ``PAPER_FORM`` median
    Psoln reaches half its j = n value for n = 12..16.
    """
    return max(2, int(round(scale * n ** power)))


# --------------------------------------------------- amplitude amplification


def aa_theta(S: int, n: int) -> float:
    return math.asin(math.sqrt(S / 2.0 ** n))


def aa_psoln(S: int, n: int, j) -> float | np.ndarray:
    if S == 0:
        return 0.0 * np.asarray(j, dtype=float) if np.ndim(j) else 0.0
    if not 1 <= S <= 2 ** n:
        raise InvalidParameters(f"S={S} outside [1, 2^{n}]")
    th = aa_theta(S, n)
    out = np.sin((2 * np.asarray(j, dtype=float) + 1) * th) ** 2
    return float(out) if np.ndim(out) == 0 else out


def p_random(M: float, theta: float) -> float:
    """Mean of the AA success probability over j uniform in 0..M-1."""
    if M < 1:
        raise InvalidParameters("M must be at least 1")
    s2 = math.sin(2 * theta)
    if abs(s2) < 1e-15:
        # theta = pi/2: every measurement is a solution; theta = 0: none is
        return 1.0 if theta > 1.0 else 0.0
    return 0.5 - math.sin(4 * M * theta) / (4 * M * s2)


def boyer_m_sequence(n: int) -> list[float]:
    """M values visited by the unknown-S loop, ending at the cap."""
    cap = float(round(2.0 ** (n / 2)))
    seq = [1.0]
    while seq[-1] < cap:
        seq.append(min(cap, 6.0 * seq[-1] / 5.0))
    return seq


def boyer_expected_cost(S: int, n: int) -> float:
    """Expected total AA steps of the unknown-S loop started at M = 1."""
    if S < 1:
        raise InvalidParameters("no solutions: expected cost diverges")
    th = aa_theta(S, n)
    seq = boyer_m_sequence(n)
    cap = seq[-1]
    pr = p_random(cap, th)
    cost = (cap - 1) / (2 * pr)
    for M in reversed(seq[:-1]):
        cost = (M - 1) / 2 + (1 - p_random(M, th)) * cost
    return cost


def aa_known_cost(S: int, n: int) -> float:
    """(pi/4)·sqrt(2^n / S), the reference cost when S is known."""
    return math.pi / 4 * math.sqrt(2.0 ** n / S)


@dataclass
class BoyerRun:
    steps: int
    trials: int
    solved: bool


def run_boyer_loop(instance, seed: int, step_budget: int = 10_000_000) -> BoyerRun:
    """Sample the unknown-S loop on ``instance`` with simulated measurements."""
    from .sat import rng_for
    from .sim import aa_psoln_trace

    n = instance.n
    cap = float(round(2.0 ** (n / 2)))
    psoln = aa_psoln_trace(instance, int(cap))
    rng = rng_for(seed)
    M = 1.0
    steps = trials = 0
    while steps <= step_budget:
        j = min(int(rng.random() * M), int(math.ceil(M)) - 1)
        steps += j
        trials += 1
        if rng.random() < psoln[j]:
            return BoyerRun(steps, trials, True)
        M = min(cap, 6.0 * M / 5.0)
    return BoyerRun(steps, trials, False)
