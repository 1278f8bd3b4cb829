"""Experiment driver: soluble samples, per-instance records, statistics and
data files."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import InvalidParameters
from .gsat import DEFAULT_INFORMED_STEPS, GsatConfig, gsat_informed_table, gsat_run
from .sat import EnsembleParams, SatInstance, count_solutions, generate_instance, instance_seed
from .schedules import (PAPER_FORM, LinearForm, PhaseSchedule, aa_known_cost, aa_psoln,
                        aa_theta, boyer_expected_cost, last_steps_overrides, linear_schedule,
                        SUBLINEAR_SCALE, sublinear_steps, with_overrides)
from .sim import run_trial

log = logging.getLogger(__name__)

METHODS = ("quantum", "aa-known-s", "aa-boyer", "gsat", "quantum-gsat-informed")
RECORD_HEADER = "# qsatsim-records v1"
RECORD_FIELDS = ("n", "m", "seed", "S", "method", "j", "psoln", "cost", "evals", "error")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format(float(x), ".12g")


# ------------------------------------------------------------------ schedules


@dataclass(frozen=True)
class ScheduleSpec:
    """How to build the schedule for a given n.

    ``steps`` is "n", "sublinear" or an integer multiple of n; ``last`` holds
    flat (rho, tau, ...) overrides for the final steps.
    """
    form: LinearForm = PAPER_FORM
    steps: str | int = "n"
    last: tuple[float, ...] = ()
    sublinear_scale: float = SUBLINEAR_SCALE
    sublinear_power: float = 0.2

    def steps_for(self, n: int) -> int:
        if self.steps == "n":
            return n
        if self.steps == "sublinear":
            return sublinear_steps(n, self.sublinear_scale, self.sublinear_power)
        if isinstance(self.steps, (int, np.integer)) and self.steps >= 1:
            return int(self.steps) * n
        raise InvalidParameters(f"bad steps rule {self.steps!r}")

    def build(self, n: int) -> PhaseSchedule:
        j = self.steps_for(n)
        sched = linear_schedule(self.form, j)
        if self.last:
            sched = with_overrides(sched, last_steps_overrides(j, self.last))
        return sched

    @classmethod
    def from_dict(cls, d: dict | None) -> "ScheduleSpec":
        if not d:
            return cls()
        if d.get("preset", "paper") != "paper" and "coefficients" not in d:
            raise InvalidParameters(f"unknown schedule preset {d.get('preset')!r}")
        form = PAPER_FORM
        if "coefficients" in d:
            c = d["coefficients"]
            form = LinearForm(*(float(c[key]) for key in ("R0", "R1", "T0", "T1")))
        return cls(form=form, steps=d.get("steps", "n"),
                   last=tuple(float(v) for v in d.get("last", ())),
                   sublinear_scale=float(d.get("sublinear_scale", SUBLINEAR_SCALE)),
                   sublinear_power=float(d.get("sublinear_power", 0.2)))

    def to_dict(self) -> dict:
        d = {"coefficients": dict(zip(("R0", "R1", "T0", "T1"), self.form.as_tuple())),
             "steps": self.steps}
        if self.last:
            d["last"] = list(self.last)
        if self.steps == "sublinear":
            d["sublinear_scale"] = self.sublinear_scale
            d["sublinear_power"] = self.sublinear_power
        return d


# --------------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    method: str
    ns: tuple[int, ...]
    samples: int
    k: int = 3
    mu: float = 4.25
    soluble_only: bool = True
    seed: int = 0
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    gsat: GsatConfig = field(default_factory=GsatConfig)
    informed_steps: int = DEFAULT_INFORMED_STEPS
    records: str | None = None
    histograms: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameters(f"unknown method {self.method!r}")
        if self.samples < 1:
            raise InvalidParameters("samples must be at least 1")
        if not self.ns or list(self.ns) != sorted(self.ns) or min(self.ns) < 1:
            raise InvalidParameters("ns must be a nonempty ascending list of positive sizes")
        if self.informed_steps < 0:
            raise InvalidParameters("informed_steps must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        try:
            ns = d.pop("ns", None)
            if ns is None:
                ns = [d.pop("n")]
            elif isinstance(ns, dict):
                ns = list(range(int(ns["start"]), int(ns["stop"]) + 1, int(ns.get("step", 1))))
            sched = ScheduleSpec.from_dict(d.pop("schedule", None))
            g = d.pop("gsat", None) or {}
            gcfg = GsatConfig(**g)
            return cls(method=d.pop("method"), ns=tuple(int(x) for x in ns),
                       samples=int(d.pop("samples")), schedule=sched, gsat=gcfg, **d)
        except (KeyError, TypeError) as exc:
            raise InvalidParameters(f"bad experiment config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ns"] = list(self.ns)
        d["schedule"] = self.schedule.to_dict()
        return d


# -------------------------------------------------------------------- samples


@dataclass(frozen=True)
class SampleItem:
    instance: SatInstance
    S: int


def clause_counts(n: int, mu: float) -> tuple[int, int]:
    """(m_low, m_high): equal when mu*n is integral, else floor and floor + 1."""
    lo = int(math.floor(mu * n + 1e-9))
    return (lo, lo) if abs(mu * n - lo) < 1e-9 else (lo, lo + 1)


def sample_instances(n: int, count: int, *, k: int = 3, mu: float = 4.25, seed: int = 0,
                     soluble_only: bool = True, max_attempts: int | None = None
                     ) -> list[SampleItem]:
    """Draw ``count`` instances at size n.

    Candidate a uses seed ``instance_seed(seed, n, a)``. When mu*n is not an
    integer, accepted instances alternate between the two neighbouring clause
    counts so half the sample has each.
    """
    if count < 1:
        raise InvalidParameters("count must be at least 1")
    lo, hi = clause_counts(n, mu)
    out: list[SampleItem] = []
    a = 0
    limit = max_attempts if max_attempts is not None else 50 * count + 100
    while len(out) < count:
        if a >= limit:
            raise InvalidParameters(f"only {len(out)} soluble instances in {a} attempts")
        m = hi if len(out) % 2 else lo
        s = instance_seed(seed, n, a)
        inst = generate_instance(EnsembleParams(n, k, m), s)
        a += 1
        S = count_solutions(inst)
        if soluble_only and S == 0:
            continue
        out.append(SampleItem(inst, S))
    return out


# -------------------------------------------------------------------- records


@dataclass
class Record:
    n: int
    m: int
    seed: int
    S: int
    method: str
    j: int
    psoln: float
    cost: float
    evals: int | None = None
    error: str = ""

    def row(self) -> list[str]:
        return [fmt(self.n), fmt(self.m), fmt(self.seed), fmt(self.S), self.method,
                fmt(self.j), fmt(self.psoln), fmt(self.cost), fmt(self.evals), self.error]


def known_s_steps(S: int, n: int) -> int:
    """Step count maximising sin^2((2j+1) theta)."""
    th = aa_theta(S, n)
    return max(0, int(round(math.pi / (4 * th) - 0.5)))


def evaluate_instance(item: SampleItem, config: ExperimentConfig, index: int = 0) -> Record:
    inst, S = item.instance, item.S
    n, m = inst.n, inst.m
    base = dict(n=n, m=m, seed=int(inst.seed if inst.seed is not None else -1), S=S,
                method=config.method)
    try:
        if config.method == "aa-known-s":
            j = known_s_steps(S, n)
            return Record(**base, j=j, psoln=float(aa_psoln(S, n, j)), cost=aa_known_cost(S, n))
        if config.method == "aa-boyer":
            return Record(**base, j=0, psoln=1.0, cost=boyer_expected_cost(S, n))
        if config.method == "gsat":
            g = GsatConfig(config.gsat.max_steps_per_try, config.gsat.max_restarts,
                           config.gsat.step_budget, instance_seed(config.seed, n, index, 1),
                           config.gsat.strict)
            res = gsat_run(inst, g)
            return Record(**base, j=res.tries, psoln=float(res.solved),
                          cost=float(res.steps) if res.solved else math.inf,
                          evals=res.neighbor_evaluations)
        sched = config.schedule.build(n)
        if config.method == "quantum":
            psoln = run_trial(inst, sched)[1].psoln
            work = sched.j
        else:
            t = config.informed_steps
            table = gsat_informed_table(inst, t)
            # success: measuring a state from which t GSAT steps reach a solution
            psoln = run_trial(inst, sched, phase_costs=table, success=table == 0)[1].psoln
            work = sched.j * (1 + t)
        cost = work / psoln if psoln > 0 else math.inf
        return Record(**base, j=sched.j, psoln=psoln, cost=cost)
    except Exception as exc:  # recorded, not fatal
        log.warning("instance %d (n=%d) failed: %s", index, n, exc)
        return Record(**base, j=0, psoln=math.nan, cost=math.nan,
                      error=f"{type(exc).__name__}: {exc}")


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   samples: dict[int, list[SampleItem]] | None = None) -> list[Record]:
    """Records ordered by (n, instance index), independent of ``threads``."""
    records: list[Record] = []
    for n in config.ns:
        items = samples[n] if samples and n in samples else sample_instances(
            n, config.samples, k=config.k, mu=config.mu, seed=config.seed,
            soluble_only=config.soluble_only)
        work = list(enumerate(items))

        def one(pair):
            return evaluate_instance(pair[1], config, pair[0])

        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                records.extend(ex.map(one, work))
        else:
            records.extend(one(w) for w in work)
    return records


def records_csv(records: Iterable[Record]) -> str:
    buf = io.StringIO()
    buf.write(RECORD_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_records(records: Iterable[Record], path) -> None:
    Path(path).write_text(records_csv(records))


def read_records(path) -> list[Record]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        evals = row.get("evals") or None
        out.append(Record(int(row["n"]), int(row["m"]), int(row["seed"]), int(row["S"]),
                          row["method"], int(row["j"]), float(row["psoln"]),
                          float(row["cost"]), int(evals) if evals else None,
                          row.get("error", "") or ""))
    return out


# ----------------------------------------------------------------- statistics


def median_ci(values: Sequence[float], level: float = 0.95) -> tuple[float, float, float]:
    """Median with a distribution-free order-statistic interval.

    Uses x_(l), x_(N+1-l) with l the largest index whose binomial tail
    P(B <= l-1) stays within (1 - level)/2, B ~ Bin(N, 1/2).
    """
    x = np.sort(np.asarray(values, dtype=float))
    N = x.size
    if N == 0:
        raise InvalidParameters("median of an empty sample")
    med = float(np.median(x))
    if N < 6:
        warnings.warn("fewer than 6 values: interval is the full range", stacklevel=2)
        return med, float(x[0]), float(x[-1])
    alpha = 1.0 - level
    l = int(stats.binom.ppf(alpha / 2, N, 0.5))  # smallest l with cdf(l) >= alpha/2
    if l < 1:
        return med, float(x[0]), float(x[-1])
    return med, float(x[l - 1]), float(x[N - l])


@dataclass
class ExpFit:
    rate: float
    prefactor: float
    residuals: np.ndarray


def exp_fit(ns: Sequence[float], medians: Sequence[float]) -> ExpFit:
    """Least squares of ln(median) against n."""
    ns = np.asarray(ns, dtype=float)
    y = np.asarray(medians, dtype=float)
    if ns.size < 3 or ns.size != y.size:
        raise InvalidParameters("need at least 3 (n, median) pairs")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise InvalidParameters("medians must be positive and finite")
    slope, icept = np.polyfit(ns, np.log(y), 1)
    return ExpFit(float(slope), float(math.exp(icept)),
                  np.log(y) - (slope * ns + icept))


def summarize(records: Sequence[Record], level: float = 0.95) -> dict[str, list[tuple]]:
    """Per method: [(n, count, median, lo, hi), ...] of the cost column."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in records:
        if not r.error:
            groups.setdefault((r.method, r.n), []).append(r.cost)
    out: dict[str, list[tuple]] = {}
    for (method, n), costs in sorted(groups.items()):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            med, lo, hi = median_ci(costs, level)
        out.setdefault(method, []).append((n, len(costs), med, lo, hi))
    return out


def fit_records(records: Sequence[Record]) -> dict[str, ExpFit]:
    fits = {}
    for method, rows in summarize(records).items():
        if len(rows) >= 3:
            fits[method] = exp_fit([r[0] for r in rows], [r[2] for r in rows])
    return fits


# ----------------------------------------------------------------- data files


def histogram_rows(result) -> list[tuple[int, int, float, float]]:
    """(step, cost, probability, relative deviation) from a recorded trial."""
    rows = []
    hists = result.histograms
    for h in range(hists.shape[0]):
        rel = result.stats[h].rel_dev if result.stats else np.full(hists.shape[1], np.nan)
        for c in range(hists.shape[1]):
            rows.append((h, c, float(hists[h, c]), float(rel[c])))
    return rows


def write_histograms(result, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "cost", "probability", "rel_dev"])
        for h, c, p, rd in histogram_rows(result):
            w.writerow([h, c, fmt(p), fmt(rd)])


def trajectory_csv(z=None, s=None) -> str:
    """CSV of (lam, absZ, argZ, r, theta, Y); either model may be absent."""
    if z is None and s is None:
        raise InvalidParameters("nothing to write")
    lam = (z if z is not None else s).lam
    if z is not None and s is not None and not np.allclose(z.lam, s.lam):
        raise InvalidParameters("trajectories are on different grids")
    nan = np.full(lam.shape, np.nan)
    cols = [lam,
            np.abs(z.Z) if z is not None else nan,
            np.angle(z.Z) if z is not None else nan,
            s.r if s is not None else nan,
            s.theta if s is not None else nan,
            s.Y if s is not None else nan]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lam", "absZ", "argZ", "r", "theta", "Y"])
    for row in zip(*cols):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_trajectory(path, z=None, s=None) -> None:
    Path(path).write_text(trajectory_csv(z, s))


# --------------------------------------------------------------- optimization


def split_samples(n: int, train: int, test: int, *, k: int = 3, mu: float = 4.25,
                  seed: int = 0) -> tuple[list[SampleItem], list[SampleItem]]:
    """Training and held-out samples drawn from disjoint seed streams."""
    tr = sample_instances(n, train, k=k, mu=mu, seed=instance_seed(seed, 0))
    te = sample_instances(n, test, k=k, mu=mu, seed=instance_seed(seed, 1))
    if {i.instance.seed for i in tr} & {i.instance.seed for i in te}:
        raise InvalidParameters("training and test samples share an instance seed")
    return tr, te


def median_cost(items: Sequence[SampleItem], sched: PhaseSchedule) -> float:
    costs = []
    for it in items:
        ps = run_trial(it.instance, sched)[1].psoln
        costs.append(sched.j / ps if ps > 0 else math.inf)
    return float(np.median(costs))


def run_optimization(cfg: dict, seed: int = 0, threads: int = 1, trace_path=None) -> dict:
    """Tune a schedule family on a training sample and score it on a held-out one.

    Config keys: objective (default median-cost), family ("last-two" or
    "linear"), n, train, test, steps ("n" or "sublinear"), budget, restarts,
    k, mu, and optional base coefficients.
    """
    from .optimizer import (Objective, last_steps_bounds, last_steps_family,
                            last_steps_start, linear_bounds, linear_family, optimize)
    try:
        n = int(cfg["n"])
    except KeyError as exc:
        raise InvalidParameters("optimize config needs n") from exc
    k, mu = int(cfg.get("k", 3)), float(cfg.get("mu", 4.25))
    spec = ScheduleSpec.from_dict({k_: v for k_, v in cfg.items()
                                   if k_ in ("coefficients", "steps", "sublinear_scale",
                                             "sublinear_power")})
    j = spec.steps_for(n)
    train, test = split_samples(n, int(cfg.get("train", 50)), int(cfg.get("test", 50)),
                                k=k, mu=mu, seed=seed)
    family_name = cfg.get("family", "last-two")
    if family_name == "last-two":
        family = last_steps_family(spec.form, j, 2)
        x0, bounds = last_steps_start(spec.form, j, 2), last_steps_bounds(2)
    elif family_name == "linear":
        family = linear_family(j)
        x0, bounds = np.array(spec.form.as_tuple()), linear_bounds()
    else:
        raise InvalidParameters(f"unknown family {family_name!r}")
    obj = Objective(cfg.get("objective", "median-cost"), family,
                    [it.instance for it in train], k=k, mu=mu, threads=threads)
    res = optimize(obj, x0, bounds, budget=int(cfg.get("budget", 200)), seed=seed,
                   restarts=int(cfg.get("restarts", 1)))
    if trace_path:
        res.write_trace(Path(trace_path))
    best = family(res.x)
    baseline = linear_schedule(PAPER_FORM, n)
    return {"family": family_name, "x": res.x.tolist(), "train_value": res.value,
            "evaluations": res.evaluations, "converged": res.converged,
            "schedule": best.to_dict(),
            "test_median_cost": median_cost(test, best),
            "baseline_test_median_cost": median_cost(test, baseline)}
