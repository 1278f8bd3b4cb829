"""Random k-SAT instances, costs, distances, exact counting and DIMACS I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimacsParseError, InvalidParameters, ResourceGuard, UnsupportedInstance

ENUMERATION_LIMIT = 26


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    k: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise InvalidParameters(f"n and k must be positive, got n={self.n}, k={self.k}")
        if self.k > self.n:
            raise InvalidParameters(f"k={self.k} exceeds n={self.n}")
        if self.m < 0:
            raise InvalidParameters(f"m must be non-negative, got {self.m}")

    @property
    def mu(self) -> float:
        return self.m / self.n

    @property
    def p(self) -> float:
        return 2.0 ** -self.k

    @property
    def n_clauses(self) -> int:
        """Number of distinct clauses, C(n,k)·2^k."""
        return math.comb(self.n, self.k) * 2 ** self.k

    @classmethod
    def from_mu(cls, n: int, k: int, mu: float) -> "EnsembleParams":
        return cls(n, k, int(math.floor(mu * n + 1e-9)))


@dataclass(frozen=True)
class Clause:
    vars: tuple[int, ...]
    signs: tuple[bool, ...]  # True = negated literal

    def __post_init__(self):
        if len(self.vars) != len(self.signs):
            raise InvalidParameters("vars and signs differ in length")
        if len(set(self.vars)) != len(self.vars):
            raise InvalidParameters(f"repeated variable in clause {self.vars}")

    def masks(self) -> tuple[int, int]:
        vm = nm = 0
        for v, neg in zip(self.vars, self.signs):
            vm |= 1 << v
            if neg:
                nm |= 1 << v
        return vm, nm


@dataclass(frozen=True)
class SatInstance:
    params: EnsembleParams
    clauses: tuple[Clause, ...]
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.clauses) != self.params.m:
            raise InvalidParameters(
                f"expected {self.params.m} clauses, got {len(self.clauses)}")
        for c in self.clauses:
            if len(c.vars) != self.params.k:
                raise InvalidParameters(f"clause {c.vars} does not have k={self.params.k} literals")
            if any(v < 0 or v >= self.params.n for v in c.vars):
                raise InvalidParameters(f"clause {c.vars} references a variable outside [0, n)")

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def k(self) -> int:
        return self.params.k

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(vars, negated) as (m, k) arrays."""
        k = self.params.k
        v = np.array([c.vars for c in self.clauses], dtype=np.int64).reshape(-1, k)
        s = np.array([c.signs for c in self.clauses], dtype=np.uint8).reshape(-1, k)
        return v, s

    @cached_property
    def masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-clause (variable mask, negation mask) as int64 arrays."""
        if self.n > 62:
            raise UnsupportedInstance("bitmask form needs n <= 62")
        pairs = [c.masks() for c in self.clauses]
        vm = np.array([p[0] for p in pairs], dtype=np.int64)
        nm = np.array([p[1] for p in pairs], dtype=np.int64)
        return vm, nm

    @cached_property
    def occurrences(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR occurrence lists: (ptr, clause index, negated) grouped by variable."""
        v, s = self.arrays
        flat_v = v.ravel()
        order = np.argsort(flat_v, kind="stable")
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(flat_v, minlength=self.n), out=ptr[1:])
        clause_idx = np.repeat(np.arange(self.m, dtype=np.int64), self.k)[order]
        return ptr, clause_idx, s.ravel()[order].copy()

    def cost_table(self, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
        """Conflict count of every assignment, indexed by its bit pattern."""
        if self.n > limit:
            raise ResourceGuard(f"n={self.n} exceeds enumeration limit {limit}")
        return self._cost_table

    @cached_property
    def _cost_table(self) -> np.ndarray:
        vm, nm = self.masks
        table = kernels.cost_table(self.n, vm, nm)
        table.setflags(write=False)
        return table


# ----------------------------------------------------------------- assignments


def as_bits(s, n: int | None = None) -> np.ndarray:
    """Coerce an int bit pattern or a bool/int sequence to a uint8 vector."""
    if isinstance(s, (int, np.integer)):
        if n is None:
            raise ValueError("n is required for an integer assignment")
        return ((int(s) >> np.arange(n)) & 1).astype(np.uint8)
    return np.asarray(s, dtype=bool).astype(np.uint8)


def bits_to_int(bits) -> int:
    bits = np.asarray(bits, dtype=np.int64)
    return int((bits << np.arange(bits.size)).sum())


def cost(instance: SatInstance, s) -> int:
    """Number of clauses every literal of which is false under ``s``."""
    bits = as_bits(s, instance.n)
    if bits.size != instance.n:
        raise ValueError(f"assignment has {bits.size} bits, instance has n={instance.n}")
    if instance.m == 0:
        return 0
    v, neg = instance.arrays
    return int(np.all(bits[v] == neg, axis=1).sum())


def hamming(r, s) -> int:
    if isinstance(r, (int, np.integer)) and isinstance(s, (int, np.integer)):
        return int(r ^ s).bit_count()
    r, s = np.asarray(r, dtype=bool), np.asarray(s, dtype=bool)
    if r.shape != s.shape:
        raise ValueError("assignments differ in length")
    return int(np.count_nonzero(r != s))


def count_solutions(instance: SatInstance, limit: int = ENUMERATION_LIMIT) -> int:
    if instance.m == 0:
        if instance.n > limit:
            raise ResourceGuard(f"n={instance.n} exceeds enumeration limit {limit}")
        return 1 << instance.n
    return int(np.count_nonzero(instance.cost_table(limit) == 0))


# ------------------------------------------------------------------ generation


def sample_clauses(rng: np.random.Generator, n: int, k: int, size: int):
    """Draw ``size`` uniform clauses; returns (vars (size,k), negated (size,k))."""
    keys = rng.random((size, n))
    vars_ = np.sort(np.argpartition(keys, k - 1, axis=1)[:, :k], axis=1) if k < n \
        else np.tile(np.arange(n), (size, 1))
    neg = rng.integers(0, 2, size=(size, k), dtype=np.uint8)
    return vars_, neg


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def generate_instance(params: EnsembleParams, seed: int) -> SatInstance:
    rng = rng_for(seed)
    vars_, neg = sample_clauses(rng, params.n, params.k, params.m)
    clauses = tuple(
        Clause(tuple(int(x) for x in v), tuple(bool(x) for x in s))
        for v, s in zip(vars_, neg))
    return SatInstance(params, clauses, seed=int(seed))


def instance_seed(base_seed: int, *key: int) -> int:
    """Independent 64-bit seed for the stream identified by ``key``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------- DIMACS


def emit_dimacs(instance: SatInstance, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"c {ln}" for ln in comment.splitlines())
    lines.append(f"p cnf {instance.n} {instance.m}")
    for c in instance.clauses:
        lits = [-(v + 1) if neg else v + 1 for v, neg in zip(c.vars, c.signs)]
        lines.append(" ".join(map(str, lits)) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> SatInstance:
    header = None
    tokens: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise DimacsParseError(f"malformed header: {raw!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError as e:
                raise DimacsParseError(f"malformed header: {raw!r}") from e
            continue
        if header is None:
            raise DimacsParseError("clause before 'p cnf' header")
        try:
            tokens.extend(int(t) for t in line.split())
        except ValueError as e:
            raise DimacsParseError(f"non-integer literal in {raw!r}") from e
    if header is None:
        raise DimacsParseError("missing 'p cnf' header")
    n, m = header
    raw_clauses: list[list[int]] = []
    cur: list[int] = []
    for t in tokens:
        if t == 0:
            raw_clauses.append(cur)
            cur = []
        else:
            if abs(t) > n:
                raise DimacsParseError(f"literal {t} out of range for n={n}")
            cur.append(t)
    if cur:
        raw_clauses.append(cur)
    if len(raw_clauses) != m:
        raise DimacsParseError(f"header declares {m} clauses, found {len(raw_clauses)}")
    widths = {len(c) for c in raw_clauses}
    if len(widths) > 1:
        raise UnsupportedInstance(f"clauses have mixed widths {sorted(widths)}")
    k = widths.pop() if widths else 1
    clauses = []
    for lits in raw_clauses:
        vars_ = tuple(abs(x) - 1 for x in lits)
        if len(set(vars_)) != len(vars_):
            raise UnsupportedInstance(f"repeated variable in clause {lits}")
        clauses.append(Clause(vars_, tuple(x < 0 for x in lits)))
    return SatInstance(EnsembleParams(n, k, m), tuple(clauses))


def write_instance(instance: SatInstance, path: Path, solutions: int | None = None) -> None:
    """DIMACS file plus a ``.json`` sidecar with n, k, m, seed and solution count."""
    path = Path(path)
    path.write_text(emit_dimacs(instance))
    meta = {"n": instance.n, "k": instance.k, "m": instance.m,
            "seed": instance.seed, "solutions": solutions}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")


def read_instance(path: Path) -> SatInstance:
    path = Path(path)
    inst = parse_dimacs(path.read_text())
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
        if meta.get("seed") is not None:
            inst = SatInstance(inst.params, inst.clauses, seed=int(meta["seed"]))
    return inst


def from_lists(n: int, clauses: Sequence[Sequence[int]]) -> SatInstance:
    """Build an instance from 1-based signed literals, DIMACS style."""
    k = len(clauses[0]) if clauses else 1
    cl = tuple(Clause(tuple(abs(x) - 1 for x in c), tuple(x < 0 for x in c)) for c in clauses)
    return SatInstance(EnsembleParams(n, k, len(cl)), cl)
