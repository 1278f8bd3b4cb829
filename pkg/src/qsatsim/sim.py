"""Statevector simulation of one trial of the phase/mixing search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidParameters, ResourceGuard
from .schedules import PhaseSchedule, aa_schedule
from .sat import SatInstance

SIM_LIMIT = 26


def init_uniform(n: int, limit: int = SIM_LIMIT) -> np.ndarray:
    if n > limit:
        raise ResourceGuard(f"n={n} exceeds simulator limit {limit}")
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)


def _phase_table(slope: float, top: int) -> np.ndarray:
    return np.exp(1j * np.pi * slope * np.arange(top + 1))


def apply_cost_phase(psi: np.ndarray, costs: np.ndarray, rho: float, m: int | None = None,
                     out: np.ndarray | None = None) -> np.ndarray:
    """Multiply each amplitude by exp(i pi rho c(s)). ``costs`` is a cost table."""
    m = int(costs.max()) if m is None else m
    out = psi.copy() if out is None else out
    kernels.mul_phase(out, _phase_table(rho, m), costs)
    return out


def flip_solutions(psi: np.ndarray, costs: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    out = psi.copy() if out is None else out
    out[costs == 0] *= -1
    return out


def fast_walsh(psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Normalised Walsh-Hadamard transform, O(n 2^n)."""
    if out is None:
        out = np.array(psi, dtype=np.complex128, copy=True)
    kernels.fwht(out)
    return out


def apply_mixing(psi: np.ndarray, tau: float, out: np.ndarray | None = None) -> np.ndarray:
    """Walsh, phase exp(i pi tau |s|), Walsh."""
    n = psi.shape[0].bit_length() - 1
    out = fast_walsh(psi, out)
    kernels.mul_phase(out, _phase_table(tau, n), kernels.popcount_table(n))
    kernels.fwht(out)
    return out


def apply_diffusion(psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Inversion about the mean, u_d = -delta_d0 + 2^(1-n)."""
    out = psi.copy() if out is None else out
    mean = out.mean()
    out *= -1
    out += 2 * mean
    return out


def mixing_coefficients(n: int, tau: float) -> np.ndarray:
    """u_d, d = 0..n, of the mixing operator for phase slope tau."""
    half = np.pi * tau / 2
    c = np.cos(half)
    if abs(c) < 1e-12:
        raise InvalidParameters("tau is an odd integer: mixing coefficients degenerate")
    d = np.arange(n + 1)
    return (np.exp(1j * half) * c) ** n * (-1j * np.tan(half)) ** d


def dense_mixing(n: int, tau: float) -> np.ndarray:
    """Dense 2^n x 2^n matrix with entries u_{d(r,s)}; small n only."""
    u = mixing_coefficients(n, tau)
    idx = np.arange(1 << n)
    dist = kernels.popcount_table(n)[idx[:, None] ^ idx[None, :]]
    return u[dist]


def cost_histogram(psi: np.ndarray, costs: np.ndarray, m: int) -> np.ndarray:
    return kernels.cost_hist(psi, costs, m)


def measure(psi: np.ndarray, shots: int = 1, seed=None) -> np.ndarray:
    """Sample ``shots`` basis states (assignments) with probability |psi_s|^2."""
    if shots < 0:
        raise InvalidParameters("shots must be >= 0")
    p = np.abs(psi) ** 2
    p /= p.sum()
    return np.random.default_rng(seed).choice(p.size, size=shots, p=p)


@dataclass
class AmplitudeStats:
    mean: np.ndarray       # complex mean amplitude per cost
    rel_dev: np.ndarray    # std / |mean|; inf where the mean vanishes
    count: np.ndarray      # states per cost


def amplitude_stats(psi: np.ndarray, costs: np.ndarray, m: int) -> AmplitudeStats:
    count = np.bincount(costs, minlength=m + 1)
    safe = np.maximum(count, 1)
    mean = (np.bincount(costs, weights=psi.real, minlength=m + 1)
            + 1j * np.bincount(costs, weights=psi.imag, minlength=m + 1)) / safe
    # two-pass: E|psi - mean|^2 avoids cancellation when the spread is tiny
    var = np.bincount(costs, weights=np.abs(psi - mean[costs]) ** 2, minlength=m + 1) / safe
    absmean = np.abs(mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(absmean > 0, np.sqrt(var) / absmean, np.inf)
    rel[count == 0] = np.nan
    return AmplitudeStats(mean, rel, count)


@dataclass
class TrialResult:
    psoln: float
    psoln_by_step: np.ndarray                   # after h = 0..j steps
    histograms: np.ndarray | None = None         # (j+1, m+1)
    stats: list[AmplitudeStats] = field(default_factory=list)
    expected_cost: float = float("nan")         # sum_c c p(c) at the end


def run_trial(instance: SatInstance, schedule: PhaseSchedule, *,
              phase_costs: np.ndarray | None = None,
              success: np.ndarray | None = None,
              record_histograms: bool = False, record_stats: bool = False,
              limit: int = SIM_LIMIT) -> tuple[np.ndarray, TrialResult]:
    """Run one trial from the uniform superposition.

    ``phase_costs`` replaces the conflict count in the phase operator (e.g.
    the cost after a few GSAT moves); ``success`` selects which states count
    as a found solution. Both default to the instance's own cost table.
    """
    n, m = instance.n, instance.m
    if n > limit:
        raise ResourceGuard(f"n={n} exceeds simulator limit {limit}")
    costs = instance.cost_table(limit).astype(np.int64, copy=False)
    pcost = costs if phase_costs is None else np.asarray(phase_costs, dtype=np.int64)
    good = (costs == 0) if success is None else np.asarray(success, dtype=bool)
    pm = int(pcost.max()) if pcost.size else 0
    pops = kernels.popcount_table(n)

    psi = init_uniform(n, limit)
    j = schedule.j
    psoln = np.empty(j + 1)
    hists = np.empty((j + 1, m + 1)) if record_histograms else None
    stats = []

    def observe(h):
        psoln[h] = float(np.sum(np.abs(psi[good]) ** 2))
        if hists is not None:
            hists[h] = kernels.cost_hist(psi, costs, m)
        if record_stats:
            stats.append(amplitude_stats(psi, costs, m))

    observe(0)
    aa = schedule.kind == "aa"
    for h in range(j):
        if aa:
            psi[good] *= -1
            apply_diffusion(psi, out=psi)
        else:
            kernels.mul_phase(psi, _phase_table(schedule.rho[h], pm), pcost)
            kernels.fwht(psi)
            kernels.mul_phase(psi, _phase_table(schedule.tau[h], n), pops)
            kernels.fwht(psi)
        observe(h + 1)
    hist_final = hists[-1] if hists is not None else kernels.cost_hist(psi, costs, m)
    res = TrialResult(psoln=float(psoln[-1]), psoln_by_step=psoln, histograms=hists,
                      stats=stats,
                      expected_cost=float(np.dot(np.arange(m + 1), hist_final)))
    return psi, res


def aa_psoln_trace(instance: SatInstance, j: int) -> np.ndarray:
    """Simulated AA success probability after 0..j steps."""
    return run_trial(instance, aa_schedule(j))[1].psoln_by_step


def dense_step(n: int, costs: np.ndarray, rho: float, tau: float) -> np.ndarray:
    """Dense matrix of one phase+mixing step; oracle for small n."""
    return dense_mixing(n, tau) @ np.diag(np.exp(1j * np.pi * rho * costs))
