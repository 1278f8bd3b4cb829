"""Mean-field descriptions of a trial.

Two continuum models in the progress variable lam = h/j:

* the average-amplitude model, a single complex ratio Z between average
  amplitudes of adjacent costs;
* the pair-correlation model, (Y, r, theta) with X = r e^{i theta} the cost
  ratio and Y the decay of correlations with distance.

Plus the discrete average-amplitude map that both approximate, driven by the
ensemble pair structure.

The r-equation of the pair model carries the factor (1 - p(1 - r^2))/(1 - p).
With that factor the model reduces to the average-amplitude model when Y = 1,
and the ``PAPER_FORM`` trajectory ends at r(1) = 0.399. ``variant="literal"``
swaps in nu/(1 - p) instead, which decays r about 2^k times more slowly near
r = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .ensemble import PairStructureTable, expected_state_counts
from .errors import IntegrationError, InvalidParameters
from .schedules import LinearForm, PhaseSchedule
from .sim import mixing_coefficients

DEFAULT_STEPS = 2000
R_FLOOR = 1e-6

PhaseFn = Callable[[float], float]


def _as_fns(form) -> tuple[PhaseFn, PhaseFn]:
    """Accept a LinearForm-like object (R, T methods) or an (R, T) pair."""
    if hasattr(form, "R") and hasattr(form, "T"):
        return (lambda lam: float(form.R(lam))), (lambda lam: float(form.T(lam)))
    R, T = form
    return R, T


def _rk4(rhs, y0, lam0: float, lam1: float, steps: int, check=None):
    h = (lam1 - lam0) / steps
    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float))
    lam = np.empty(steps + 1)
    ys = np.empty((steps + 1,) + y.shape, dtype=y.dtype)
    lam[0], ys[0] = lam0, y
    for i in range(steps):
        t = lam0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        lam[i + 1], ys[i + 1] = lam0 + (i + 1) * h, y
        if check is not None:
            check(lam[i + 1], y)
    return lam, ys


# ------------------------------------------------------ average-amplitude model


def chi_of(Z, p: float):
    a2 = np.abs(Z) ** 2
    return a2 * p / (1 - p * (1 - a2))


def z_rhs(k: int, mu: float, R: PhaseFn, T: PhaseFn):
    p = 2.0 ** -k

    def rhs(lam, Z):
        Z = complex(Z)
        a2 = abs(Z) ** 2
        chi = a2 * p / (1 - p * (1 - a2))
        # chi/Z = chi conj(Z)/|Z|^2, which vanishes with Z
        chi_over_Z = chi * Z.conjugate() / a2 if a2 > 0 else 0.0
        f = np.exp(-k * mu * (1 - Z) * (p * (1 - chi) / (1 - p) - chi_over_Z))
        return np.array(1j * np.pi * (R(lam) * Z - T(lam) / 2 * k * f * (1 - p * (1 - Z)) * (1 - Z) / (1 - p)))

    return rhs


@dataclass
class ZTrajectory:
    lam: np.ndarray
    Z: np.ndarray
    k: int
    mu: float

    @property
    def p(self):
        return 2.0 ** -self.k

    @property
    def chi(self):
        return chi_of(self.Z, self.p)

    @property
    def final(self) -> complex:
        return complex(self.Z[-1])

    def dominant_cost(self, m: int) -> np.ndarray:
        return self.chi * m


def integrate_Z(form, k: int, mu: float, steps: int = DEFAULT_STEPS,
                lam_end: float = 1.0) -> ZTrajectory:
    R, T = _as_fns(form)
    lam, Z = _rk4(z_rhs(k, mu, R, T), np.array(1.0 + 0j), 0.0, lam_end, steps)
    return ZTrajectory(lam, Z.astype(complex), k, mu)


# ------------------------------------------------------- pair-correlation model


def s_aux(r: float, theta: float, k: int, mu: float):
    """(nu, F, G, B) at the given r, theta."""
    p = 2.0 ** -k
    nu = p / (1 - p * (1 - r * r))
    F = math.exp(-nu * k * mu * (1 + r * r - 2 * r * math.cos(theta)))
    G = math.exp(nu * k * mu * ((1 + r * r) * math.cos(theta) - 2 * r))
    B = nu * k * mu * (r * r - 1) * math.sin(theta)
    return nu, F, G, B


def s_rhs(k: int, mu: float, R: PhaseFn, T: PhaseFn, variant: str = "consistent"):
    if variant not in ("consistent", "literal"):
        raise InvalidParameters(f"unknown variant {variant!r}")
    p = 2.0 ** -k
    literal = variant == "literal"

    def rhs(lam, y):
        Y, r, th = y
        nu, F, G, B = s_aux(r, th, k, mu)
        Tl, Rl = T(lam), R(lam)
        s = math.sin(th)
        dY = math.pi * Tl * (Y * Y * k * mu * F * nu / (1 - p) * (1 - r) * (1 + p * (k * r - 1)) * s
                             + G * math.sin(B))
        r_fac = nu / (1 - p) if literal else (1 - p * (1 - r * r)) / (1 - p)
        dr = -math.pi * Tl / 2 * k * Y * F * r_fac * s
        dth = math.pi * Rl - math.pi * Tl / (2 * r) * (
            G / Y * (math.cos(B - th) - r * r * math.cos(B + th))
            - F * Y * (k - 1) * (r - math.cos(th)))
        return np.array([dY, dr, dth])

    return rhs


@dataclass
class STrajectory:
    lam: np.ndarray
    Y: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    k: int
    mu: float

    @property
    def X(self):
        return self.r * np.exp(1j * self.theta)

    @property
    def nu(self):
        p = 2.0 ** -self.k
        return p / (1 - p * (1 - self.r ** 2))

    def dominant_cost(self, m: int) -> np.ndarray:
        return self.r ** 2 * self.nu * m

    @property
    def final(self) -> tuple[float, float, float]:
        return float(self.Y[-1]), float(self.r[-1]), float(self.theta[-1])


def _r_guard(lam, y):
    if y[1] < R_FLOOR or not np.all(np.isfinite(y)):
        raise IntegrationError(f"r fell below {R_FLOOR} (or diverged) at lam={lam:.6f}")


def integrate_S(form, k: int, mu: float, steps: int = DEFAULT_STEPS, lam_end: float = 1.0,
                variant: str = "consistent", adaptive: bool = False,
                rtol: float = 1e-10, atol: float = 1e-12) -> STrajectory:
    """Integrate (Y, r, theta) from (1, 1, 0).

    Fixed-step RK4 by default; ``adaptive`` switches to an embedded 8th-order
    scheme for forms with sharp features near the end. Raises
    :class:`IntegrationError` if r drops below ``R_FLOOR``.
    """
    R, T = _as_fns(form)
    rhs = s_rhs(k, mu, R, T, variant)
    y0 = np.array([1.0, 1.0, 0.0])
    if not adaptive:
        lam, ys = _rk4(rhs, y0, 0.0, lam_end, steps, check=_r_guard)
        return STrajectory(lam, ys[:, 0], ys[:, 1], ys[:, 2], k, mu)

    def floor_event(lam, y):
        return y[1] - R_FLOOR
    floor_event.terminal = True

    sol = solve_ivp(rhs, (0.0, lam_end), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=floor_event, dense_output=False,
                    t_eval=np.linspace(0.0, lam_end, steps + 1))
    if sol.status == 1:
        raise IntegrationError(f"r fell below {R_FLOOR} at lam={sol.t_events[0][0]:.6f}")
    if not sol.success:
        raise IntegrationError(sol.message)
    return STrajectory(sol.t, sol.y[0], sol.y[1], sol.y[2], k, mu)


# ------------------------------------------------------------- predictions


def predicted_psoln(r: float, k: int, m: int, n: int | None = None):
    """Solution probability when |psi_s|^2 is proportional to r^(2 c(s)).

    Returns (probability, rate) with rate = -ln(probability)/n, or None for
    the rate when n is not given.
    """
    p = 2.0 ** -k
    prob = ((1 - p) / (1 - p * (1 - r * r))) ** m
    rate = None if n is None else -math.log(prob) / n
    return prob, rate


def predicted_rate(r: float, k: int, mu: float) -> float:
    """Per-variable decay rate of the predicted solution probability."""
    p = 2.0 ** -k
    return -mu * math.log((1 - p) / (1 - p * (1 - r * r)))


def cost_distribution_for_ratio(a: float, k: int, m: int) -> np.ndarray:
    """p(c) = P(c) a^c / (1 - p(1 - a))^m."""
    from scipy import stats
    p = 2.0 ** -k
    c = np.arange(m + 1)
    return stats.binom.pmf(c, m, p) * a ** c / (1 - p * (1 - a)) ** m


def dominant_cost(state, m: int, k: int) -> float:
    """chi·m for a complex Z, r^2·nu·m for an (Y, r, theta) triple or r alone."""
    p = 2.0 ** -k
    if isinstance(state, complex):
        return float(chi_of(state, p) * m)
    r = state[1] if isinstance(state, (tuple, list, np.ndarray)) else float(state)
    nu = p / (1 - p * (1 - r * r))
    return float(r * r * nu * m)


# ------------------------------------------------------------ discrete map


def avg_amplitude_step(A: np.ndarray, rho: float, tau: float,
                       structure: PairStructureTable) -> np.ndarray:
    theta = structure.theta
    n = theta.shape[0] - 1
    if A.shape != (theta.shape[1],):
        raise InvalidParameters(f"A has shape {A.shape}, table expects ({theta.shape[1]},)")
    u = mixing_coefficients(n, tau)
    phase = np.exp(1j * np.pi * rho * np.arange(A.size))
    return np.einsum("d,dCc,c->C", u, theta, phase * A)


def run_avg_amplitude(structure: PairStructureTable, schedule: PhaseSchedule) -> np.ndarray:
    """Average amplitudes after 0..j steps, shape (j+1, m+1)."""
    n = structure.params.n
    A = np.full(structure.theta.shape[1], 2.0 ** (-n / 2), dtype=complex)
    out = [A]
    for rho, tau in zip(schedule.rho, schedule.tau):
        A = avg_amplitude_step(A, rho, tau, structure)
        out.append(A)
    return np.array(out)


def avg_amplitude_psoln(structure: PairStructureTable, A: np.ndarray) -> float:
    v = expected_state_counts(structure.params)
    return float(v[0] * abs(A[0]) ** 2)


def extract_Z(A: np.ndarray, structure: PairStructureTable, width: float = 2.0) -> complex:
    """Least-squares ratio A_{C+1}/A_C over costs within ``width`` std of the dominant cost."""
    v = expected_state_counts(structure.params)
    w = v * np.abs(A) ** 2
    w = w / w.sum()
    c = np.arange(A.size)
    mean = float(np.dot(w, c))
    sd = math.sqrt(max(float(np.dot(w, (c - mean) ** 2)), 0.0))
    lo = max(0, int(math.floor(mean - width * sd)))
    hi = min(A.size - 2, int(math.ceil(mean + width * sd)))
    if hi < lo:
        lo = hi = max(0, min(A.size - 2, int(round(mean))))
    a, b = A[lo:hi + 1], A[lo + 1:hi + 2]
    return complex(np.vdot(a, b) / np.vdot(a, a).real)


# --------------------------------------------------------- boundary search


@dataclass(frozen=True)
class SpikeForm:
    """Linear form plus an end term a/(1 - lam + eps) added to R."""
    base: LinearForm
    a: float
    eps: float

    def R(self, lam):
        return float(self.base.R(lam)) + self.a / (1.0 - lam + self.eps)

    def T(self, lam):
        return float(self.base.T(lam))


@dataclass
class BoundaryResult:
    coefficients: np.ndarray
    r1: float
    converged: bool
    linear_decay: bool   # r(lam) roughly proportional to 1 - lam near the end
    evaluations: int


def _r1(form, k, mu, steps, adaptive) -> float:
    # a trajectory that hits the r floor early is outside the model: infeasible
    try:
        return float(integrate_S(form, k, mu, steps=steps, adaptive=adaptive).r[-1])
    except IntegrationError:
        return float("inf")


def _decays_linearly(form, k, mu, steps, adaptive) -> bool:
    try:
        tr = integrate_S(form, k, mu, steps=steps, adaptive=adaptive)
    except IntegrationError:
        return False
    tail = tr.lam >= 0.9
    x = 1.0 - tr.lam[tail]
    y = tr.r[tail]
    if y[-1] > 0.05:
        return False
    slope = np.polyfit(x, y, 1)
    fit = np.polyval(slope, x)
    return bool(slope[0] > 0 and np.max(np.abs(fit - y)) < 0.25 * max(y.max(), 1e-9))


def boundary_search_r1(k: int, mu: float, family: str = "linear", x0=None,
                       bounds=None, budget: int = 300, seed: int = 0,
                       restarts: int = 1, steps: int = 1000, eps: float = 0.02,
                       screen: bool = True, screen_steps: int = 300,
                       screen_iters: int = 40, screen_popsize: int = 10,
                       adaptive: bool = False) -> BoundaryResult:
    """Minimise r(1) over a family of phase functions.

    ``family="linear"`` varies (R0, R1, T0, T1); ``family="spike"`` varies
    (R0, R1, T0, T1, a) with R gaining a/(1 - lam + eps). A seeded
    differential-evolution screen on a coarse grid picks the start, then
    bounded Nelder-Mead polishes at full resolution. Without the screen the
    search is local to ``x0``.
    """
    from .optimizer import minimize_bounded

    if family == "linear":
        x0 = np.array(PAPER_DEFAULT if x0 is None else x0, dtype=float)
        bounds = bounds or [(-8, 8), (-8, 8), (0, 6), (0, 6)]
        make = lambda x: LinearForm(*x)
    elif family == "spike":
        x0 = np.array(list(PAPER_DEFAULT) + [0.1] if x0 is None else x0, dtype=float)
        bounds = bounds or [(-8, 8), (-8, 8), (0, 6), (0, 6), (-2, 2)]
        make = lambda x: SpikeForm(LinearForm(*x[:4]), x[4], eps)
    else:
        raise InvalidParameters(f"unknown family {family!r}")

    screened = 0
    if screen:
        coarse = lambda x: min(_r1(make(x), k, mu, screen_steps, False), 1e3)
        de = optimize.differential_evolution(coarse, bounds, seed=seed, maxiter=screen_iters,
                                             popsize=screen_popsize, tol=1e-8, polish=False,
                                             x0=x0)
        screened = int(de.nfev)
        x0 = de.x
    res = minimize_bounded(lambda x: _r1(make(x), k, mu, steps, adaptive), x0, bounds,
                           budget=budget, seed=seed, restarts=restarts)
    best_form = make(res.x)
    return BoundaryResult(res.x, res.value, res.converged,
                          _decays_linearly(best_form, k, mu, steps, adaptive),
                          res.evaluations + screened)


PAPER_DEFAULT = (4.86376, -4.18118, 1.2, 3.1)
