"""Point-null tests, the marginalization paradox and tests with improper posteriors.

Closed forms are used where they exist; everything else goes through the
Renyi-state machinery so that improper posteriors are handled as ordinary
states conditioned on elementary windows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erfc, expit

from .bayes import UndeterminedMassError, posterior_state
from .measure import (DEFAULT_TOL, RenyiState, conditional_probability, states_equivalent,
                      window_mass)
from .windows import BaseMeasure, WindowSet
from .zoo import (LOG_SQRT_2PI, flat_slab, normal_location_scale_model, normal_point_mass_model,
                  uniform_slab)


def p_value(x: float, sigma: float = 1.0) -> float:
    """Two-sided p-value 2 Phi(-|x / sigma|) of the point null theta = 0."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return float(erfc(abs(x / sigma) / math.sqrt(2.0)))


def lindley_posterior_flat(x: float, sigma: float = 1.0) -> float:
    """pi(0 | x) under the flat prior c (delta_0 + d theta): [1 + sqrt(2 pi) sigma e^(x^2/2sigma^2)]^-1."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return float(expit(-(LOG_SQRT_2PI + math.log(sigma) + 0.5 * (x / sigma) ** 2)))


def scaled_prior_posterior(x: float, sigma: float = 1.0) -> float:
    """pi*(0 | x) for the prior pi*(0) = sigma, pi*(theta) = 1; depends on x / sigma only."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return float(expit(-(LOG_SQRT_2PI + 0.5 * (x / sigma) ** 2)))


def bayes_test_posterior(x: float, sigma: float, pi0: float,
                         slab: Callable[[np.ndarray], np.ndarray],
                         slab_support: WindowSet | None = None, tol: float = DEFAULT_TOL) -> float:
    """[1 + int f(x|theta) slab(theta) d theta / (f(x|0) pi0)]^-1 by quadrature.

    ``slab`` is the prior density off the atom, weight included.  A slab
    with compact support should pass it as ``slab_support`` so the
    quadrature sees the edges.  An infinite slab integral gives 0.
    """
    if not 0 < pi0:
        raise ValueError("pi0 must be positive")
    post = posterior_state(normal_point_mass_model(sigma, pi0, slab), x)
    cont = slab_support if slab_support is not None else WindowSet.interval(-np.inf, np.inf)
    cont = WindowSet(cont.include, cont.exclude, atoms=())
    m_cont = window_mass(post, cont, tol)
    if m_cont.is_undetermined:
        raise UndeterminedMassError("slab integral", m_cont)
    if m_cont.is_infinite:
        return 0.0
    log_atom = float(post.logpdf(np.array([0.0]))[0])
    return float(expit(log_atom - m_cont.log_value))


def window_prior_posterior(x: float, sigma: float, n: int, tol: float = DEFAULT_TOL) -> float:
    """Posterior of H0 under the proper prior pi*_n: atom 1/(1+2n), flat on |theta| <= n sigma.

    pi*_n is pi* conditioned on B_n = {0} + [-n sigma, n sigma], so the
    posterior probability is P(theta = 0 | B_n) for the pi* posterior state.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    post = posterior_state(normal_point_mass_model(sigma, sigma, flat_slab(1.0)), x)
    b = WindowSet.interval(-n * sigma, n * sigma, atoms=(0.0,))
    return conditional_probability(post, WindowSet.point(0.0), b, tol)


@dataclass(frozen=True)
class LowerBound:
    value: float
    k: float  # minimizing slab half-width


def unimodal_lower_bound(x: float, sigma: float = 1.0, k_range=(1e-3, 1e3),
                         k_tol: float = 1e-6, tol: float = 1e-10) -> LowerBound:
    """inf over K of pi(0 | x) for pi(0) = 1/2 and slab (1/2) Uniform(-K, K).

    Uniform slabs are the extreme points of symmetric non-increasing slab
    densities, so this is the bound over that whole class.  A coarse scan
    brackets the minimum, golden-section search refines it.
    """
    def post(k: float) -> float:
        return bayes_test_posterior(x, sigma, 0.5, uniform_slab(k * sigma, 0.5),
                                    WindowSet.interval(-k * sigma, k * sigma), tol)

    lo, hi = map(math.log, k_range)
    scan = np.linspace(lo, hi, 61)
    vals = np.array([post(math.exp(v)) for v in scan])
    i = int(np.argmin(vals))
    if i in (0, len(scan) - 1):
        return LowerBound(float(vals[i]), float(math.exp(scan[i])))
    res = minimize_scalar(lambda v: post(math.exp(v)), bracket=(scan[i - 1], scan[i], scan[i + 1]),
                          method="golden", tol=k_tol / math.exp(scan[i + 1]))
    return LowerBound(float(res.fun), float(math.exp(res.x)))


# ---------------------------------------------------------------------------
# marginalization paradox


def ratio_density(z: float, theta: float) -> float:
    """Density of Z = Y / X given theta: theta (theta + z)^-2."""
    return theta / (theta + z) ** 2


@dataclass(frozen=True)
class MarginalizationReport:
    route_a: RenyiState  # posterior given (x, z), x-only factor dropped
    route_b: RenyiState  # posterior given (z, phi)
    equivalent: bool
    theta_grid: np.ndarray
    log_ratio: np.ndarray  # log route_a - log route_b on theta_grid
    log_ratio_std: float
    gauge: str = "x^-2 factor of the (x, z) posterior dropped as a per-data constant"

    def to_dict(self) -> dict:
        return {"equivalent": self.equivalent, "log_ratio_std": self.log_ratio_std,
                "gauge": self.gauge, "route_a": self.route_a.label, "route_b": self.route_b.label,
                "theta": [float(t) for t in self.theta_grid],
                "log_ratio": [float(v) for v in self.log_ratio]}


def marginalization_pair(log_prior: Callable[[np.ndarray], np.ndarray] | None, z: float,
                         theta_grid: Sequence[float] | None = None,
                         tol: float = 1e-6) -> MarginalizationReport:
    """Posterior of theta given (x, z) against the posterior given (z, phi).

    Route A: pi(theta) theta (theta + z)^-3.  Route B: pi(theta) theta (theta + z)^-2.
    Their log ratio is -log(theta + z) plus a constant, so they are
    different Renyi states.
    """
    if not z > 0:
        raise ValueError("z must be positive")
    lp = log_prior or (lambda th: np.zeros(np.shape(th)))
    grid = np.geomspace(1e-2, 1e2, 81) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    base = BaseMeasure.half_line()
    a = RenyiState(base, lambda th: lp(th) + np.log(th) - 3.0 * np.log(th + z),
                   label=f"pi(theta) theta (theta+{z:g})^-3")
    b = RenyiState(base, lambda th: lp(th) + np.log(th) - 2.0 * np.log(th + z),
                   label=f"pi(theta) theta (theta+{z:g})^-2")
    eq = states_equivalent(a, b, [], tol, points=grid)
    ratio = a.logpdf(grid) - b.logpdf(grid)
    return MarginalizationReport(a, b, eq.equivalent, grid, ratio, eq.log_ratio_std)


def route_a_by_quadrature(log_prior, x: float, z: float, theta, tol: float = 1e-11) -> np.ndarray:
    """log of int pi(theta) theta phi^2 x exp(-phi x (theta + z)) d phi at each theta."""
    lp = log_prior or (lambda th: np.zeros(np.shape(th)))
    out = []
    for t in np.atleast_1d(np.asarray(theta, dtype=float)):
        s = RenyiState(BaseMeasure.half_line(),
                       lambda phi, t=t: 2.0 * np.log(phi) - phi * x * (t + z))
        m = window_mass(s, s.base.whole(), tol)
        out.append(float(lp(np.array(t))) + math.log(t) + math.log(x) + m.log_value)
    return np.array(out)


# ---------------------------------------------------------------------------
# tests with an improper posterior in (gamma, sigma)


def location_scale_posterior(x: float) -> RenyiState:
    """sigma^-2 exp(-(gamma - x)^2 / (2 sigma^2)) over R x (0, inf)."""
    return posterior_state(normal_location_scale_model(), x)


def improper_test_probability(x: float, m: float, n: float, tol: float = 1e-8) -> float:
    """P(gamma <= 0 | B(m, n)) with B(m, n) = (-m, m) x (1/n, n)."""
    if not (m > 0 and n > 1):
        raise ValueError("need m > 0 and n > 1")
    post = location_scale_posterior(x)
    b = WindowSet.box((-m, m), (1.0 / n, n))
    h0 = WindowSet.box((-np.inf, 0.0), (0.0, np.inf))
    return conditional_probability(post, h0, b, tol)


def focus_marginal(x: float) -> RenyiState:
    """Marginal posterior |gamma - x|^-1 of the location (sigma integrated out)."""
    return RenyiState(BaseMeasure.line(), lambda g: -np.log(np.abs(g - x)), label=f"|gamma-{x:g}|^-1")


def focus_window(x: float, m: float, n: float) -> WindowSet:
    """B(m, n) = (-m, m) without (x - 1/n, x + 1/n)."""
    return WindowSet.interval(-m, m).without((x - 1.0 / n, x + 1.0 / n))


@dataclass(frozen=True)
class FocusLimit:
    schedule: tuple[float, ...]
    probabilities: tuple[float, ...]
    extrapolated: float
    verdict: float | None  # 0, 1, 1/2 or None when unclassified
    raw_verdict: float | None  # from the last three raw values alone


def _classify(values: Sequence[float], band: float) -> float | None:
    v = np.asarray(values, dtype=float)
    for target in (0.0, 1.0, 0.5):
        if np.all(np.abs(v - target) < band):
            return target
    return None


def focus_test_limit(x: float, m: float = 5.0, schedule: Sequence[float] | None = None,
                     band: float = 0.01, tol: float = 1e-9) -> FocusLimit:
    """P(gamma <= 0 | B(m, n)) along increasing n and its limit as n -> inf.

    The default schedule is n = 10, 100, ..., 1e10.  The sequence
    approaches its limit only like 1/log(n), so the verdict
    uses a quadratic extrapolation in 1/log(n) through the last three
    values; ``raw_verdict`` applies the same band to the raw values.
    """
    if not m > abs(x):
        raise ValueError("need m > |x|")
    sched = tuple(float(n) for n in (schedule or 10.0 ** np.arange(1, 11)))
    if len(sched) < 3 or any(b <= a for a, b in zip(sched[:-1], sched[1:])):
        raise ValueError("schedule must be increasing with at least three entries")
    # the hole must span enough ulps of x for its edges to be resolved
    finest = 2.0 ** 14 * np.spacing(abs(x)) if x != 0 else 0.0
    if 1.0 / sched[-1] < finest:
        raise ValueError(f"n={sched[-1]:g} too large to resolve a hole of half-width 1/n at x={x:g}; "
                         f"keep n <= {1.0 / finest:.3g}")
    state = focus_marginal(x)
    h0 = WindowSet.interval(-np.inf, 0.0)
    probs = tuple(conditional_probability(state, h0, focus_window(x, m, n), tol) for n in sched)
    s = 1.0 / np.log(np.array(sched[-3:]))
    coef = np.polyfit(s, np.array(probs[-3:]), 2)
    limit = float(np.clip(coef[-1], 0.0, 1.0))
    return FocusLimit(sched, probs, limit, _classify([limit], band), _classify(probs[-3:], band))


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class TestStatisticCurve:
    x_over_sigma: np.ndarray
    p_value: np.ndarray
    posterior_flat: np.ndarray
    posterior_scaled: np.ndarray
    sigma: float
    prior_label: str = "flat c(delta_0 + d theta) and scaled sigma delta_0 + d theta"

    __test__ = False  # not a pytest class

    def rows(self):
        return zip(self.x_over_sigma, self.p_value, self.posterior_flat, self.posterior_scaled)


def test_statistic_curve(grid: Sequence[float], sigma: float = 1.0) -> TestStatisticCurve:
    g = np.asarray(grid, dtype=float)
    return TestStatisticCurve(
        g,
        np.array([p_value(v * sigma, sigma) for v in g]),
        np.array([lindley_posterior_flat(v * sigma, sigma) for v in g]),
        np.array([scaled_prior_posterior(v * sigma, sigma) for v in g]),
        sigma)


test_statistic_curve.__test__ = False


@dataclass(frozen=True)
class RepetitionRow:
    n: int
    posterior: float
    p_value: float


def lindley_repetition_curve(xbar: float, sigma: float, schedule: Sequence[int],
                             hold: str = "mean") -> list[RepetitionRow]:
    """pi*(0 | xbar) and the p-value for the mean of N observations.

    The prior stays pi*(0) = sigma, pi*(theta) = 1 while xbar ~ N(theta, sigma^2 / N),
    so pi*(0 | xbar) = [1 + sqrt(2 pi / N) exp(N xbar^2 / (2 sigma^2))]^-1.
    With ``hold="statistic"`` the standardized mean sqrt(N) xbar / sigma is
    held at its N = 1 value, which fixes the p-value while the posterior
    tends to 1.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if hold not in ("mean", "statistic"):
        raise ValueError("hold must be 'mean' or 'statistic'")
    rows = []
    for n in schedule:
        n = int(n)
        if n < 1:
            raise ValueError("N must be a positive integer")
        s = sigma / math.sqrt(n)
        m = xbar / math.sqrt(n) if hold == "statistic" else xbar
        post = float(expit(-(LOG_SQRT_2PI + math.log(s / sigma) + 0.5 * (m / s) ** 2)))
        rows.append(RepetitionRow(n, post, p_value(m, s)))
    return rows
