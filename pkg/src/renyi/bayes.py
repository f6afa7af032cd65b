"""Joint models and their disintegration into posterior Renyi states.

The joint density f(x, theta) with respect to mu(dx) nu(dtheta) is the
primitive.  The posterior given x is simply the theta-section of the joint,
read as a Renyi state; no normalization is attempted, so improper posteriors
are ordinary values.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .integrate import INFINITE, UNDETERMINED
from .measure import (DEFAULT_TOL, MassValue, RenyiState, TailHint, normalize_on_window,
                      probe_grid, restrict, states_equivalent, window_mass)
from .windows import BaseMeasure, WindowSet

HintFn = Callable[[Any], Mapping[str, TailHint]]


class UndeterminedMassError(RuntimeError):
    """A verdict depends on a mass that could neither be computed nor shown infinite."""

    def __init__(self, what: str, mass: MassValue):
        super().__init__(f"{what}: mass undetermined ({'; '.join(mass.notes) or 'no diagnostics'})")
        self.mass = mass


def _no_hints(x) -> Mapping[str, TailHint]:
    return {}


def _zero_factor(x) -> float:
    return 0.0


@dataclass(frozen=True)
class JointModel:
    """Density f(x, theta) = exp(log_kernel(x, theta) + log_data_factor(x)).

    The split is bookkeeping only: factors depending on x alone (binomial
    coefficients, t^x / x!) cancel in every posterior state but matter for
    the marginal density of the data.  ``log_kernel`` is vectorized over
    theta; ``param_support`` restricts the prior to a window when set.
    """

    data_base: BaseMeasure
    param_base: BaseMeasure
    log_kernel: Callable[[Any, np.ndarray], np.ndarray]
    log_data_factor: Callable[[Any], float] = _zero_factor
    label: str = ""
    posterior_hints: HintFn = _no_hints
    param_support: WindowSet | None = None

    def log_joint(self, x, theta) -> np.ndarray:
        return np.asarray(self.log_kernel(x, theta), dtype=float) + self.log_data_factor(x)

    def with_prior_restricted(self, b: WindowSet) -> "JointModel":
        """Same model with the prior multiplied by the indicator of ``b``."""
        support = b if self.param_support is None else self.param_support.intersect(b, self.param_base)
        return replace(self, param_support=support, label=f"{self.label}|prior restricted")

    def with_prior_factor(self, log_c: Callable[[np.ndarray], np.ndarray]) -> "JointModel":
        """Multiply the joint by c(theta); this changes the model unless c is constant."""
        kernel = self.log_kernel
        return replace(self, log_kernel=lambda x, th: kernel(x, th) + log_c(th),
                       posterior_hints=_no_hints, label=f"{self.label}*c(theta)")

    def data_section(self, theta) -> RenyiState:
        """x -> f(x, theta) for fixed theta, as a state over the data base."""
        th = np.asarray(theta, dtype=float)[None, ...]
        dim = self.data_base.dim

        def f(xs):
            xs = np.asarray(xs, dtype=float)
            shape = xs.shape[:-1] if dim == 2 else xs.shape
            flat = xs.reshape(-1, 2) if dim == 2 else xs.reshape(-1)
            vals = [self.log_joint(tuple(x) if dim == 2 else float(x), th)[0] for x in flat]
            return np.array(vals, dtype=float).reshape(shape)

        return RenyiState(self.data_base, f, label=f"{self.label} data section")


@dataclass(frozen=True)
class Likelihood:
    """One observation stage: log f(x | theta) over a data base, for sequential updating."""

    data_base: BaseMeasure
    log_lik: Callable[[Any, np.ndarray], np.ndarray]
    hints: HintFn = _no_hints
    label: str = ""


def posterior_state(model: JointModel, x) -> RenyiState:
    """theta -> f(x, theta) as a Renyi state; exactly the joint section."""
    state = RenyiState(model.param_base, lambda th: model.log_joint(x, th),
                       tail_hint=model.posterior_hints(x) if model.param_support is None else {},
                       support=model.param_support, label=f"{model.label} | x={x}")
    probe = probe_grid(model.param_base, [model.param_support or model.param_base.whole()])
    if not np.isfinite(state.logpdf(probe)).any():
        raise ValueError(f"observation x={x} has zero density for every parameter value")
    return state


@dataclass(frozen=True)
class PosteriorClassification:
    verdict: str  # proper | improper
    mass: MassValue
    data_marginal_at_x: MassValue

    @property
    def proper(self) -> bool:
        return self.verdict == "proper"


def kernel_state(model: JointModel, x) -> RenyiState:
    """The posterior section with data-only factors left out."""
    s = posterior_state(model, x)
    return s.with_density(lambda th: np.asarray(model.log_kernel(x, th), dtype=float))


def classify_posterior(model: JointModel, x, tol: float = DEFAULT_TOL) -> PosteriorClassification:
    """Proper iff the posterior has finite positive total mass.

    ``mass`` is the integral of the kernel section (data-only factors left
    out); ``data_marginal_at_x`` includes them, i.e. the density of the data
    marginal at x with respect to the data base.
    """
    kernel = kernel_state(model, x)
    m = window_mass(kernel, model.param_support or model.param_base.whole(), tol)
    if m.is_undetermined:
        raise UndeterminedMassError(f"posterior of {model.label} at x={x}", m)
    if m.is_finite:
        lf = float(model.log_data_factor(x))
        marginal = replace(m, log_value=m.log_value + lf)
    else:
        marginal = m
    verdict = "proper" if m.is_finite and not m.is_zero else "improper"
    return PosteriorClassification(verdict, m, marginal)


# ---------------------------------------------------------------------------
# marginals and disintegration


@dataclass(frozen=True)
class MarginalProbe:
    points: np.ndarray
    statuses: tuple[str, ...]

    @property
    def undetermined_points(self) -> np.ndarray:
        return self.points[[s == UNDETERMINED for s in self.statuses]]


@dataclass(frozen=True)
class NotSigmaFinite:
    """The marginal charges a set of positive extent with infinite mass."""

    axis: int
    probe: MarginalProbe
    reason: str

    def __bool__(self) -> bool:  # a failed marginal is falsy
        return False


def _section_state(state2d: RenyiState, keep: int, value: float) -> RenyiState:
    drop = 1 - keep
    base = BaseMeasure.line(*state2d.base.domain[drop])

    def f(y):
        y = np.asarray(y, dtype=float)
        pts = np.empty(y.shape + (2,))
        pts[..., keep] = value
        pts[..., drop] = y
        return state2d.logpdf(pts)

    return RenyiState(base, f, label=f"section {keep}={value:g}")


def _inner_log_mass(state2d, keep, value, tol) -> tuple[str, float]:
    m = window_mass(_section_state(state2d, keep, value), BaseMeasure.line(
        *state2d.base.domain[1 - keep]).whole(), tol)
    return m.status, m.log_value


def marginal_probe(state2d: RenyiState, keep: int, tol: float = DEFAULT_TOL,
                   n: int = 64) -> MarginalProbe:
    base1 = BaseMeasure.line(*state2d.base.domain[keep])
    pts = probe_grid(base1, [base1.whole()], per_axis=n)
    statuses = tuple(_inner_log_mass(state2d, keep, float(p), tol)[0] for p in pts)
    return MarginalProbe(pts, statuses)


def marginal_state(state2d: RenyiState, keep: int, tol: float = DEFAULT_TOL) -> RenyiState | NotSigmaFinite:
    """Integrate out the other coordinate of a 2-D state.

    Probes 64 points along the kept axis first; two adjacent probes with an
    infinite inner integral mean the marginal is infinite on a set of
    positive extent, so no sigma-finite marginal exists.
    """
    if state2d.base.dim != 2:
        raise ValueError("marginal_state needs a 2-D base measure")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 or 1")
    probe = marginal_probe(state2d, keep, tol)
    inf = np.array([s == INFINITE for s in probe.statuses])
    if (inf[1:] & inf[:-1]).any():
        return NotSigmaFinite(keep, probe, "inner integral infinite at adjacent probe points")
    if probe.undetermined_points.size:
        warnings.warn(f"inner integral undetermined at {probe.undetermined_points.tolist()}",
                      RuntimeWarning, stacklevel=2)

    def f(v):
        v = np.asarray(v, dtype=float)
        out = np.empty(v.shape)
        for i, val in np.ndenumerate(v):
            status, lv = _inner_log_mass(state2d, keep, float(val), tol)
            out[i] = np.inf if status == INFINITE else (np.nan if status == UNDETERMINED else lv)
        return out

    return RenyiState(BaseMeasure.line(*state2d.base.domain[keep]), f,
                      label=f"{state2d.label} marginal axis {keep}")


def disintegrate_discrete(state: RenyiState, partition: Sequence[WindowSet],
                          tol: float = DEFAULT_TOL) -> list[RenyiState]:
    """Conditional states given each cell of a finite partition.

    Cells may carry infinite mass; each conditional is still a Renyi state.
    """
    base = state.base
    for i in range(len(partition)):
        for j in range(i + 1, len(partition)):
            if not partition[i].intersect(partition[j], base).is_empty(base):
                raise ValueError(f"partition cells {i} and {j} overlap")
    return [restrict(state, cell, tol) for cell in partition]


# ---------------------------------------------------------------------------
# Theorem-1 style commutation and sequential updating


@dataclass(frozen=True)
class CommutationReport:
    equivalent: bool
    log_ratio_std: float
    factorization_gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.equivalent and self.factorization_gap < self.tol

    def __bool__(self) -> bool:
        return self.passed


def _half_window(b: WindowSet, base: BaseMeasure) -> WindowSet:
    """Lower half (along axis 0, in domain-adapted coordinates) of b's first cell."""
    from .integrate import Transform

    cell = b.cells(base.domain)[0]
    (lo, hi), (dlo, dhi) = cell[0], base.domain[0]
    t = Transform.for_domain(dlo, dhi)
    ua, ub = t.u_interval(lo, hi)
    ua, ub = max(ua, -30.0), min(ub, 30.0)
    mid = float(t.to_x(0.5 * (ua + ub)))
    if base.dim == 1:
        return WindowSet.interval(lo, mid)
    return WindowSet.box((lo, mid), cell[1])


def restriction_commutes(model: JointModel, x, b: WindowSet, tol: float = 1e-8,
                         a: WindowSet | None = None) -> CommutationReport:
    """Disintegrate-then-condition against condition-the-joint-then-disintegrate.

    Route 1 normalizes the posterior given x on b.  Route 2 restricts the
    prior to b and takes the posterior of that joint.  Both must be the same
    state, and for a sub-window a the factorization P(a b) = P(a | b) P(b)
    must hold with P(b) = 1 under route 1.
    """
    base = model.param_base
    q = min(DEFAULT_TOL, 0.01 * tol)
    route1 = normalize_on_window(posterior_state(model, x), b, q)
    route2 = posterior_state(model.with_prior_restricted(b), x)
    eq = states_equivalent(route1, route2, [b], tol)
    a = _half_window(b, base) if a is None else a
    ab = a.intersect(b, base)
    m1 = window_mass(route1, ab, q).value
    m2b = window_mass(route2, b, q)
    p2 = window_mass(route2, ab, q).value / m2b.value
    return CommutationReport(eq.equivalent, eq.log_ratio_std, abs(m1 - p2), tol)


def _merge_hints(h1: Mapping[str, TailHint], h2: Mapping[str, TailHint]) -> dict[str, TailHint]:
    """Tail hints of a product: powers and rates add where both are known."""
    return {k: TailHint(h1[k].power + h2[k].power, h1[k].rate + h2[k].rate)
            for k in set(h1) & set(h2)}


def update(prior: RenyiState, lik: Likelihood, x) -> RenyiState:
    """Posterior of the joint prior(theta) f(x | theta) given x."""
    f = prior.log_density
    model = JointModel(lik.data_base, prior.base, lambda xx, th: f(th) + lik.log_lik(xx, th),
                       label=lik.label,
                       posterior_hints=lambda xx: _merge_hints(prior.tail_hint, lik.hints(xx)),
                       param_support=prior.support)
    return posterior_state(model, x)


def sequential_update(stage_factory: Callable[[Any], Likelihood], prior: RenyiState,
                      observations: Sequence[tuple[Any, Any]]) -> RenyiState:
    """Fold ``(x_i, stage_params_i)`` into the prior one stage at a time.

    Each intermediate posterior, proper or not, is the next stage's prior.
    """
    state = prior
    for x, params in observations:
        state = update(state, stage_factory(params), x)
    return state


# ---------------------------------------------------------------------------
# ICAR normalization


@dataclass(frozen=True)
class IcarExponent:
    exponent: float
    null_dim: int
    eigenvalues: np.ndarray = field(repr=False)


def icar_normalization_exponent(q, rank_tol: float = 1e-9) -> IcarExponent:
    """Exponent (n - k) / 2 of c(theta) = theta^((n-k)/2) for precision theta * Q.

    k is the number of eigenvalues of Q below ``rank_tol`` times the largest.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("precision matrix must be square")
    scale = max(float(np.abs(q).max()), 1.0) if q.size else 1.0
    if not np.allclose(q, q.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("precision matrix is not symmetric")
    ev = np.linalg.eigvalsh(q)
    top = float(ev.max()) if ev.size else 0.0
    if ev.size and ev.min() < -1e-10 * max(top, 0.0) - (0.0 if top > 0 else 1e-12):
        raise ValueError(f"precision matrix is not positive semidefinite (min eigenvalue {ev.min():g})")
    k = int(np.sum(ev <= rank_tol * top)) if top > 0 else q.shape[0]
    return IcarExponent(0.5 * (q.shape[0] - k), k, ev)


def log_c_gauge(theta, exponent: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return exponent * np.log(np.asarray(theta, dtype=float))


__all__ = [
    "JointModel", "Likelihood", "PosteriorClassification", "UndeterminedMassError", "kernel_state",
    "posterior_state", "classify_posterior", "marginal_probe", "marginal_state",
    "NotSigmaFinite", "MarginalProbe", "disintegrate_discrete", "restriction_commutes",
    "CommutationReport", "update", "sequential_update", "icar_normalization_exponent",
    "IcarExponent", "log_c_gauge",
]
