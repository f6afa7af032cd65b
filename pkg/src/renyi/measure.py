"""Renyi states: sigma-finite laws known only up to a positive constant.

A :class:`RenyiState` is a log-density with respect to a :class:`BaseMeasure`.
Everything that can be computed from it (window masses up to the common
scale, conditional probabilities on elementary windows, equivalence) is
invariant under adding a constant to the log-density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .integrate import (FINITE, INFINITE, UNDETERMINED, LineResult, Transform, combine,
                        integrate_interval)
from .quadrature import DEFAULT_BUDGET
from .windows import COUNTING, BaseMeasure, WindowSet

DEFAULT_TOL = 1e-9
# log-density floor for equivalence probes, relative to the probe maximum
EQUIVALENCE_FLOOR = 30.0


class NotElementaryError(ValueError):
    """Conditioning window has zero, infinite or undetermined mass."""

    def __init__(self, reason: str, mass: "MassValue"):
        super().__init__(f"window is not elementary: mass is {reason}")
        self.reason = reason
        self.mass = mass


@dataclass(frozen=True)
class TailHint:
    """Asymptotics of the density at one end of a 1-D domain.

    Near a finite end b the density behaves like |x - b|**power; towards an
    infinite end like |x|**power * exp(-rate * |x|).
    """

    power: float = 0.0
    rate: float = 0.0

    def diverges(self, end_is_finite: bool) -> bool:
        if end_is_finite:
            return self.power <= -1.0
        return self.rate <= 0.0 and self.power >= -1.0


@dataclass(frozen=True)
class MassValue:
    status: str  # finite | infinite | undetermined
    log_value: float = -np.inf
    rel_error: float = 0.0
    evaluations: int = 0
    notes: tuple[str, ...] = ()

    @property
    def value(self) -> float:
        if self.status == INFINITE:
            return math.inf
        if self.status == UNDETERMINED:
            return math.nan
        return math.exp(self.log_value) if self.log_value > -math.inf else 0.0

    @property
    def is_finite(self) -> bool:
        return self.status == FINITE

    @property
    def is_infinite(self) -> bool:
        return self.status == INFINITE

    @property
    def is_undetermined(self) -> bool:
        return self.status == UNDETERMINED

    @property
    def is_zero(self) -> bool:
        return self.status == FINITE and self.log_value == -math.inf

    @property
    def positive(self) -> bool | None:
        if self.status == UNDETERMINED:
            return None
        return not self.is_zero

    def describe(self) -> str:
        if self.is_zero:
            return "zero"
        return self.status

    @classmethod
    def _from_line(cls, r: LineResult) -> "MassValue":
        return cls(r.status, r.log_value, r.rel_error, r.evaluations, tuple(r.notes))


@dataclass(frozen=True)
class RenyiState:
    """Equivalence class of measures ``c * exp(log_density) d(base)``, c > 0.

    ``log_density`` is vectorized: 1-D bases get an array of points, 2-D
    bases an array whose last axis has length 2.  At an atom of the base the
    exponentiated value is the atom's mass.
    """

    base: BaseMeasure
    log_density: Callable[[np.ndarray], np.ndarray]
    tail_hint: Mapping[str, TailHint] = field(default_factory=dict)
    support: WindowSet | None = None
    label: str = ""

    def __post_init__(self):
        hints = dict(self.tail_hint)
        if set(hints) - {"lower", "upper"}:
            raise ValueError("tail hints are keyed by 'lower' and 'upper'")
        if hints and self.base.dim != 1:
            raise ValueError("tail hints are only supported on 1-D bases")
        object.__setattr__(self, "tail_hint", MappingProxyType(hints))

    def logpdf(self, points) -> np.ndarray:
        pts = self.base.validate_points(points)
        shape = pts.shape[:-1] if self.base.dim == 2 else pts.shape
        vals = np.broadcast_to(np.asarray(self.log_density(pts), dtype=float), shape).copy()
        if np.isnan(vals).any():
            raise ValueError("log-density returned NaN")
        if self.support is not None:
            vals = np.where(self.support.contains(pts, self.base), vals, -np.inf)
        return vals

    def shifted(self, log_c: float) -> "RenyiState":
        """Same Renyi state, different representative: density times exp(log_c)."""
        f = self.log_density
        return RenyiState(self.base, lambda p: f(p) + log_c, self.tail_hint, self.support, self.label)

    def with_density(self, fn, label: str | None = None) -> "RenyiState":
        return RenyiState(self.base, fn, self.tail_hint, self.support,
                          self.label if label is None else label)


# ---------------------------------------------------------------------------
# masses


def _check_window(state: RenyiState, w: WindowSet) -> None:
    if w.dim is not None and w.dim != state.base.dim:
        raise ValueError(f"window is {w.dim}-D but the base measure is {state.base.dim}-D")
    if w.atoms is not None:
        stray = set(w.atoms) - set(state.base.atoms)
        if stray:
            raise ValueError(f"window lists atoms {sorted(stray)} absent from the base measure")


def effective_window(state: RenyiState, w: WindowSet) -> WindowSet:
    if state.support is None:
        return w
    return w.intersect(state.support, state.base)


def window_mass(state: RenyiState, w: WindowSet, tol: float = DEFAULT_TOL,
                budget: int = DEFAULT_BUDGET) -> MassValue:
    """Mass of ``w`` under one representative of ``state``.

    Only ratios of masses (and the finite / infinite / zero verdicts) are
    meaningful for the Renyi state itself.
    """
    _check_window(state, w)
    w = effective_window(state, w)
    base = state.base
    if base.kind == COUNTING:
        return MassValue._from_line(_counting_mass(state, w, tol))

    parts: list[LineResult] = []
    cells = w.cells(base.domain)
    atoms = w.included_atoms(base)
    for cell in cells:
        if base.dim == 1:
            parts.append(_mass_1d(state, cell[0], tol, budget))
        else:
            parts.append(_mass_2d(state, cell, tol, budget))
        if parts[-1].status == INFINITE:
            break
    if atoms:
        la = state.logpdf(np.array(atoms))
        if np.isposinf(la).any():
            raise ValueError("atom masses must be finite")
        parts.extend(LineResult(FINITE, float(v), 0.0, 1) for v in la)
    return MassValue._from_line(combine(parts))


def _mass_1d(state: RenyiState, interval, tol, budget) -> LineResult:
    base = state.base
    dlo, dhi = base.domain[0]
    lo, hi = interval
    if not lo < hi:
        return LineResult.zero()
    hints = state.tail_hint
    for end, touches, finite_end in (("lower", lo <= dlo, np.isfinite(dlo)),
                                     ("upper", hi >= dhi, np.isfinite(dhi))):
        h = hints.get(end)
        if touches and h is not None and h.diverges(bool(finite_end)):
            return LineResult(INFINITE, np.inf, 0.0, 0, [f"tail hint: divergent at {end} end"])

    # atoms of the base are never evaluated as Lebesgue points
    cuts = [lo] + [a for a in base.atoms if lo < a < hi] + [hi]
    t = Transform.for_domain(dlo, dhi)
    safe = t.safe_bounds()

    def g(u):
        return state.logpdf(t.to_x(u)) + t.log_jac(u)

    parts = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        ua, ub = t.u_interval(a, b)
        parts.append(integrate_interval(g, ua, ub, tol, budget, safe))
        if parts[-1].status == INFINITE:
            break
    return combine(parts)


class _InnerDiverged(Exception):
    pass


class _InnerUndetermined(Exception):
    pass


def _mass_2d(state: RenyiState, box, tol, budget) -> LineResult:
    """Nested 1-D integration: outer over axis 0, inner over axis 1.

    An inner integral that is infinite at any outer node makes the whole box
    infinite (the node stands for a set of positive outer measure).
    """
    (xlo, xhi), (ylo, yhi) = box
    tx = Transform.for_domain(*state.base.domain[0])
    ty = Transform.for_domain(*state.base.domain[1])
    sx, sy = tx.safe_bounds(), ty.safe_bounds()
    va, vb = ty.u_interval(ylo, yhi)
    inner_tol = 0.1 * tol
    evals = [0]

    def inner(x: float) -> float:
        def h(v):
            pts = np.stack([np.full(np.shape(v), x), ty.to_x(v)], axis=-1)
            return state.logpdf(pts) + ty.log_jac(v)

        r = integrate_interval(h, va, vb, inner_tol, budget, sy)
        evals[0] += r.evaluations
        if r.status == INFINITE:
            raise _InnerDiverged(x)
        if r.status == UNDETERMINED:
            raise _InnerUndetermined(x)
        return r.log_value

    def g(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        xs = tx.to_x(u)
        out = np.array([inner(float(x)) for x in xs])
        return out + tx.log_jac(u)

    ua, ub = tx.u_interval(xlo, xhi)
    try:
        r = integrate_interval(g, ua, ub, tol, budget, sx)
    except _InnerDiverged as exc:
        return LineResult(INFINITE, np.inf, 0.0, evals[0],
                          [f"inner integral diverges at first coordinate {exc.args[0]:g}"])
    except _InnerUndetermined as exc:
        return LineResult(UNDETERMINED, np.nan, np.inf, evals[0],
                          [f"inner integral undetermined at first coordinate {exc.args[0]:g}"])
    r.evaluations += evals[0]
    return r


def _counting_mass(state: RenyiState, w: WindowSet, tol) -> LineResult:
    lo, hi = state.base.domain[0]
    cells = w.cells(state.base.domain)
    if not cells:
        return LineResult.zero()
    start = int(math.ceil(max(lo, min(c[0][0] for c in cells))))
    stop = max(c[0][1] for c in cells)
    stop = min(stop, hi)
    hint = state.tail_hint.get("upper")
    if np.isinf(stop) and hint is not None and hint.diverges(False):
        return LineResult(INFINITE, np.inf, 0.0, 0, ["tail hint: divergent at upper end"])

    def block(a: int, b: int) -> float:
        k = np.arange(a, b, dtype=float)
        v = np.where(w.contains(k, state.base), state.logpdf(k), -np.inf)
        return float(np.logaddexp.reduce(v)) if v.size else -np.inf

    if np.isfinite(stop):
        stop_i = int(math.floor(stop))
        total = -np.inf
        for a in range(start, stop_i + 1, 1 << 16):
            total = np.logaddexp(total, block(a, min(a + (1 << 16), stop_i + 1)))
        return LineResult(FINITE, float(total), 0.0, stop_i - start + 1)

    # unbounded: doubling blocks of integers
    inc, total, a, size, neval = [], -np.inf, start, 16, 0
    for _ in range(60):
        v = block(a, a + size)
        neval += size
        inc.append(v)
        total = np.logaddexp(total, v)
        if len(inc) >= 3 and np.isfinite(total):
            if v <= np.log(0.1 * tol) + total and inc[-1] <= inc[-2]:
                return LineResult(FINITE, float(total), tol, neval)
            r = np.exp(np.diff(inc[-5:]))
            if len(r) == 4 and np.all(r >= 1.0):
                return LineResult(INFINITE, np.inf, 0.0, neval, ["doubling blocks did not shrink"])
        a += size
        size *= 2
        if size > 1 << 22:
            break
    return LineResult(UNDETERMINED, np.nan, np.inf, neval, ["counting tail did not settle"])


# ---------------------------------------------------------------------------
# conditioning


def is_elementary(state: RenyiState, w: WindowSet, tol: float = DEFAULT_TOL) -> bool | None:
    """True iff 0 < P(w) < inf; ``None`` when the mass is undetermined."""
    m = window_mass(state, w, tol)
    if m.is_undetermined:
        return None
    return m.is_finite and not m.is_zero


def _require_elementary(state, b, tol) -> MassValue:
    m = window_mass(state, b, tol)
    if m.is_undetermined or m.is_infinite or m.is_zero:
        raise NotElementaryError(m.describe(), m)
    return m


def conditional_probability(state: RenyiState, a: WindowSet, b: WindowSet,
                            tol: float = DEFAULT_TOL) -> float:
    """P(a | b) = P(a b) / P(b) for an elementary window b."""
    mb = _require_elementary(state, b, tol)
    mab = window_mass(state, a.intersect(b, state.base), tol)
    if mab.is_zero:
        return 0.0
    return float(min(1.0, math.exp(mab.log_value - mb.log_value)))


def restrict(state: RenyiState, b: WindowSet, tol: float = DEFAULT_TOL,
             check: bool = True) -> RenyiState:
    """The conditional state given b: same density on b, nothing outside.

    Only P(b) > 0 is required; b may have infinite mass.
    """
    _check_window(state, b)
    if check:
        m = window_mass(state, b, tol)
        if m.is_zero:
            raise NotElementaryError("zero", m)
    support = b if state.support is None else state.support.intersect(b, state.base)
    label = f"{state.label}|restricted" if state.label else "restricted"
    return RenyiState(state.base, state.log_density, state.tail_hint, support, label)


def normalize_on_window(state: RenyiState, b: WindowSet, tol: float = DEFAULT_TOL) -> RenyiState:
    """P(. | b) as a proper state: restricted to b with total mass one."""
    m = _require_elementary(state, b, tol)
    return restrict(state, b, tol, check=False).shifted(-m.log_value)


# ---------------------------------------------------------------------------
# equivalence


@dataclass(frozen=True)
class Equivalence:
    equivalent: bool
    log_ratio_std: float
    log_offset: float
    n_points: int
    reason: str = ""

    def __bool__(self) -> bool:
        return self.equivalent


def probe_grid(base: BaseMeasure, windows: Iterable[WindowSet], per_axis: int | None = None,
               u_clip: float = 30.0) -> np.ndarray:
    """Interior probe points of each window, evenly spaced in domain-adapted coordinates."""
    pts: list[np.ndarray] = []
    n = per_axis or (64 if base.dim == 1 else 16)
    frac = (np.arange(n) + 0.5) / n
    for w in windows:
        for cell in w.cells(base.domain):
            axes = []
            for (lo, hi), (dlo, dhi) in zip(cell, base.domain):
                t = Transform.for_domain(dlo, dhi)
                ua, ub = t.u_interval(lo, hi)
                ua, ub = max(ua, -u_clip), min(ub, u_clip)
                if ua >= ub:
                    ua, ub = (ub - 1.0, ub) if np.isfinite(ub) else (ua, ua + 1.0)
                axes.append(t.to_x(ua + (ub - ua) * frac))
            if base.dim == 1:
                pts.append(axes[0])
            else:
                gx, gy = np.meshgrid(*axes, indexing="ij")
                pts.append(np.stack([gx.ravel(), gy.ravel()], axis=-1))
        if base.kind == COUNTING:
            k = np.arange(0, 512, dtype=float)
            pts.append(k[w.contains(k, base)])
        atoms = w.included_atoms(base)
        if atoms:
            pts.append(np.array(atoms))
    if not pts:
        return np.empty((0, 2)) if base.dim == 2 else np.empty(0)
    return np.concatenate(pts, axis=0)


def states_equivalent(s1: RenyiState, s2: RenyiState, probe_windows: Sequence[WindowSet],
                      tol: float = 1e-6, points=None) -> Equivalence:
    """Whether log s1 - log s2 is constant (std below ``tol``) on the probe grid."""
    if s1.base != s2.base:
        raise ValueError("states live on different base measures")
    pts = probe_grid(s1.base, probe_windows) if points is None else np.asarray(points, float)
    l1, l2 = s1.logpdf(pts), s2.logpdf(pts)
    keep = np.isfinite(l1) & np.isfinite(l2)
    if keep.any():
        keep &= l1 >= l1[np.isfinite(l1)].max() - EQUIVALENCE_FLOOR
        keep &= l2 >= l2[np.isfinite(l2)].max() - EQUIVALENCE_FLOOR
    if not keep.any():
        return Equivalence(False, math.nan, math.nan, 0, "supports do not overlap on the probe grid")
    d = l1[keep] - l2[keep]
    std = float(np.std(d))
    return Equivalence(std < tol, std, float(np.mean(d)), int(keep.sum()))


# ---------------------------------------------------------------------------
# bunches and consistency


@dataclass(frozen=True)
class BunchReport:
    no_empty_member: bool
    union_closed: bool
    covers_target: bool
    all_elementary: bool
    nested_positive: bool
    failures: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return (self.no_empty_member and self.union_closed and self.covers_target
                and self.all_elementary and self.nested_positive)


def check_bunch_axioms(state: RenyiState, family: Sequence[WindowSet], cover_target: WindowSet,
                       tol: float = DEFAULT_TOL) -> BunchReport:
    """Check a finite family against the bunch axioms on ``cover_target``.

    (i) no member is empty, (ii) pairwise unions are members, (iii) the
    union of the family covers the target; additionally every member is
    elementary and nested members have positive conditional probability.
    """
    base = state.base
    failures = []
    empty = [i for i, w in enumerate(family) if w.is_empty(base)]
    if empty:
        failures.append(f"(i) empty members at {empty}")

    closed = True
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            u = family[i].union(family[j], base)
            if not any(u.same_region(f, base) for f in family):
                closed = False
                failures.append(f"(ii) union of members {i} and {j} is not a member")

    cover = family[0] if family else WindowSet.empty()
    for w in family[1:]:
        cover = cover.union(w, base)
    covers = cover_target.subset_of(cover, base) if family else cover_target.is_empty(base)
    if not covers:
        failures.append("(iii) family does not cover the target")

    masses = [window_mass(state, w, tol) for w in family]
    elementary = [m.is_finite and not m.is_zero for m in masses]
    if not all(elementary):
        failures.append(f"members not elementary: {[i for i, e in enumerate(elementary) if not e]}")

    nested_ok = True
    for i, wi in enumerate(family):
        for j, wj in enumerate(family):
            if i == j or not (elementary[i] and elementary[j]) or not wi.subset_of(wj, base):
                continue
            if conditional_probability(state, wi, wj, tol) <= 0.0:
                nested_ok = False
                failures.append(f"P(member {i} | member {j}) = 0")
    return BunchReport(not empty, closed, covers, all(elementary), nested_ok, tuple(failures))


def consistency_gap(state: RenyiState, a: WindowSet, b1: WindowSet, b2: WindowSet,
                    tol: float = DEFAULT_TOL) -> float:
    """|P(a|b1) - P(a b1|b2) / P(b1|b2)| for nested elementary b1 within b2."""
    if not b1.subset_of(b2, state.base):
        raise ValueError("consistency needs b1 contained in b2")
    lhs = conditional_probability(state, a, b1, tol)
    ab1 = a.intersect(b1, state.base)
    rhs = conditional_probability(state, ab1, b2, tol) / conditional_probability(state, b1, b2, tol)
    return abs(lhs - rhs)


def check_consistency(state: RenyiState, a: WindowSet, b1: WindowSet, b2: WindowSet,
                      tol: float = 1e-8) -> bool:
    return consistency_gap(state, a, b1, b2, min(DEFAULT_TOL, tol * 0.1)) < tol


# ---------------------------------------------------------------------------
# q-vague convergence


@dataclass(frozen=True)
class QVagueRow:
    index: int
    scale: float  # a_n
    scaled_masses: tuple[float, ...]
    errors: tuple[float, ...]
    flagged: str = ""


@dataclass(frozen=True)
class QVagueReport:
    rows: tuple[QVagueRow, ...]
    limit_masses: tuple[float, ...]
    monotone: tuple[bool, ...]
    within_tol: tuple[bool, ...]

    @property
    def converged(self) -> tuple[bool, ...]:
        return tuple(m and w for m, w in zip(self.monotone, self.within_tol))

    @property
    def passed(self) -> bool:
        return all(self.converged)


def q_vague_limit_check(sequence: Callable[[int], RenyiState], limit: RenyiState,
                        ref_window: WindowSet, probe_windows: Sequence[WindowSet],
                        schedule: Sequence[int], tol: float = 1e-3,
                        quad_tol: float = DEFAULT_TOL) -> QVagueReport:
    """Rescale each member to agree with ``limit`` on ``ref_window`` and compare probe masses.

    Errors are relative to the limit mass where that is positive, absolute otherwise.
    """
    ref_lim = _require_elementary(limit, ref_window, quad_tol)
    lim = [window_mass(limit, p, quad_tol) for p in probe_windows]
    if any(not m.is_finite for m in lim):
        raise NotElementaryError("infinite or undetermined", next(m for m in lim if not m.is_finite))
    lim_vals = tuple(m.value for m in lim)

    rows = []
    for n in schedule:
        s = sequence(n)
        ref_n = window_mass(s, ref_window, quad_tol)
        if not ref_n.is_finite or ref_n.is_zero:
            rows.append(QVagueRow(n, math.nan, (), (), f"reference window not elementary ({ref_n.describe()})"))
            continue
        log_a = ref_lim.log_value - ref_n.log_value
        scaled, errs = [], []
        for p, lv in zip(probe_windows, lim_vals):
            m = window_mass(s, p, quad_tol)
            v = math.exp(m.log_value + log_a) if m.is_finite and not m.is_zero else (
                0.0 if m.is_zero else math.inf)
            scaled.append(v)
            errs.append(abs(v - lv) / lv if lv > 0 else abs(v - lv))
        rows.append(QVagueRow(n, math.exp(log_a), tuple(scaled), tuple(errs)))

    good = [r for r in rows if not r.flagged]
    monotone, within = [], []
    for k in range(len(probe_windows)):
        seq = [r.errors[k] for r in good]
        tail = seq[len(seq) // 2:] if len(seq) >= 4 else seq
        monotone.append(bool(seq) and all(b <= a + 10 * quad_tol for a, b in zip(tail[:-1], tail[1:])))
        within.append(bool(seq) and seq[-1] < tol)
    return QVagueReport(tuple(rows), lim_vals, tuple(monotone), tuple(within))
