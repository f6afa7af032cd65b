"""Integration of log-densities over (possibly unbounded) intervals.

Builds on :func:`renyi.quadrature.integrate_log` and adds the pieces needed
for sigma-finite laws: domain-adapted coordinates, doubling-shell tails that
either converge, certify divergence, or give up, and a shrinking-shell test
around points where the integrand blows up.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .quadrature import DEFAULT_BUDGET, BlowUp, integrate_log

FINITE = "finite"
INFINITE = "infinite"
UNDETERMINED = "undetermined"

# a shell counts as "not shrinking" above this normalized ratio
_DIVERGENCE_RATIO = 0.99
_MAX_SHELLS = 200
_MAX_SPLIT_DEPTH = 3


@dataclass
class LineResult:
    status: str
    log_value: float = -np.inf
    abs_error: float = 0.0  # relative to exp(log_value) scale; see rel_error
    evaluations: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def rel_error(self) -> float:
        return self.abs_error

    @classmethod
    def zero(cls):
        return cls(FINITE, -np.inf, 0.0, 0)


def combine(parts: list[LineResult]) -> LineResult:
    """Sum of non-negative pieces: infinite dominates, then undetermined."""
    notes = [n for p in parts for n in p.notes]
    neval = sum(p.evaluations for p in parts)
    if any(p.status == INFINITE for p in parts):
        return LineResult(INFINITE, np.inf, 0.0, neval, notes)
    if any(p.status == UNDETERMINED for p in parts):
        return LineResult(UNDETERMINED, np.nan, np.inf, neval, notes)
    logs = np.array([p.log_value for p in parts]) if parts else np.array([-np.inf])
    total = float(np.logaddexp.reduce(logs))
    if not np.isfinite(total):
        return LineResult(FINITE, -np.inf, 0.0, neval, notes)
    # rel errors weighted by each piece's share
    err = sum(p.rel_error * np.exp(p.log_value - total) for p in parts if np.isfinite(p.log_value))
    return LineResult(FINITE, total, float(err), neval, notes)


# ---------------------------------------------------------------------------
# coordinate maps sending open domain ends to +-infinity


@dataclass(frozen=True)
class Transform:
    """x = to_x(u); integrals pick up exp(log_jac(u))."""

    kind: str  # identity | log_lower | log_upper | logit
    lo: float = -np.inf
    hi: float = np.inf

    @classmethod
    def for_domain(cls, lo: float, hi: float) -> "Transform":
        if np.isinf(lo) and np.isinf(hi):
            return cls("identity", lo, hi)
        if np.isinf(hi):
            return cls("log_lower", lo, hi)
        if np.isinf(lo):
            return cls("log_upper", lo, hi)
        return cls("logit", lo, hi)

    def to_x(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "identity":
            return u
        with np.errstate(over="ignore"):
            if self.kind == "log_lower":
                return self.lo + np.exp(u)
            if self.kind == "log_upper":
                return self.hi - np.exp(u)
        span = self.hi - self.lo
        # evaluate from the nearer end to keep resolution
        return np.where(u <= 0, self.lo + span * expit(u), self.hi - span * expit(-u))

    def to_u(self, x: float) -> float:
        if self.kind == "identity":
            return float(x)
        with np.errstate(divide="ignore"):
            if self.kind == "log_lower":
                return float(np.log(x - self.lo)) if np.isfinite(x) else np.inf
            if self.kind == "log_upper":
                return float(np.log(self.hi - x)) if np.isfinite(x) else np.inf
            return float(np.log(x - self.lo) - np.log(self.hi - x))

    def log_jac(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "identity":
            return np.zeros_like(u)
        if self.kind in ("log_lower", "log_upper"):
            return u
        return np.log(self.hi - self.lo) + log_expit(u) + log_expit(-u)

    def u_interval(self, a: float, b: float) -> tuple[float, float]:
        ua, ub = self.to_u(a), self.to_u(b)
        return (ua, ub) if ua <= ub else (ub, ua)

    def safe_bounds(self) -> tuple[float, float]:
        """Range of u over which to_x stays finite and strictly inside the domain."""
        if self.kind == "identity":
            return -1e300, 1e300
        return _largest_ok(self, -1.0), _largest_ok(self, 1.0)


def _largest_ok(t: Transform, sign: float) -> float:
    # stop where x can no longer resolve its distance to the nearer end
    def ok(u):
        x = float(t.to_x(u))
        if not (np.isfinite(x) and t.lo < x < t.hi):
            return False
        end = t.lo if abs(x - t.lo) <= abs(t.hi - x) else t.hi
        return abs(x - end) >= max(2.0 ** -40 * abs(end), 1e-300)

    good, bad = 0.0, sign * 1000.0
    if ok(bad):
        return bad
    for _ in range(80):
        mid = 0.5 * (good + bad)
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good


# ---------------------------------------------------------------------------


def integrate_interval(g, a: float, b: float, rel_tol: float = 1e-9,
                       budget: int = DEFAULT_BUDGET, safe=(-1e300, 1e300),
                       depth: int = 0) -> LineResult:
    """Integrate exp(g) over [a, b] on the extended real line.

    Unbounded ends go through the doubling-shell tail test.  Blow-ups of the
    integrand (``+inf`` at a node, or refinement stuck at a point) split the
    interval there and treat the point as a singular endpoint.
    """
    if not a < b:
        return LineResult.zero()
    a = max(a, safe[0])
    b = min(b, safe[1])
    if np.isinf(a) or np.isinf(b):
        raise AssertionError("safe bounds must be finite")
    lo_open = a <= safe[0]
    hi_open = b >= safe[1]
    if lo_open and hi_open:
        c = _anchor(g, safe)
        return combine([_tail(g, c, -1.0, safe[0], rel_tol, budget, depth),
                        _tail(g, c, +1.0, safe[1], rel_tol, budget, depth)])
    if hi_open:
        return _tail(g, a, +1.0, safe[1], rel_tol, budget, depth)
    if lo_open:
        return _tail(g, b, -1.0, safe[0], rel_tol, budget, depth)
    return _finite(g, a, b, rel_tol, budget, depth)


def _finite(g, a, b, rel_tol, budget, depth, log_atol=-np.inf) -> LineResult:
    try:
        res = integrate_log(g, a, b, rel_tol, budget, log_atol=log_atol)
    except BlowUp as exc:
        p = exc.point
        if depth >= _MAX_SPLIT_DEPTH:
            return LineResult(UNDETERMINED, np.nan, np.inf, 0, [f"unresolved blow-up at {p:g}"])
        return _split_singular(g, a, b, p, rel_tol, budget, depth)
    if res.converged:
        return LineResult(FINITE, res.log_value, res.rel_error, res.evaluations)
    p = res.stuck_at
    if p is None or depth >= _MAX_SPLIT_DEPTH:
        return LineResult(UNDETERMINED, np.nan, np.inf, res.evaluations,
                          [f"quadrature budget exhausted on [{a:g}, {b:g}]"])
    out = _split_singular(g, a, b, p, rel_tol, budget, depth)
    out.evaluations += res.evaluations
    return out


def _split_singular(g, a, b, p, rel_tol, budget, depth) -> LineResult:
    tiny = 1e-9 * (b - a)
    if p - a <= tiny:
        return _singular_end(g, a, b, +1.0, rel_tol, budget, depth)
    if b - p <= tiny:
        return _singular_end(g, b, a, -1.0, rel_tol, budget, depth)
    return combine([_singular_end(g, p, a, -1.0, rel_tol, budget, depth),
                    _singular_end(g, p, b, +1.0, rel_tol, budget, depth)])


def _singular_end(g, p, other, direction, rel_tol, budget, depth) -> LineResult:
    """Integral between a suspected singular point p and ``other`` via v = log|u - p|."""
    def h(v):
        return g(p + direction * np.exp(v)) + v

    # below ~2^20 ulps the offset x - p is too coarse to integrate reliably
    v_min = float(np.log(2.0 ** 20 * np.spacing(abs(p)))) if p != 0 else -700.0
    v_max = float(np.log(abs(other - p)))
    if v_max <= v_min:
        return LineResult.zero()
    res = _tail(h, v_max, -1.0, v_min, rel_tol, budget, depth + 1)
    if res.status == INFINITE:
        res.notes.append(f"non-integrable singularity at {p:g}")
    return res


def _probe_offsets(limit: float) -> np.ndarray:
    # eight per octave, so an oscillating factor does not alias into a false drop
    s = 2.0 ** np.arange(-6, 64, 0.125)
    return s[s < limit]


def _fine_width(gs, pv, anchor) -> float | None:
    """Offset at which a sharp peak sitting at the anchor has dropped by e, if any."""
    # the one-sided limit, not g(anchor): the anchor may carry an atom
    floor = 8.0 * np.spacing(abs(anchor)) if anchor != 0 else 1e-300
    with np.errstate(invalid="ignore", over="ignore"):
        g0 = float(np.asarray(gs(np.array([floor])), dtype=float)[0])
    if not np.isfinite(g0):
        return None
    coarse = pv[np.isfinite(pv)]
    if coarse.size and g0 <= coarse.max() + 1.0:
        return None
    s = 2.0 ** np.arange(-7.0, -1075.0, -1.0)
    s = s[s >= floor]
    with np.errstate(invalid="ignore", over="ignore"):
        v = np.nan_to_num(np.asarray(gs(s), dtype=float), nan=-np.inf, posinf=np.inf)
    ok = np.nonzero(v >= g0 - 1.0)[0]
    return float(s[ok[0]]) if ok.size else float(s[-1]) if s.size else None


def _anchor(g, safe) -> float:
    s = _probe_offsets(min(-safe[0], safe[1]))
    pts = np.concatenate([-s[::-1], [0.0], s])
    with np.errstate(invalid="ignore"):
        vals = np.nan_to_num(np.asarray(g(pts), dtype=float), nan=-np.inf, posinf=np.finfo(float).max)
    if not np.isfinite(vals).any():
        return 0.0
    # on a plateau prefer the probe nearest the origin
    near_top = np.nonzero(vals >= vals.max() - 1e-6)[0]
    return float(pts[near_top[np.argmin(np.abs(pts[near_top]))]])


def _tail(g, anchor, direction, limit, rel_tol, budget, depth) -> LineResult:
    """Integral of exp(g) from ``anchor`` towards ``limit`` (an effectively infinite end)."""
    span = abs(limit - anchor)
    if span <= 0:
        return LineResult.zero()

    def gs(s):
        return g(anchor + direction * np.asarray(s))

    # Probe at s = 2^j to locate the bulk.  Divergence is only declared past
    # the point where the integrand has dropped for good by e from its probed
    # peak (s_drop), unless it never drops or is still near its peak far out.
    s_probe = _probe_offsets(span)
    neval = 0
    jpeak, s_drop, far_peak = None, None, False
    if s_probe.size:
        with np.errstate(invalid="ignore", over="ignore"):
            pv = np.nan_to_num(np.asarray(gs(s_probe), dtype=float), nan=-np.inf,
                               posinf=np.finfo(float).max)
        neval += s_probe.size
        if np.isfinite(pv).any():
            top = pv.max() - 1.0
            jpeak = int(np.argmax(pv >= top))
            # the envelope (suffix maximum) must drop, not just one probe of
            # an oscillating integrand
            envelope = np.maximum.accumulate(pv[::-1])[::-1]
            below = np.nonzero(envelope[jpeak:] < top)[0]
            if below.size:
                s_drop = float(s_probe[jpeak + below[0]])
            far = s_probe >= 0.5 * span
            far_peak = bool(far.any() and pv[far].max() >= top)
    w0 = s_probe[jpeak] if jpeak is not None else 1.0
    w0 = min(max(w0, 2.0 ** -6), span)
    # a peak at the anchor narrower than the coarsest probe spacing
    fine = _fine_width(gs, pv if s_probe.size else np.array([]), anchor)
    if fine is not None:
        w0 = min(fine, span)
        neval += 80

    edges = [0.0, w0]
    parts: list[LineResult] = []
    inc: list[float] = []  # log increments
    widths: list[float] = []
    total = -np.inf
    notes: list[str] = []
    status = UNDETERMINED
    for k in range(_MAX_SHELLS):
        lo_s, hi_s = edges[-2], edges[-1]
        if budget - neval < 2000:
            notes.append("evaluation budget exhausted in tail")
            break
        # shells negligible next to what is already accumulated need no
        # relative accuracy of their own
        atol = total + np.log(0.01 * rel_tol) if np.isfinite(total) else -np.inf
        piece = _finite(gs, lo_s, hi_s, rel_tol, budget - neval, depth, atol)
        neval += piece.evaluations
        if piece.status != FINITE:
            piece.evaluations = neval
            piece.notes.append(f"tail shell [{lo_s:g}, {hi_s:g}] from {anchor:g}")
            return piece
        parts.append(piece)
        inc.append(piece.log_value)
        widths.append(hi_s - lo_s)
        total = np.logaddexp(total, piece.log_value)

        at_limit = hi_s >= span
        if len(inc) >= 3 and np.isfinite(total):
            last = inc[-1]
            if last <= np.log(0.1 * rel_tol) + total and inc[-1] <= inc[-2]:
                status = FINITE
                break
            ratios = _normalized_ratios(inc, widths)
            r = ratios[-3:]
            if len(r) == 3 and np.all(r < 0.9):
                rmax = float(np.max(r))
                remainder = last + np.log(rmax / (1.0 - rmax))
                if remainder <= np.log(rel_tol) + total:
                    parts.append(LineResult(FINITE, remainder, 1.0, 0))
                    status = FINITE
                    break
            r4 = ratios[-4:]
            beyond_peak = far_peak or s_drop is None or hi_s >= 2.0 * s_drop
            # point probes can alias with an oscillating factor; shell averages
            # cannot, so a short run of shells only counts while the last one
            # sits within e of every earlier one, and a long run counts anyway
            avg = np.array(inc) - np.log(widths)
            level = avg[-1] >= avg.max() - 1.0
            r8 = ratios[-8:]
            steady = len(r8) == 8 and np.all(r8 >= _DIVERGENCE_RATIO)
            short = len(r4) == 4 and np.all(r4 >= _DIVERGENCE_RATIO) and level
            if beyond_peak and (short or steady):
                status = INFINITE
                break
        if neval >= budget:
            notes.append("evaluation budget exhausted in tail")
            break
        if at_limit:
            if not np.isfinite(total):
                status = FINITE  # identically zero all the way out
            elif inc[-1] <= np.log(rel_tol) + total and (len(inc) < 2 or inc[-1] <= inc[-2]):
                status = FINITE  # settled before the end of representable range
            elif (rem := _edge_remainder(gs, hi_s, hi_s - lo_s, total, rel_tol)) is not None:
                if rem.status == INFINITE:
                    status = INFINITE
                    notes.append("integrand not decaying at the representable edge")
                else:
                    parts.append(rem)
                    status = FINITE
                    notes.append("remainder past representable range extrapolated")
            else:
                notes.append(f"tail reached representable limit {limit:g} without settling")
            break
        edges.append(min(2.0 * hi_s, span))
    else:
        notes.append(f"no verdict after {_MAX_SHELLS} tail shells")

    if status == INFINITE:
        return LineResult(INFINITE, np.inf, 0.0, neval, notes + ["doubling shells did not shrink"])
    if status == UNDETERMINED:
        return LineResult(UNDETERMINED, np.nan, np.inf, neval, notes)
    out = combine(parts)
    out.evaluations = neval
    out.notes.extend(notes)
    return out


def _edge_remainder(gs, s_end, width, total, rel_tol):
    """Exponential extrapolation of the integral beyond the representable edge.

    Fits a local decay rate from the log-integrand at the edge and a little
    inside it, at two step sizes; accepted only if the rate is clearly
    positive, both fits agree and the remainder is small relative to ``total``.
    A log-integrand that is not decreasing at the edge signals divergence.
    """
    steps = np.array([0.25, 0.0625]) * width
    with np.errstate(invalid="ignore", over="ignore"):
        v = np.asarray(gs(np.array([s_end, s_end - steps[0], s_end - steps[1]])), dtype=float)
    if not np.all(np.isfinite(v)):
        return None
    rates = (v[1:] - v[0]) / steps
    if np.all(rates <= 0):
        # the coordinate runs on to infinity past the edge
        return LineResult(INFINITE, np.inf, 0.0, 3)
    if np.any(rates <= 0):
        return None
    logs = v[0] - np.log(rates)
    if logs.max() > total + 0.5 * np.log(rel_tol):
        return None
    err = abs(np.expm1(logs[0] - logs[1]))
    if err > 0.1:
        return None
    return LineResult(FINITE, float(logs[1]), float(err), 3)


def _normalized_ratios(inc, widths) -> np.ndarray:
    """Shell-to-shell ratios rescaled as if each shell had twice the previous width."""
    li = np.array(inc)
    w = np.array(widths)
    if li.size < 2:
        return np.array([])
    with np.errstate(invalid="ignore", over="ignore"):
        per_width = li - np.log(w)
        r = np.exp(per_width[1:] - per_width[:-1]) * 2.0
    # both zero: shrinking is vacuous, count as not diverging
    r = np.where(np.isneginf(li[1:]), 0.0, r)
    return np.nan_to_num(r, nan=0.0)
