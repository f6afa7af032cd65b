"""Adaptive Gauss-Kronrod (G7/K15) quadrature of log-valued integrands.

Integrands are supplied as vectorized *log* functions so that densities known
only up to a huge or tiny constant can be integrated without overflow.  The
running sum is kept relative to a floating shift equal to the largest
log-integrand value seen so far.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Kronrod nodes on [0, 1]; the Gauss nodes are the odd-indexed ones plus 0.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point rule on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[:-1][::-1]])
GAUSS_WEIGHTS[7] = _WG[-1]

DEFAULT_BUDGET = 1_000_000


class BlowUp(Exception):
    """The integrand returned +inf at an evaluation point."""

    def __init__(self, point: float):
        super().__init__(f"integrand is infinite at {point!r}")
        self.point = point


@dataclass(frozen=True)
class QuadResult:
    log_value: float
    rel_error: float
    evaluations: int
    converged: bool
    # location of an interval that could not be refined further, if any
    stuck_at: float | None = None


def simplest_in(lo: float, hi: float) -> float:
    """The float in [lo, hi] with the shortest decimal form.

    Singular points are usually "round" numbers supplied by the caller, so
    this recovers them exactly from the interval where refinement stalled.
    """
    lo, hi = float(lo), float(hi)
    if lo <= 0.0 <= hi:
        return 0.0
    mid = 0.5 * (lo + hi)
    for digits in range(17):
        for x in (mid, lo, hi):
            cand = float(f"{x:.{digits}e}")
            if lo <= cand <= hi:
                return cand
    return mid


def _rule(logf, a, b):
    """Apply the 15-point rule to each interval [a_i, b_i]; returns (log_vals, half)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    pts = mid[:, None] + half[:, None] * NODES[None, :]
    vals = np.asarray(logf(pts.ravel()), dtype=float).reshape(pts.shape)
    if np.isnan(vals).any():
        bad = pts[np.isnan(vals)][0]
        raise ValueError(f"log-integrand is NaN at {bad!r}")
    if np.isposinf(vals).any():
        raise BlowUp(float(pts[np.isposinf(vals)][0]))
    return vals, half


def integrate_log(logf, a: float, b: float, rel_tol: float = 1e-9,
                  budget: int = DEFAULT_BUDGET, init_pieces: int = 8,
                  log_atol: float = -np.inf) -> QuadResult:
    """Integrate ``exp(logf)`` over the finite interval [a, b].

    Returns the log of the integral.  ``logf`` must accept a 1-D array.
    Stops once the error estimate is below ``rel_tol`` relative to the
    integral or below ``exp(log_atol)`` in absolute terms.
    Raises :class:`BlowUp` when an evaluation point yields ``+inf``.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate_log needs finite limits")
    if b <= a:
        return QuadResult(-np.inf, 0.0, 0, True)

    edges = np.linspace(a, b, init_pieces + 1)
    lo, hi = edges[:-1], edges[1:]
    vals, half = _rule(logf, lo, hi)
    neval = vals.size
    shift = float(vals.max())
    if not np.isfinite(shift):
        # integrand vanishes on every node
        return QuadResult(-np.inf, 0.0, neval, True)

    def estimates(v, h):
        e = np.exp(v - shift)
        k = h * (e @ KRONROD_WEIGHTS)
        g = h * (e @ GAUSS_WEIGHTS)
        return k, np.abs(k - g)

    k_est, err = estimates(vals, half)
    width_floor = 64 * np.finfo(float).eps * max(abs(a), abs(b), b - a)

    while True:
        total = k_est.sum()
        total_err = err.sum()
        small = total_err > 0 and np.log(total_err) + shift <= log_atol
        if total_err <= rel_tol * total or total_err == 0.0 or small:
            return QuadResult(np.log(total) + shift if total > 0 else -np.inf,
                              total_err / total if total > 0 else 0.0, neval, True)

        # split the worst intervals until the rest would satisfy the target
        order = np.argsort(err)[::-1]
        target = 0.5 * rel_tol * total
        csum = np.cumsum(err[order])
        n_split = int(np.searchsorted(-(total_err - csum), -target) + 1)
        n_split = max(1, min(n_split, 64, len(order)))
        pick = order[:n_split]

        if neval + 30 * n_split > budget:
            worst = order[0]
            return QuadResult(np.log(total) + shift, total_err / total, neval, False,
                              stuck_at=simplest_in(lo[worst], hi[worst]))
        widths = hi[pick] - lo[pick]
        if (widths <= width_floor).any():
            w = pick[np.argmax(widths <= width_floor)]
            return QuadResult(np.log(total) + shift, total_err / total, neval, False,
                              stuck_at=simplest_in(lo[w], hi[w]))

        mids = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mids])
        new_hi = np.concatenate([mids, hi[pick]])
        nv, nh = _rule(logf, new_lo, new_hi)
        neval += nv.size

        top = float(nv.max())
        if top > shift + 50.0:
            k_est = k_est * np.exp(shift - top)
            err = err * np.exp(shift - top)
            shift = top
        nk, ne = estimates(nv, nh)

        keep = np.ones(len(lo), dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        k_est = np.concatenate([k_est[keep], nk])
        err = np.concatenate([err[keep], ne])
