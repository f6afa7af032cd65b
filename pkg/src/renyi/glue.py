"""Density gluing: restricted MCMC on overlapping windows, stitched by offsets.

Each window restricts the (possibly improper) target to a proper law, so a
random-walk Metropolis chain can sample it.  Kernel density estimates of the
windows agree up to unknown additive constants on the log scale; aligning
them on the overlaps recovers one global log-density up to a single constant.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .measure import RenyiState

GRID_POINTS = 512
# minimum local sample weight (expected samples within one bandwidth) for a grid point
WEIGHT_FLOOR = 1000.0
MIN_SHARED = 20


class AlignmentError(RuntimeError):
    """Two consecutive windows do not share enough well-sampled points."""

    def __init__(self, pair: tuple[int, int], shared: int):
        super().__init__(f"windows {pair[0]} and {pair[1]} share only {shared} well-sampled "
                         f"grid points (need {MIN_SHARED})")
        self.pair = pair
        self.shared = shared


@dataclass(frozen=True)
class WindowScheme:
    """Ordered overlapping intervals in sampler coordinates.

    With ``coordinate="log"`` the sampler works in u = log(theta) and the
    windows are intervals in u.
    """

    windows: tuple[tuple[float, float], ...]
    coordinate: str = "raw"
    overlap_fraction: float = 0.5

    def __post_init__(self):
        if self.coordinate not in ("raw", "log"):
            raise ValueError("coordinate must be 'raw' or 'log'")
        if not self.windows:
            raise ValueError("need at least one window")
        for lo, hi in self.windows:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bad window ({lo}, {hi})")
        for (a0, a1), (b0, b1) in zip(self.windows[:-1], self.windows[1:]):
            if not (b0 < a1 and a0 < b0):
                raise ValueError(f"windows ({a0}, {a1}) and ({b0}, {b1}) must overlap in order")

    @classmethod
    def spaced(cls, lo: float, hi: float, n: int = 6, overlap: float = 0.5,
               coordinate: str = "raw") -> "WindowScheme":
        """n equal windows covering [lo, hi] (sampler coordinates) with the given overlap."""
        if not 0.0 < overlap < 1.0:
            raise ValueError("overlap must lie in (0, 1)")
        if n < 1:
            raise ValueError("need at least one window")
        width = (hi - lo) / (1.0 + (n - 1) * (1.0 - overlap))
        step = width * (1.0 - overlap)
        wins = tuple((lo + i * step, lo + i * step + width) for i in range(n))
        wins = wins[:-1] + ((wins[-1][0], hi),)
        return cls(wins, coordinate, overlap)

    @classmethod
    def log_spaced(cls, lo: float, hi: float, n: int = 6, overlap: float = 0.5) -> "WindowScheme":
        """Windows equally spaced in log(theta) over theta in [lo, hi]."""
        if not 0 < lo < hi:
            raise ValueError("log-spaced windows need 0 < lo < hi")
        return cls.spaced(math.log(lo), math.log(hi), n, overlap, "log")

    def to_param(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(u) if self.coordinate == "log" else u

    def log_jacobian(self, u):
        u = np.asarray(u, dtype=float)
        return u if self.coordinate == "log" else np.zeros_like(u)


@dataclass(frozen=True)
class ChainConfig:
    chain_length: int = 200_000
    burn_in: int = 20_000
    proposal_scale: float | None = None  # None: auto-tune per window
    master_seed: int = 0
    pilot_steps: int = 2000
    target_acceptance: float = 0.35

    def __post_init__(self):
        if not 0 <= self.burn_in < self.chain_length:
            raise ValueError("burn_in must be below chain_length")
        if self.proposal_scale is not None and not self.proposal_scale > 0:
            raise ValueError("proposal_scale must be positive")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ChainResult:
    samples: np.ndarray
    acceptance: float
    proposal_scale: float
    window_index: int
    warning: str = ""


def window_rng(master_seed: int, window_index: int) -> np.random.Generator:
    """Independent stream per window, derived only from (master_seed, window_index)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(window_index,)))


def _sampler_logp(target: RenyiState, scheme: WindowScheme):
    """Scalar log-density in sampler coordinates (Jacobian included)."""
    if target.support is None:
        f = target.log_density
    else:
        def f(x):
            return target.logpdf(np.array([x]))[0]
    log = scheme.coordinate == "log"

    def logp(u: float) -> float:
        x = math.exp(u) if log else u
        v = float(f(np.float64(x)))
        if math.isnan(v):
            raise ValueError(f"log-density is NaN at {x!r}")
        return v + u if log else v

    return logp


def _metropolis(logp, x, lx, scale, lo, hi, steps, rng, out=None):
    z = rng.standard_normal(steps) * scale
    lu = np.log(rng.random(steps))
    acc = 0
    for i in range(steps):
        y = x + z[i]
        if lo <= y <= hi:
            ly = logp(y)
            if lu[i] < ly - lx:
                x, lx = y, ly
                acc += 1
        if out is not None:
            out[i] = x
    return x, lx, acc


def sample_restricted(target: RenyiState, window: tuple[float, float], cfg: ChainConfig,
                      window_index: int = 0, scheme: WindowScheme | None = None) -> ChainResult:
    """Random-walk Metropolis targeting ``target`` restricted to ``window``.

    ``window`` is in sampler coordinates (log(theta) when ``scheme`` says
    so).  A pilot of ``cfg.pilot_steps`` steps doubles or halves the proposal
    scale toward the target acceptance; the kernel is then frozen and the
    pilot discarded.
    """
    scheme = scheme or WindowScheme((tuple(window),))
    lo, hi = map(float, window)
    logp = _sampler_logp(target, scheme)
    rng = window_rng(cfg.master_seed, window_index)

    # start at the best of a coarse grid so the chain begins inside the support
    grid = lo + (hi - lo) * (np.arange(64) + 0.5) / 64
    vals = np.array([logp(float(g)) for g in grid])
    if not np.isfinite(vals).any():
        raise ValueError(f"target vanishes on window {window}")
    x = float(grid[int(np.argmax(vals))])
    lx = float(vals.max())

    scale = cfg.proposal_scale
    if scale is None:
        scale = 0.25 * (hi - lo)
        batch = 100
        for _ in range(max(cfg.pilot_steps // batch, 1)):
            x, lx, acc = _metropolis(logp, x, lx, scale, lo, hi, batch, rng)
            rate = acc / batch
            if rate > cfg.target_acceptance + 0.1:
                scale = min(2.0 * scale, 4.0 * (hi - lo))
            elif rate < cfg.target_acceptance - 0.1:
                scale *= 0.5

    out = np.empty(cfg.chain_length)
    x, lx, acc = _metropolis(logp, x, lx, scale, lo, hi, cfg.chain_length, rng, out)
    rate = acc / cfg.chain_length
    warning = "" if 0.1 <= rate <= 0.7 else f"acceptance {rate:.3f} outside [0.1, 0.7]"
    return ChainResult(out[cfg.burn_in:], rate, scale, window_index, warning)


# ---------------------------------------------------------------------------
# kernel density estimates


@dataclass(frozen=True)
class KdeTable:
    grid: np.ndarray
    log_density: np.ndarray
    weight: np.ndarray  # expected number of samples within one bandwidth
    window: tuple[float, float]
    bandwidth: float
    n_samples: int


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * x.size ** -0.2


def kde_log_density(samples, window: tuple[float, float], grid=None,
                    n_grid: int = GRID_POINTS, bins: int = 4096) -> KdeTable:
    """Gaussian KDE with Silverman bandwidth, reflected at both window edges.

    Samples are binned finely before smoothing, so the cost does not grow
    with the chain length.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 1000:
        raise ValueError(f"need at least 1000 samples, got {x.size}")
    lo, hi = map(float, window)
    h = silverman_bandwidth(x)
    if not h > 0 or np.ptp(x) == 0:
        raise ValueError("samples are degenerate (zero bandwidth)")
    grid = np.linspace(lo, hi, n_grid) if grid is None else np.asarray(grid, dtype=float)

    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    mids = 0.5 * (edges[:-1] + edges[1:])
    keep = counts > 0
    c, m = counts[keep].astype(float), mids[keep]
    dens = np.zeros_like(grid)
    for centers in (m, 2 * lo - m, 2 * hi - m):
        d = (grid[:, None] - centers[None, :]) / h
        dens += np.exp(-0.5 * d * d) @ c
    dens /= x.size * h * math.sqrt(2 * math.pi)
    with np.errstate(divide="ignore"):
        logd = np.log(np.maximum(dens, 1e-300))
    weight = x.size * dens * h
    return KdeTable(grid, logd, weight, (lo, hi), h, int(x.size))


# ---------------------------------------------------------------------------
# alignment and gluing


def _shared(prev: KdeTable, nxt: KdeTable, floor: float):
    lo, hi = max(prev.window[0], nxt.window[0]), min(prev.window[1], nxt.window[1])
    # points of both grids, so the pair is treated the same in either order
    both = np.union1d(prev.grid, nxt.grid)
    pts = both[(both >= lo) & (both <= hi)]
    lp = np.interp(pts, prev.grid, prev.log_density)
    wp = np.interp(pts, prev.grid, prev.weight)
    ln = np.interp(pts, nxt.grid, nxt.log_density)
    wn = np.interp(pts, nxt.grid, nxt.weight)
    w = np.minimum(wp, wn)
    ok = w >= floor
    return ln[ok] - lp[ok], w[ok]


def align_offsets(tables: Sequence[KdeTable], floor: float = WEIGHT_FLOOR,
                  min_shared: int = MIN_SHARED) -> np.ndarray:
    """Cumulative additive offsets bringing each table onto window 0's scale.

    Consecutive offsets are min-weight weighted means of the log differences
    on shared grid points.
    """
    offsets = np.zeros(len(tables))
    for i in range(1, len(tables)):
        d, w = _shared(tables[i - 1], tables[i], floor)
        if d.size < min_shared:
            raise AlignmentError((i - 1, i), int(d.size))
        offsets[i] = offsets[i - 1] - float(np.sum(w * d) / np.sum(w))
    return offsets


def overlap_counts(tables: Sequence[KdeTable], floor: float = WEIGHT_FLOOR) -> list[int]:
    return [int(_shared(a, b, floor)[0].size) for a, b in zip(tables[:-1], tables[1:])]


@dataclass
class GlueResult:
    per_window: list[KdeTable]
    offsets: np.ndarray
    sampler_grid: np.ndarray
    grid: np.ndarray  # parameter coordinates
    log_density: np.ndarray  # glued, parameter coordinates, up to one constant
    window_id: np.ndarray
    weight: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def glue(tables: Sequence[KdeTable], offsets, scheme: WindowScheme | None = None) -> GlueResult:
    """Merge aligned tables on the union of their grids.

    Where windows overlap, aligned estimates are averaged with their sample
    weights.  With a log-coordinate scheme the Jacobian is removed so the
    result is a log-density in the original parameter.
    """
    offsets = np.asarray(offsets, dtype=float)
    if len(offsets) != len(tables):
        raise ValueError("one offset per table")
    grid = np.concatenate([t.grid for t in tables])
    wid = np.concatenate([np.full(t.grid.size, i) for i, t in enumerate(tables)])
    order = np.argsort(grid, kind="stable")
    grid, wid = grid[order], wid[order]

    num = np.zeros_like(grid)
    den = np.zeros_like(grid)
    for i, (t, off) in enumerate(zip(tables, offsets)):
        inside = (grid >= t.window[0]) & (grid <= t.window[1])
        w = np.interp(grid[inside], t.grid, t.weight)
        # a point's own window always contributes, even if thinly sampled
        w = np.where(wid[inside] == i, np.maximum(w, 1e-300), w)
        num[inside] += w * (np.interp(grid[inside], t.grid, t.log_density) + off)
        den[inside] += w
    glued = num / den
    scheme = scheme or WindowScheme(tuple(t.window for t in tables))
    param = scheme.to_param(grid)
    glued = glued - scheme.log_jacobian(grid)
    weight = den
    return GlueResult(list(tables), offsets, grid, param, glued, wid, weight,
                      {"overlap_points": overlap_counts(tables)})


def run_glue(target: RenyiState, scheme: WindowScheme, cfg: ChainConfig,
             executor: Executor | None = None) -> GlueResult:
    """Full pipeline: sample each window, estimate, align, glue.

    Windows may run on ``executor``; results are merged in window order and
    each window's randomness depends only on (master_seed, window index), so
    the output does not depend on scheduling.
    """
    jobs = [(target, w, cfg, i, scheme) for i, w in enumerate(scheme.windows)]
    if executor is None:
        chains = [sample_restricted(*j) for j in jobs]
    else:
        chains = list(executor.map(sample_restricted, *zip(*jobs)))
    tables = [kde_log_density(c.samples, w) for c, w in zip(chains, scheme.windows)]
    offsets = align_offsets(tables)
    result = glue(tables, offsets, scheme)
    result.diagnostics.update({
        "acceptance": [c.acceptance for c in chains],
        "proposal_scale": [c.proposal_scale for c in chains],
        "warnings": [c.warning for c in chains if c.warning],
        "master_seed": cfg.master_seed,
        "window_seeds": [[cfg.master_seed, i] for i in range(len(chains))],
        "windows": [list(w) for w in scheme.windows],
        "coordinate": scheme.coordinate,
        "config": asdict(cfg),
    })
    return result


def glue_error_vs_analytic(result: GlueResult, truth: RenyiState,
                           floor: float = WEIGHT_FLOOR) -> float:
    """Sup-norm gap to ``truth`` after removing the least-squares constant shift.

    Only grid points with sample weight at least ``floor`` are compared.
    """
    mask = result.weight >= floor
    if not mask.any():
        raise ValueError("no grid point has adequate sample weight")
    diff = result.log_density[mask] - truth.logpdf(result.grid[mask])
    if not np.all(np.isfinite(diff)):
        raise ValueError("truth is not finite on the compared grid points")
    return float(np.max(np.abs(diff - diff.mean())))


def write_csv(result: GlueResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["grid", "gluedLogDensity", "windowId", "weight"])
        for g, v, i, wt in zip(result.grid, result.log_density, result.window_id, result.weight):
            w.writerow([f"{g:.17g}", f"{v:.17g}", int(i), f"{wt:.17g}"])


def diagnostics_json(result: GlueResult) -> str:
    d = dict(result.diagnostics)
    d["offsets"] = [float(o) for o in result.offsets]
    return json.dumps(d, indent=2, sort_keys=True)
