"""Base measures and the windows (conditioning events) defined on them.

A window is a finite union of axis-aligned boxes minus a finite union of boxes,
plus an explicit choice of which atoms of the base measure it contains.
Regions are canonicalised by coordinate compression, so union and
intersection are exact.  Membership is closed for included boxes and open
for excluded ones; for Lebesgue parts the distinction has measure zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

LEBESGUE_1D = "lebesgue-1d"
LEBESGUE_2D = "lebesgue-2d"
COUNTING = "counting-nonneg-int"
LEBESGUE_ATOMS = "lebesgue-plus-atoms"
KINDS = (LEBESGUE_1D, LEBESGUE_2D, COUNTING, LEBESGUE_ATOMS)

Interval = tuple[float, float]
Box = tuple[Interval, ...]


def _as_box(box) -> Box:
    arr = np.asarray(box, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != 2:
        raise ValueError(f"box must be (lo, hi) pairs, got {box!r}")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


@dataclass(frozen=True)
class BaseMeasure:
    """Dominating measure: Lebesgue (1-D or 2-D), counting, or Lebesgue plus unit atoms."""

    kind: str
    domain: Box
    atoms: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown base kind {self.kind!r}")
        object.__setattr__(self, "domain", _as_box(self.domain))
        object.__setattr__(self, "atoms", tuple(float(a) for a in self.atoms))
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"empty domain interval ({lo}, {hi})")
        want = 2 if self.kind == LEBESGUE_2D else 1
        if self.dim != want:
            raise ValueError(f"{self.kind} needs a {want}-D domain")
        if self.kind == LEBESGUE_ATOMS and not self.atoms:
            raise ValueError("lebesgue-plus-atoms requires at least one atom")
        if self.kind != LEBESGUE_ATOMS and self.atoms:
            raise ValueError(f"{self.kind} base cannot carry atoms")
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("atoms must be distinct")
        lo, hi = self.domain[0]
        for a in self.atoms:
            if not lo <= a <= hi:
                raise ValueError(f"atom {a} lies outside the domain")

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def is_continuous(self) -> bool:
        return self.kind != COUNTING

    @classmethod
    def line(cls, lo=-np.inf, hi=np.inf):
        return cls(LEBESGUE_1D, ((lo, hi),))

    @classmethod
    def half_line(cls):
        return cls(LEBESGUE_1D, ((0.0, np.inf),))

    @classmethod
    def plane(cls, x=(-np.inf, np.inf), y=(-np.inf, np.inf)):
        return cls(LEBESGUE_2D, (x, y))

    @classmethod
    def counting(cls, upper=np.inf):
        return cls(COUNTING, ((0.0, upper),))

    @classmethod
    def line_with_atoms(cls, atoms=(0.0,), lo=-np.inf, hi=np.inf):
        return cls(LEBESGUE_ATOMS, ((lo, hi),), tuple(atoms))

    def whole(self) -> "WindowSet":
        return WindowSet((self.domain,))

    def validate_points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.dim == 2 and pts.shape[-1:] != (2,):
            raise ValueError("2-D base expects points with a trailing axis of length 2")
        return pts


@dataclass(frozen=True)
class WindowSet:
    """``(union of include) \\ (union of exclude)`` plus an atom selection.

    ``atoms=None`` means "the base atoms lying in the region"; an explicit
    tuple lists exactly the atoms included (possibly none).
    """

    include: tuple[Box, ...] = ()
    exclude: tuple[Box, ...] = ()
    atoms: tuple[float, ...] | None = None

    def __post_init__(self):
        inc = tuple(_as_box(b) for b in self.include)
        exc = tuple(_as_box(b) for b in self.exclude)
        dims = {len(b) for b in inc + exc}
        if len(dims) > 1:
            raise ValueError("all boxes of a window must share one dimension")
        object.__setattr__(self, "include", inc)
        object.__setattr__(self, "exclude", exc)
        if self.atoms is not None:
            object.__setattr__(self, "atoms", tuple(sorted({float(a) for a in self.atoms})))

    # -- constructors -----------------------------------------------------
    @classmethod
    def interval(cls, lo: float, hi: float, atoms=None) -> "WindowSet":
        return cls((((lo, hi),),), (), atoms)

    @classmethod
    def box(cls, x: Interval, y: Interval) -> "WindowSet":
        return cls(((x, y),))

    @classmethod
    def point(cls, *atoms: float) -> "WindowSet":
        """Window holding only the given atoms (no Lebesgue part)."""
        return cls((), (), atoms)

    @classmethod
    def empty(cls) -> "WindowSet":
        return cls((), (), ())

    def without(self, *boxes) -> "WindowSet":
        return WindowSet(self.include, self.exclude + tuple(_as_box(b) for b in boxes), self.atoms)

    @property
    def dim(self) -> int | None:
        for b in self.include + self.exclude:
            return len(b)
        return None

    # -- membership -------------------------------------------------------
    def in_region(self, points, dim: int | None = None) -> np.ndarray:
        """Geometric membership (closed include, open exclude); ignores atom flags."""
        pts = np.asarray(points, dtype=float)
        d = self.dim
        if d is None:
            return np.zeros(pts.shape[:-1] if dim == 2 else pts.shape, dtype=bool)
        cols = [pts] if d == 1 else [pts[..., 0], pts[..., 1]]
        inside = np.zeros(cols[0].shape, dtype=bool)
        for b in self.include:
            m = np.ones(cols[0].shape, dtype=bool)
            for c, (lo, hi) in zip(cols, b):
                m &= (c >= lo) & (c <= hi)
            inside |= m
        for b in self.exclude:
            m = np.ones(cols[0].shape, dtype=bool)
            for c, (lo, hi) in zip(cols, b):
                m &= (c > lo) & (c < hi)
            inside &= ~m
        return inside

    def included_atoms(self, base: BaseMeasure) -> tuple[float, ...]:
        if self.atoms is not None:
            return tuple(a for a in self.atoms if a in base.atoms)
        if not base.atoms:
            return ()
        mask = self.in_region(np.array(base.atoms))
        return tuple(a for a, m in zip(base.atoms, mask) if m)

    def contains(self, points, base: BaseMeasure) -> np.ndarray:
        """Membership honoring atom flags: an atom point is in the window iff the atom is."""
        pts = np.asarray(points, dtype=float)
        if self.dim is not None and self.dim != base.dim:
            raise ValueError(f"window is {self.dim}-D but base is {base.dim}-D")
        inside = self.in_region(pts, base.dim)
        if base.atoms:
            chosen = set(self.included_atoms(base))
            for a in base.atoms:
                at = pts == a
                if at.any():
                    inside = np.where(at, a in chosen, inside)
        return inside

    # -- canonical form ---------------------------------------------------
    def cells(self, domain: Box | None = None) -> list[Box]:
        """Disjoint boxes of positive volume whose union is the region (clipped to ``domain``)."""
        d = self.dim
        if d is None:
            return []
        kept = [c for c in _grid(self.include + self.exclude, d, domain) if self._holds(c)]
        return _merge(kept, d)

    def _holds(self, cell: Box) -> bool:
        if self.dim is None:
            return False
        rep = np.array([_representative(lo, hi) for lo, hi in cell])
        return bool(self.in_region(rep if len(cell) == 2 else rep[0]))

    def union(self, other: "WindowSet", base: BaseMeasure | None = None) -> "WindowSet":
        boxes = tuple(self.cells()) + tuple(other.cells())
        return WindowSet(boxes, (), _combine_atoms(self, other, base, set.union))

    def intersect(self, other: "WindowSet", base: BaseMeasure | None = None) -> "WindowSet":
        if self.dim is None or other.dim is None:
            return WindowSet((), (), _combine_atoms(self, other, base, set.intersection))
        if self.dim != other.dim:
            raise ValueError("windows of different dimension")
        edges = self.include + self.exclude + other.include + other.exclude
        boxes = [c for c in _grid(edges, self.dim) if self._holds(c) and other._holds(c)]
        return WindowSet(tuple(_merge(boxes, self.dim)), (),
                         _combine_atoms(self, other, base, set.intersection))

    def same_region(self, other: "WindowSet", base: BaseMeasure) -> bool:
        """Set equality up to Lebesgue-null boundaries (and exact on atoms)."""
        if set(self.included_atoms(base)) != set(other.included_atoms(base)):
            return False
        dom = base.domain
        a, b = self.cells(dom), other.cells(dom)
        if not a and not b:
            return True
        d = self.dim or other.dim
        edges = self.include + self.exclude + other.include + other.exclude
        return all(self._holds(c) == other._holds(c) for c in _grid(edges, d, dom))

    def subset_of(self, other: "WindowSet", base: BaseMeasure) -> bool:
        return self.union(other, base).same_region(other, base)

    def is_empty(self, base: BaseMeasure) -> bool:
        if self.included_atoms(base):
            return False
        if base.kind == COUNTING:
            return not self.contains(_integers_in(base, self), base).any()
        return not self.cells(base.domain)

    def to_dict(self) -> dict:
        return {"include": [list(map(list, b)) for b in self.include],
                "exclude": [list(map(list, b)) for b in self.exclude],
                "atoms": None if self.atoms is None else list(self.atoms)}

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSet":
        return cls(tuple(d.get("include", ())), tuple(d.get("exclude", ())), d.get("atoms"))


def _representative(lo: float, hi: float) -> float:
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    if np.isfinite(lo):
        return lo + 1.0
    if np.isfinite(hi):
        return hi - 1.0
    return 0.0


def _grid(boxes: Sequence[Box], d: int, domain: Box | None = None) -> list[Box]:
    """The product grid cut at every box edge (and the domain bounds)."""
    cuts = []
    for axis in range(d):
        pts = {x for b in boxes for x in b[axis]}
        if domain is not None:
            lo, hi = domain[axis]
            pts = {p for p in pts | {lo, hi} if lo <= p <= hi}
        cuts.append(sorted(pts))
    return [tuple(c) for c in product(*(list(zip(c[:-1], c[1:])) for c in cuts))]


def _merge(cells: Sequence[Box], dim: int) -> list[Box]:
    if dim == 1:
        out: list[list[float]] = []
        for ((lo, hi),) in sorted(cells):
            if out and out[-1][1] == lo:
                out[-1][1] = hi
            else:
                out.append([lo, hi])
        return [((lo, hi),) for lo, hi in out]
    # merge along y within each x column, then join columns with equal y-lists
    columns: dict[Interval, list[Interval]] = {}
    for x, y in sorted(cells):
        columns.setdefault(x, []).append(y)
    merged_cols = []
    for x, ys in sorted(columns.items()):
        ys_m = [c[0] for c in _merge([(y,) for y in ys], 1)]
        if merged_cols and merged_cols[-1][0][1] == x[0] and merged_cols[-1][1] == ys_m:
            merged_cols[-1][0] = (merged_cols[-1][0][0], x[1])
        else:
            merged_cols.append([x, ys_m])
    return [(x, y) for x, ys in merged_cols for y in ys]


def _combine_atoms(a: WindowSet, b: WindowSet, base, op):
    if a.atoms is None and b.atoms is None and base is None:
        return None
    if base is None:
        # explicit lists only; treat None as "no atoms" is wrong, so require base
        if a.atoms is None or b.atoms is None:
            raise ValueError("combining implicit and explicit atom flags needs the base measure")
        return tuple(op(set(a.atoms), set(b.atoms)))
    return tuple(op(set(a.included_atoms(base)), set(b.included_atoms(base))))


def _integers_in(base: BaseMeasure, window: WindowSet, cap: int = 10_000) -> np.ndarray:
    """Integers of the counting domain inside the window's bounding range (capped)."""
    lo, hi = base.domain[0]
    cells = window.cells(base.domain)
    if not cells:
        return np.array([], dtype=float)
    wlo = max(lo, min(c[0][0] for c in cells))
    whi = min(hi, max(c[0][1] for c in cells))
    start = int(np.ceil(wlo))
    stop = int(np.floor(min(whi, start + cap)))
    return np.arange(start, stop + 1, dtype=float)
