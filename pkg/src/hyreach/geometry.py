"""State-set representations for flowpipe construction.

Boxes are n-dimensional closed interval vectors over an ordered variable
scope.  Octagon2D is a template polyhedron over exactly two variables
(a clock and a time dimension) with the eight octagonal normals
+x, -x, +t, -t, x+t, x-t, -x+t, -x-t.

All operations are pure; arithmetic is double precision with an optional
outward-rounding slack applied by callers via ``widen``.  Strict relations
are relaxed to closed ones here; the concrete oracle in ``model`` keeps them
strict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .model import (AffineReset, Condition, EQ, Flow, GE, GT, LE, LT,
                    ScopeError)

OCT_DIRS = _kernels.OCT_DIRS


@dataclass(frozen=True)
class TimeInterval:
    """A closed interval [lo, hi] of time, lo <= hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"bad time interval [{self.lo}, {self.hi}]")

    def intersect(self, other: "TimeInterval") -> Optional["TimeInterval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return TimeInterval(lo, hi) if lo <= hi else None

    def overlaps(self, other: "TimeInterval") -> bool:
        return max(self.lo, other.lo) <= min(self.hi, other.hi)

    def hull(self, other: "TimeInterval") -> "TimeInterval":
        return TimeInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def shift(self, dt: float) -> "TimeInterval":
        return TimeInterval(self.lo + dt, self.hi + dt)


# ---------------------------------------------------------------------------
# condition compilation: single-variable constraints become per-dimension
# bounds (exact for boxes); everything else is kept as half-spaces c.x <= b

class CompiledCondition:
    __slots__ = ("scope", "lo", "hi", "general")

    def __init__(self, scope, lo, hi, general):
        self.scope = scope
        self.lo = lo
        self.hi = hi
        self.general = general  # list of (coefs ndarray, ub)


def compile_condition(cond: Condition, scope: Sequence[str]) -> CompiledCondition:
    """Compile a condition for set-based use; strict relations are closed."""
    index = {name: i for i, name in enumerate(scope)}
    n = len(scope)
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    general = []

    def add_le(coefs, ub):
        nz = np.nonzero(coefs)[0]
        if len(nz) == 0:
            if 0.0 > ub:
                # constant false: empty via contradictory bounds
                lo[:], hi[:] = 1.0, 0.0
                if n == 0:
                    general.append((coefs, ub))
            return
        if len(nz) == 1:
            d = nz[0]
            c = coefs[d]
            if c > 0:
                hi[d] = min(hi[d], ub / c)
            else:
                lo[d] = max(lo[d], ub / c)
        else:
            general.append((coefs, ub))

    for c in cond.constraints:
        coefs = np.zeros(n)
        for name, coef in c.terms:
            if name not in index:
                raise ScopeError(f"constraint variable {name!r} not in scope {tuple(scope)}")
            coefs[index[name]] = coef
        if c.rel in (LE, LT):
            add_le(coefs, c.bound)
        elif c.rel in (GE, GT):
            add_le(-coefs, -c.bound)
        elif c.rel == EQ:
            add_le(coefs.copy(), c.bound)
            add_le(-coefs, -c.bound)
    return CompiledCondition(tuple(scope), lo, hi, general)


class Box:
    """A closed axis-aligned box over an ordered variable scope; may be empty."""

    __slots__ = ("scope", "lo", "hi", "_empty")

    def __init__(self, scope: Sequence[str], lo, hi, empty: bool = False):
        self.scope = tuple(scope)
        self.lo = np.asarray(lo, dtype=np.float64).copy()
        self.hi = np.asarray(hi, dtype=np.float64).copy()
        self._empty = bool(empty) or bool(np.any(self.lo > self.hi))

    # -- constructors
    @classmethod
    def from_intervals(cls, intervals: Mapping[str, Tuple[float, float]]) -> "Box":
        scope = tuple(intervals)
        lo = [intervals[v][0] for v in scope]
        hi = [intervals[v][1] for v in scope]
        return cls(scope, lo, hi)

    @classmethod
    def point(cls, values: Mapping[str, float]) -> "Box":
        return cls.from_intervals({v: (x, x) for v, x in values.items()})

    @classmethod
    def empty(cls, scope: Sequence[str]) -> "Box":
        n = len(scope)
        return cls(scope, np.ones(n), np.zeros(n), empty=True)

    # -- queries
    @property
    def dim(self) -> int:
        return len(self.scope)

    def is_empty(self) -> bool:
        return self._empty

    def interval(self, name: str) -> Tuple[float, float]:
        i = self.scope.index(name)
        return float(self.lo[i]), float(self.hi[i])

    def contains_point(self, values, tol: float = 0.0) -> bool:
        if self._empty:
            return False
        v = np.asarray([values[s] for s in self.scope]) if isinstance(values, Mapping) else np.asarray(values)
        return bool(np.all(v >= self.lo - tol) and np.all(v <= self.hi + tol))

    def contains(self, other: "Box", tol: float = 0.0) -> bool:
        if other._empty:
            return True
        if self._empty:
            return False
        self._check_scope(other)
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def _check_scope(self, other):
        if self.scope != other.scope:
            raise ScopeError(f"scope mismatch: {self.scope} vs {other.scope}")

    def __eq__(self, other):
        if not isinstance(other, Box) or self.scope != other.scope:
            return False
        if self._empty or other._empty:
            return self._empty and other._empty
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    def __repr__(self):
        if self._empty:
            return f"Box(empty over {self.scope})"
        parts = ", ".join(f"{s}:[{l:g},{h:g}]" for s, l, h in zip(self.scope, self.lo, self.hi))
        return f"Box({parts})"

    # -- operations
    def _rates_vec(self, rates) -> np.ndarray:
        if isinstance(rates, Flow):
            return np.asarray([rates.rate(v) for v in self.scope])
        if isinstance(rates, Mapping):
            return np.asarray([float(rates.get(v, 0.0)) for v in self.scope])
        vec = np.asarray(rates, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise ScopeError("rate vector length does not match scope")
        return vec

    def elapse(self, rates, dt: TimeInterval) -> "Box":
        """Exact time successor set {v + c*tau | v in self, tau in dt}."""
        if self._empty:
            return self
        c = self._rates_vec(rates)
        lo = self.lo + np.minimum(c * dt.lo, c * dt.hi)
        hi = self.hi + np.maximum(c * dt.lo, c * dt.hi)
        return Box(self.scope, lo, hi)

    def intersect(self, cond) -> "Box":
        """Over-approximate intersection; exact for single-variable constraints."""
        if self._empty:
            return self
        cc = cond if isinstance(cond, CompiledCondition) else compile_condition(cond, self.scope)
        lo = np.maximum(self.lo, cc.lo)
        hi = np.minimum(self.hi, cc.hi)
        if np.any(lo > hi):
            return Box.empty(self.scope)
        for coefs, ub in cc.general:
            mins = np.minimum(coefs * lo, coefs * hi)
            total = float(np.sum(mins))
            if total > ub:
                return Box.empty(self.scope)
            for d in np.nonzero(coefs)[0]:
                rest = total - mins[d]
                limit = (ub - rest) / coefs[d]
                if coefs[d] > 0:
                    hi[d] = min(hi[d], limit)
                else:
                    lo[d] = max(lo[d], limit)
            if np.any(lo > hi):
                return Box.empty(self.scope)
        return Box(self.scope, lo, hi)

    def transform(self, r: AffineReset) -> "Box":
        """Exact image under the per-dimension affine map."""
        if self._empty:
            return self
        lo = self.lo.copy()
        hi = self.hi.copy()
        for name, a, b in r.entries:
            if name not in self.scope:
                raise ScopeError(f"reset variable {name!r} not in scope")
            d = self.scope.index(name)
            v1, v2 = a * lo[d] + b, a * hi[d] + b
            lo[d], hi[d] = min(v1, v2), max(v1, v2)
        return Box(self.scope, lo, hi)

    def hull(self, other: "Box") -> "Box":
        """Smallest box containing the union."""
        if other._empty:
            return self
        if self._empty:
            return other
        self._check_scope(other)
        return Box(self.scope, np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def widen(self, slack: float) -> "Box":
        if self._empty or slack == 0.0:
            return self
        return Box(self.scope, self.lo - slack, self.hi + slack)


class Octagon2D:
    """Octagonal template polyhedron over a (clock, time) pair of variables.

    Offsets are stored in the direction order of ``OCT_DIRS``; ``normalize``
    tightens them (or detects emptiness) and is idempotent by construction.
    """

    __slots__ = ("scope", "off", "_empty", "_tight")

    def __init__(self, scope: Tuple[str, str], off, empty: bool = False, _tight: bool = False):
        if len(scope) != 2:
            raise ScopeError("Octagon2D scope must be exactly two variables")
        self.scope = tuple(scope)
        self.off = np.asarray(off, dtype=np.float64).copy()
        self._empty = bool(empty)
        self._tight = bool(_tight)

    # -- constructors
    @classmethod
    def from_point(cls, scope, x: float, t: float) -> "Octagon2D":
        return cls.from_points(scope, [(x, t)])

    @classmethod
    def from_points(cls, scope, points) -> "Octagon2D":
        pts = np.asarray(points, dtype=np.float64)
        off = np.max(OCT_DIRS @ pts.T, axis=1)
        return cls(scope, off, _tight=True)

    @classmethod
    def from_box(cls, scope, x_iv: Tuple[float, float], t_iv: Tuple[float, float]) -> "Octagon2D":
        (xl, xh), (tl, th) = x_iv, t_iv
        if xl > xh or tl > th:
            return cls.empty(scope)
        off = np.array([xh, -xl, th, -tl, xh + th, xh - tl, th - xl, -xl - tl])
        return cls(scope, off, _tight=True)

    @classmethod
    def empty(cls, scope) -> "Octagon2D":
        return cls(scope, np.full(8, -1.0), empty=True, _tight=True)

    # -- normalization
    def normalize(self) -> "Octagon2D":
        """Tighten offsets to their supports; detects emptiness."""
        if self._tight or self._empty:
            return self
        out, empty = _kernels.oct_close_many(self.off[None, :].copy())
        if empty[0]:
            return Octagon2D.empty(self.scope)
        return Octagon2D(self.scope, out[0], _tight=True)

    # -- queries
    def is_empty(self) -> bool:
        if self._empty:
            return True
        if not self._tight:
            return self.normalize().is_empty()
        return False

    def x_bounds(self) -> Tuple[float, float]:
        s = self.normalize()
        lo, hi = -float(s.off[1]), float(s.off[0])
        # closure noise can invert degenerate bounds by a few ulps; round outward
        return (lo, hi) if lo <= hi else (hi, lo)

    def project_time(self) -> Optional[TimeInterval]:
        """Exact projection onto the time dimension; None when empty."""
        s = self.normalize()
        if s._empty:
            return None
        lo, hi = -float(s.off[3]), float(s.off[2])
        if lo > hi:
            lo, hi = hi, lo
        return TimeInterval(lo, hi)

    def vertices(self, tol: float = 1e-9) -> np.ndarray:
        """Vertices of the polygon (dedup within tol); empty array if empty."""
        s = self.normalize()
        if s._empty:
            return np.empty((0, 2))
        pts = []
        for i in range(8):
            for j in range(i + 1, 8):
                a = np.array([OCT_DIRS[i], OCT_DIRS[j]])
                det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
                if abs(det) < 1e-12:
                    continue
                b = np.array([s.off[i], s.off[j]])
                p = np.linalg.solve(a, b)
                slackv = OCT_DIRS @ p - s.off
                if np.all(slackv <= tol * np.maximum(1.0, np.abs(s.off))):
                    pts.append(p)
        if not pts:
            return np.empty((0, 2))
        arr = np.asarray(pts)
        uniq = []
        for p in arr:
            if not any(abs(p[0] - q[0]) <= 1e-12 and abs(p[1] - q[1]) <= 1e-12 for q in uniq):
                uniq.append(p)
        return np.asarray(uniq)

    def contains_point(self, x: float, t: float, tol: float = 0.0) -> bool:
        if self.is_empty():
            return False
        return bool(np.all(OCT_DIRS @ np.array([x, t]) <= self.off + tol))

    def contains(self, other: "Octagon2D", tol: float = 0.0) -> bool:
        a = self.normalize()
        b = other.normalize()
        if b._empty:
            return True
        if a._empty:
            return False
        return bool(np.all(b.off <= a.off + tol))

    def __eq__(self, other):
        if not isinstance(other, Octagon2D) or self.scope != other.scope:
            return False
        a, b = self.normalize(), other.normalize()
        if a._empty or b._empty:
            return a._empty and b._empty
        return bool(np.array_equal(a.off, b.off))

    def __repr__(self):
        if self.is_empty():
            return f"Octagon2D(empty over {self.scope})"
        s = self.normalize()
        return f"Octagon2D({self.scope}, off={np.array2string(s.off, precision=6)})"

    # -- operations
    def elapse(self, rates, dt: TimeInterval) -> "Octagon2D":
        """Minkowski sum with the segment {c*tau | tau in dt}; exact and tight."""
        if self._empty:
            return self
        c = np.asarray(rates, dtype=np.float64)
        if c.shape != (2,):
            raise ScopeError("octagon rates must be a pair (clock rate, time rate)")
        d = OCT_DIRS @ c
        bump = np.maximum(d * dt.lo, d * dt.hi)
        return Octagon2D(self.scope, self.off + bump, _tight=self._tight)

    def intersect(self, cond) -> "Octagon2D":
        """Intersection; exact when constraint normals lie in the template."""
        if self._empty:
            return self
        if isinstance(cond, Condition):
            constraints = cond.constraints
        else:
            constraints = cond
        off = self.off.copy()
        leftovers = []
        for c in constraints:
            coefs = np.zeros(2)
            for name, coef in c.terms:
                if name not in self.scope:
                    raise ScopeError(f"constraint variable {name!r} not in octagon scope")
                coefs[self.scope.index(name)] = coef
            rows = []
            if c.rel in (LE, LT):
                rows.append((coefs, c.bound))
            elif c.rel in (GE, GT):
                rows.append((-coefs, -c.bound))
            else:
                rows.append((coefs, c.bound))
                rows.append((-coefs, -c.bound))
            for vec, ub in rows:
                if not np.any(vec):
                    if 0.0 > ub:
                        return Octagon2D.empty(self.scope)
                    continue
                matched = False
                for d in range(8):
                    dirv = OCT_DIRS[d]
                    # vec == s * dirv for some s > 0?
                    nz = np.nonzero(dirv)[0]
                    s = vec[nz[0]] / dirv[nz[0]]
                    if s > 0 and np.all(vec == s * dirv):
                        off[d] = min(off[d], ub / s)
                        matched = True
                        break
                if not matched:
                    leftovers.append((vec, ub))
        result = Octagon2D(self.scope, off).normalize()
        if leftovers and not result._empty:
            # sound fallback: tighten the bounding box through the half-space
            xl, xh = result.x_bounds()
            ti = result.project_time()
            box = Box(result.scope, [xl, ti.lo], [xh, ti.hi])
            for vec, ub in leftovers:
                box = box.intersect(CompiledCondition(result.scope, np.full(2, -np.inf), np.full(2, np.inf), [(vec, ub)]))
            if box.is_empty():
                return Octagon2D.empty(self.scope)
            result = result.intersect_box((box.lo[0], box.hi[0]), (box.lo[1], box.hi[1]))
        return result

    def intersect_box(self, x_iv: Tuple[float, float], t_iv: Tuple[float, float]) -> "Octagon2D":
        off = self.off.copy()
        off[0] = min(off[0], x_iv[1])
        off[1] = min(off[1], -x_iv[0])
        off[2] = min(off[2], t_iv[1])
        off[3] = min(off[3], -t_iv[0])
        return Octagon2D(self.scope, off).normalize()

    def intersect_time(self, ti: TimeInterval) -> "Octagon2D":
        if self._empty:
            return self
        off = self.off.copy()
        off[2] = min(off[2], ti.hi)
        off[3] = min(off[3], -ti.lo)
        return Octagon2D(self.scope, off).normalize()

    def transform(self, r: AffineReset) -> "Octagon2D":
        """Tightest octagonal over-approximation of the affine image."""
        if self.is_empty():
            return self
        ax, bx = r.get(self.scope[0])
        at, bt = r.get(self.scope[1])
        verts = self.vertices()
        mapped = np.column_stack([ax * verts[:, 0] + bx, at * verts[:, 1] + bt])
        return Octagon2D.from_points(self.scope, mapped)

    def hull(self, other: "Octagon2D") -> "Octagon2D":
        """Smallest octagon containing the union (per-direction max)."""
        a = self.normalize()
        b = other.normalize()
        if a._empty:
            return b
        if b._empty:
            return a
        if a.scope != b.scope:
            raise ScopeError(f"scope mismatch: {a.scope} vs {b.scope}")
        return Octagon2D(a.scope, np.maximum(a.off, b.off), _tight=True)

    def widen(self, slack: float) -> "Octagon2D":
        if self._empty or slack == 0.0:
            return self
        return Octagon2D(self.scope, self.off + slack)


# ---------------------------------------------------------------------------
# spec-style free functions over either representation

def elapse(s, rates, dt: TimeInterval):
    return s.elapse(rates, dt)


def intersect(s, cond):
    return s.intersect(cond)


def transform(s, r: AffineReset):
    return s.transform(r)


def hull(a, b):
    return a.hull(b)


def project_time(s: Octagon2D) -> Optional[TimeInterval]:
    return s.project_time()


def is_empty(s) -> bool:
    return s.is_empty()


def contains(a, b) -> bool:
    return a.contains(b)
