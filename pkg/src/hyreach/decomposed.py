"""Decomposed on-the-fly reachability: per-component subspace flowpipes.

Instead of composing the network eagerly, each component's flowpipe is
computed in its own subspace (an interval per clock, or an octagon over
(clock, time) when the explicit time dimension is enabled).  Composed jumps
are discovered lazily; with optimized enumeration, jump combinations are
built component by component and pruned as soon as the joint enabling
segment range becomes empty, which avoids the exponential sweep over all
combinations.

With octagons the enabling sets of all synchronizing components are projected
onto their time dimension; the intersection of these intervals is the joint
enabling window, and intersecting each component's enabling set with it
recovers cross-component correlations that the Cartesian decomposition loses.

Successor deduplication merges jump combinations that differ only in which of
several simultaneously-flashing components plays the trigger role: their
per-component (jump shape, enabling set) multisets coincide and their windows
overlap, so a single representative successor is kept.

Shared-variable models are rejected; box-mode flowpipes are closed-form (no
segment materialization), which is what makes hundreds of components and
very small time steps tractable.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .compose import ComposedJump, initial_tuples, lazy_outgoing
from .engine import (AnalysisConfig, VERDICT_DEPTH_BOUND, VERDICT_SAFE,
                     VERDICT_SYNCHRONIZED)
from .geometry import Box, Octagon2D, TimeInterval, compile_condition
from .model import (HybridAutomaton, Jump, ModelError, Network,
                    UnsupportedFeatureError)

BOX, OCTAGON = "box", "octagon"
TIME_VAR = "t"

# Outward rounding applied to per-component time projections before they are
# intersected.  Different components compute the same instant through
# different arithmetic paths, so point windows land a few ulps apart; widening
# them is sound (it only grows the over-approximation) and keeps the joint
# window of genuinely simultaneous events nonempty.
TIME_EPS = 1e-10


def _widen_time(ti: TimeInterval) -> TimeInterval:
    eps = TIME_EPS * (1.0 + abs(ti.lo) + abs(ti.hi))
    return TimeInterval(ti.lo - eps, ti.hi + eps)


# ---------------------------------------------------------------------------
# per-component closed-form box flowpipe

class BoxPipe:
    """Closed-form flowpipe of one component: entry box, constant rates,
    box invariant, delta grid.  Segment k covers local time [k*d, (k+1)*d]."""

    def __init__(self, entry: Box, rates: np.ndarray, inv_lo, inv_hi,
                 delta: float, max_k: int, zero_dwell: bool):
        self.scope = entry.scope
        self.lo = np.maximum(entry.lo, inv_lo)
        self.hi = np.minimum(entry.hi, inv_hi)
        self.rates = rates
        self.inv_lo = inv_lo
        self.inv_hi = inv_hi
        self.delta = delta
        self.zero_dwell = zero_dwell
        self.dead = bool(np.any(self.lo > self.hi))
        if self.dead:
            self.K = 0
        elif zero_dwell:
            self.K = 1
        else:
            self.K = self._first_empty(max_k)

    def _raw(self, k: int):
        d = self.delta
        t0, t1 = k * d, (k + 1) * d
        lo = self.lo + np.where(self.rates >= 0, self.rates * t0, self.rates * t1)
        hi = self.hi + np.where(self.rates >= 0, self.rates * t1, self.rates * t0)
        return lo, hi

    def seg(self, k: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Clipped bounds of segment k, or None when empty."""
        if self.dead or k >= self.K:
            return None
        if self.zero_dwell:
            return self.lo.copy(), self.hi.copy()
        lo, hi = self._raw(k)
        lo = np.maximum(lo, self.inv_lo)
        hi = np.minimum(hi, self.inv_hi)
        if np.any(lo > hi):
            return None
        return lo, hi

    def _nonempty(self, k: int) -> bool:
        lo, hi = self._raw(k)
        return bool(np.all(np.maximum(lo, self.inv_lo) <= np.minimum(hi, self.inv_hi)))

    def _first_empty(self, max_k: int) -> int:
        # segments empty monotonically under constant rates and a box invariant
        if not self._nonempty(0):
            return 0
        step = 1
        k = 0
        while k + step < max_k and self._nonempty(k + step):
            k += step
            step *= 2
        lo, hi = k, min(k + step, max_k)
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self._nonempty(mid):
                lo = mid
            else:
                hi = mid
        return lo + 1

    def enabled_range(self, g_lo, g_hi) -> Optional[Tuple[int, int]]:
        """Inclusive segment range where the guard box intersects the pipe."""
        if self.dead or self.K == 0:
            return None

        def enabled(k: int) -> bool:
            s = self.seg(k)
            if s is None:
                return False
            lo, hi = s
            return bool(np.all(np.maximum(lo, g_lo) <= np.minimum(hi, g_hi)))

        if self.zero_dwell:
            return (0, 0) if enabled(0) else None

        # analytic candidate bounds from the linear per-dimension motion,
        # then exact adjustment by +-1 against the predicate
        ka, kb = 0, self.K - 1
        d = self.delta
        for dim in range(len(self.scope)):
            r = self.rates[dim]
            alo = self.lo[dim] + (0.0 if r >= 0 else r * d)
            ahi = self.hi[dim] + (r * d if r >= 0 else 0.0)
            beta = r * d
            # constants: invariant vs guard must be compatible at all
            if self.inv_lo[dim] > g_hi[dim] or self.inv_hi[dim] < g_lo[dim]:
                return None
            for alpha, sense_hi, bound in ((alo, True, g_hi[dim]), (ahi, False, g_lo[dim])):
                # sense_hi: raw_lo <= g_hi  (upper bound on k when beta > 0);
                # else raw_hi >= g_lo (lower bound on k when beta > 0)
                if math.isinf(bound):
                    if (sense_hi and bound > 0) or (not sense_hi and bound < 0):
                        continue  # vacuous constraint
                    return None
                if beta == 0.0:
                    if sense_hi and alpha > bound:
                        return None
                    if not sense_hi and alpha < bound:
                        return None
                    continue
                crossing = (bound - alpha) / beta
                if sense_hi:
                    if beta > 0:
                        kb = min(kb, int(math.floor(crossing + 1e-9)))
                    else:
                        ka = max(ka, int(math.ceil(crossing - 1e-9)))
                else:
                    if beta > 0:
                        ka = max(ka, int(math.ceil(crossing - 1e-9)))
                    else:
                        kb = min(kb, int(math.floor(crossing + 1e-9)))
        ka = max(ka, 0)
        kb = min(kb, self.K - 1)
        # fix up floating-point fencepost errors
        for _ in range(3):
            if ka > kb:
                return None
            if enabled(ka):
                break
            ka += 1
        else:
            if not enabled(ka):
                return None
        while ka - 1 >= 0 and enabled(ka - 1):
            ka -= 1
        for _ in range(3):
            if enabled(kb):
                break
            kb -= 1
        while kb + 1 <= self.K - 1 and enabled(kb + 1):
            kb += 1
        if ka > kb:
            return None
        return ka, kb

    def hull(self, k0: int, k1: int, g_lo=None, g_hi=None) -> Box:
        """Hull over segments k0..k1, optionally clipped by a guard box.

        Exact under constant rates: per-dimension bounds are monotone in k,
        so the hull is attained at the range endpoints.
        """
        acc = None
        for k in (k0, k1) if k1 != k0 else (k0,):
            s = self.seg(k)
            if s is None:
                continue
            lo, hi = s
            if g_lo is not None:
                lo = np.maximum(lo, g_lo)
                hi = np.minimum(hi, g_hi)
                if np.any(lo > hi):
                    continue
            b = Box(self.scope, lo, hi)
            acc = b if acc is None else acc.hull(b)
        return acc if acc is not None else Box.empty(self.scope)


# ---------------------------------------------------------------------------
# per-component octagon flowpipe (materialized rows, vectorized closure)

class OctPipe:
    """Materialized octagon flowpipe over (clock, time) for one component."""

    CHUNK = 8192

    def __init__(self, entry: Octagon2D, rate: float, inv_x: Tuple[float, float],
                 delta: float, max_k: int, zero_dwell: bool):
        self.scope = entry.scope
        self.delta = delta
        self.zero_dwell = zero_dwell
        base = entry.normalize()
        if base.is_empty():
            self.rows = np.empty((0, 8))
            self.K = 0
            return
        cap_hi, cap_lo = inv_x[1], inv_x[0]
        if zero_dwell:
            clipped = base.intersect_box(inv_x, (-np.inf, np.inf)) if np.isfinite(cap_hi) or np.isfinite(cap_lo) else base
            clipped = clipped.normalize()
            if clipped.is_empty():
                self.rows = np.empty((0, 8))
                self.K = 0
            else:
                self.rows = clipped.off[None, :].copy()
                self.K = 1
            return
        dirs = _kernels.OCT_DIRS @ np.array([rate, 1.0])
        slope = dirs * delta
        const = base.off + np.maximum(dirs, 0.0) * delta
        chunks = []
        K = 0
        k0 = 0
        while k0 < max_k:
            kc = min(self.CHUNK, max_k - k0)
            ks = np.arange(k0, k0 + kc, dtype=np.float64)
            rows = const[None, :] + slope[None, :] * ks[:, None]
            if np.isfinite(cap_hi):
                rows[:, 0] = np.minimum(rows[:, 0], cap_hi)
            if np.isfinite(cap_lo):
                rows[:, 1] = np.minimum(rows[:, 1], -cap_lo)
            rows, empty = _kernels.oct_close_many(rows)
            if np.any(empty):
                last = int(np.argmax(empty))
                chunks.append(rows[:last])
                K += last
                break
            chunks.append(rows)
            K += kc
            k0 += kc
        self.rows = np.concatenate(chunks, axis=0) if chunks else np.empty((0, 8))
        self.K = K

    def enabled_range(self, g_lo: float, g_hi: float) -> Optional[Tuple[int, int]]:
        """Segments whose x-range meets [g_lo, g_hi] (exact: x-range is an interval)."""
        if self.K == 0:
            return None
        xmax = self.rows[:, 0]
        xmin = -self.rows[:, 1]
        mask = (xmax >= g_lo) & (xmin <= g_hi)
        idx = np.nonzero(mask)[0]
        if len(idx) == 0:
            return None
        return int(idx[0]), int(idx[-1])

    def hull(self, k0: int, k1: int, g_lo: float = -np.inf, g_hi: float = np.inf) -> Octagon2D:
        rows = self.rows[k0:k1 + 1].copy()
        if np.isfinite(g_hi):
            rows[:, 0] = np.minimum(rows[:, 0], g_hi)
        if np.isfinite(g_lo):
            rows[:, 1] = np.minimum(rows[:, 1], -g_lo)
        if np.isfinite(g_hi) or np.isfinite(g_lo):
            rows, empty = _kernels.oct_close_many(rows)
            rows = rows[~empty]
        if rows.shape[0] == 0:
            return Octagon2D.empty(self.scope)
        return Octagon2D(self.scope, np.max(rows, axis=0), _tight=True)


# ---------------------------------------------------------------------------
# compiled per-component tables

class CompiledComponent:
    def __init__(self, automaton: HybridAutomaton, mode: str):
        self.automaton = automaton
        self.name = automaton.name
        self.vars = automaton.variable_names
        self.mode = mode
        if mode == OCTAGON and len(self.vars) != 1:
            raise UnsupportedFeatureError(
                f"octagon subspaces need single-variable components, {self.name!r} has {len(self.vars)}"
            )
        self.rates: Dict[str, np.ndarray] = {}
        self.inv: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
        self.zero_dwell: Dict[str, bool] = {}
        for loc in automaton.locations:
            cc = compile_condition(loc.invariant, self.vars)
            if cc.general:
                raise UnsupportedFeatureError(
                    f"decomposed analysis needs interval invariants; {self.name}.{loc.name} is not"
                )
            self.inv[loc.name] = (cc.lo, cc.hi)
            self.rates[loc.name] = np.asarray([loc.flow.rate(v) for v in self.vars])
            self.zero_dwell[loc.name] = automaton.is_zero_dwell(loc.name)
        self.guards: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        for j in automaton.jumps:
            cc = compile_condition(j.guard, self.vars)
            if cc.general:
                raise UnsupportedFeatureError(
                    f"decomposed analysis needs interval guards; a jump of {self.name} is not"
                )
            self.guards[id(j)] = (cc.lo, cc.hi)

    def guard_bounds(self, j: Jump):
        return self.guards[id(j)]


# ---------------------------------------------------------------------------
# subspace state of one tree node

@dataclass
class Subspace:
    """Flowpipes of all components of one node, synchronized by segment index."""

    network: Network
    locs: Tuple[str, ...]
    pipes: List[object]           # BoxPipe | OctPipe per component
    mode: str
    zero_dwell: bool
    K: int                        # common number of live segments
    range_cache: Optional[dict] = None


@dataclass
class EnablingWindow:
    """One candidate composed jump with its enabling information."""

    composed: ComposedJump
    k_range: Tuple[int, int]
    time: TimeInterval                    # joint window (global with octagons)
    enabling: List[object]                # per-component enabling set (pre-reset)

    @property
    def label(self):
        return self.composed.label


@dataclass
class DNode:
    locs: Tuple[str, ...]
    states: List[object]          # Box | Octagon2D per component
    depth: int
    parent: int
    label: Optional[str]
    jump_resets: Optional[Tuple] = None   # per-component reset signature of the window
    time: Optional[TimeInterval] = None


class DecomposedResult:
    """Reachability tree of the decomposed engine."""

    def __init__(self, network: Network, cfg: AnalysisConfig, mode: str):
        self.network = network
        self.cfg = cfg
        self.mode = mode
        self.nodes: List[DNode] = []
        self.verdict = VERDICT_SAFE
        self.depth_hit = False
        self.sync_node: Optional[int] = None
        self.stats: Dict[str, float] = {}

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def max_depth(self) -> int:
        return max((n.depth for n in self.nodes), default=0)

    def children_map(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for i, n in enumerate(self.nodes):
            if n.parent >= 0:
                out.setdefault(n.parent, []).append(i)
        return out

    def location_label(self, i: int) -> str:
        return "|".join(self.nodes[i].locs)

    def x_bounds(self, i: int) -> List[Tuple[float, float]]:
        out = []
        for s in self.nodes[i].states:
            if isinstance(s, Octagon2D):
                out.append(s.x_bounds())
            else:
                for d in range(len(s.scope)):
                    out.append((float(s.lo[d]), float(s.hi[d])))
        return out


# ---------------------------------------------------------------------------
# engine

class DecomposedEngine:
    def __init__(self, network: Network, cfg: AnalysisConfig):
        if len(network.shared_variables) > 0:
            raise UnsupportedFeatureError(
                "decomposed analysis does not support shared variables; "
                "compose the network eagerly and use the monolithic engine"
            )
        self.network = network
        self.cfg = cfg
        self.mode = OCTAGON if cfg.representation == OCTAGON else BOX
        self.comps = [CompiledComponent(c, self.mode) for c in network.components]
        self.n = len(self.comps)

    # -- flowpipes
    def open_node(self, locs: Tuple[str, ...], states: List[object]) -> Subspace:
        zero = any(self.comps[i].zero_dwell[locs[i]] for i in range(self.n))
        pipes: List[object] = []
        for i, comp in enumerate(self.comps):
            inv_lo, inv_hi = comp.inv[locs[i]]
            if self.mode == BOX:
                pipe = BoxPipe(states[i], comp.rates[locs[i]], inv_lo, inv_hi,
                               self.cfg.delta, self.cfg.max_segments, zero)
            else:
                pipe = OctPipe(states[i], float(comp.rates[locs[i]][0]),
                               (float(inv_lo[0]), float(inv_hi[0])),
                               self.cfg.delta, self.cfg.max_segments, zero)
            pipes.append(pipe)
        K = min(p.K for p in pipes) if pipes else 0
        return Subspace(self.network, locs, pipes, self.mode, zero, K, {})

    # -- window enumeration
    def _jump_range(self, sub: Subspace, ci: int, j: Jump) -> Optional[Tuple[int, int]]:
        comp = self.comps[ci]
        g_lo, g_hi = comp.guard_bounds(j)
        key = (ci, g_lo.tobytes(), g_hi.tobytes())
        cache = sub.range_cache
        if cache is not None and key in cache:
            return cache[key]
        pipe = sub.pipes[ci]
        if self.mode == BOX:
            rng = pipe.enabled_range(g_lo, g_hi)
        else:
            rng = pipe.enabled_range(float(g_lo[0]), float(g_hi[0]))
        if rng is not None:
            rng = (min(rng[0], sub.K - 1), min(rng[1], sub.K - 1))
            if rng[0] > rng[1]:
                rng = None
        if cache is not None:
            cache[key] = rng
        return rng

    def _window_from_combo(self, sub: Subspace, combo, label,
                           k_range: Tuple[int, int]) -> Optional[EnablingWindow]:
        composed = self._merge_combo(sub, combo, label)
        if composed is None:
            return None
        k0, k1 = k_range
        part = {i: j for i, j in combo}
        enabling: List[object] = []
        times: List[TimeInterval] = []
        for ci in range(self.n):
            pipe = sub.pipes[ci]
            if ci in part:
                g_lo, g_hi = self.comps[ci].guard_bounds(part[ci])
                if self.mode == BOX:
                    e = pipe.hull(k0, k1, g_lo, g_hi)
                else:
                    e = pipe.hull(k0, k1, float(g_lo[0]), float(g_hi[0]))
            else:
                e = pipe.hull(k0, k1)
            if e.is_empty():
                return None
            enabling.append(e)
            if self.mode == OCTAGON and ci in part:
                times.append(_widen_time(e.project_time()))
        if self.mode == OCTAGON:
            joint = times[0]
            for t in times[1:]:
                joint = joint.intersect(t)
                if joint is None:
                    return None
        else:
            d = self.cfg.delta
            joint = TimeInterval(k0 * d, (k1 + 1) * d)
        return EnablingWindow(composed, (k0, k1), joint, enabling)

    def _merge_combo(self, sub: Subspace, combo, label) -> Optional[ComposedJump]:
        # reuse the composer's merge semantics (R2 pruning, urgency disjunction)
        from .compose import _merge
        if self.n == 1:
            i, j = combo[0]
            return ComposedJump((j.source,), (j.target,), tuple(combo), j.label,
                                j.guard, j.reset, j.urgent)
        return _merge(self.network.components, sub.locs, tuple(combo), label)

    def windows(self, sub: Subspace) -> List[EnablingWindow]:
        if sub.K == 0:
            return []
        if self.cfg.opt_enum:
            return self._windows_opt(sub)
        return self._windows_bruteforce(sub)

    def _windows_bruteforce(self, sub: Subspace) -> List[EnablingWindow]:
        out = []
        for cj in lazy_outgoing(self.network, sub.locs):
            rng = (0, sub.K - 1)
            dead = False
            for ci, j in cj.participants:
                r = self._jump_range(sub, ci, j)
                if r is None:
                    dead = True
                    break
                rng = (max(rng[0], r[0]), min(rng[1], r[1]))
                if rng[0] > rng[1]:
                    dead = True
                    break
            if dead:
                continue
            w = self._window_from_combo(sub, cj.participants, cj.label, rng)
            if w is not None:
                out.append(w)
        return out

    def _windows_opt(self, sub: Subspace) -> List[EnablingWindow]:
        """Iterative combination building with joint-range pruning."""
        out: List[EnablingWindow] = []
        single = self.n == 1

        for label in self.network.labels:
            members = [i for i, c in enumerate(self.network.components) if label in c.labels]
            if not members:
                continue
            partial: List[Tuple[list, Tuple[int, int]]] = [([], (0, sub.K - 1))]
            blocked = False
            for ci in members:
                local = [j for j in self.network.components[ci].jumps_from(sub.locs[ci])
                         if j.label == label]
                if not local:
                    blocked = True
                    break
                ranged = []
                for j in local:
                    r = self._jump_range(sub, ci, j)
                    if r is not None:
                        ranged.append((j, r))
                if not ranged:
                    blocked = True
                    break
                nxt = []
                for combo, rng in partial:
                    for j, r in ranged:
                        joint = (max(rng[0], r[0]), min(rng[1], r[1]))
                        if joint[0] <= joint[1]:
                            nxt.append((combo + [(ci, j)], joint))
                partial = nxt
                if not partial:
                    blocked = True
                    break
            if blocked:
                continue
            for combo, rng in partial:
                w = self._window_from_combo(sub, combo, label, rng)
                if w is not None:
                    out.append(w)

        # unlabeled subsets, pruned to components with an enabled unlabeled jump
        options: List[List] = []
        for ci in range(self.n):
            opts = [None]
            for j in self.network.components[ci].jumps_from(sub.locs[ci]):
                if j.label is None:
                    r = self._jump_range(sub, ci, j)
                    if r is not None:
                        opts.append((ci, j, r))
            options.append(opts)
        if any(len(o) > 1 for o in options):
            for picks in itertools.product(*options):
                chosen = [p for p in picks if p is not None]
                if not chosen:
                    continue
                rng = (0, sub.K - 1)
                for _, _, r in chosen:
                    rng = (max(rng[0], r[0]), min(rng[1], r[1]))
                if rng[0] > rng[1]:
                    continue
                combo = [(ci, j) for ci, j, _ in chosen]
                w = self._window_from_combo(sub, combo, None, rng)
                if w is not None:
                    out.append(w)
        return out

    # -- tightening, dedup, successors
    def tighten_by_time(self, window: EnablingWindow) -> List[object]:
        """Intersect every component's enabling set with the joint time window."""
        if self.mode != OCTAGON:
            return list(window.enabling)
        return [e.intersect_time(window.time) for e in window.enabling]

    def _window_signature(self, window: EnablingWindow):
        # variable names are erased (replaced by their index in the component
        # scope) so that structurally identical components compare equal, and
        # set bounds are quantized: members of a synchronized group accumulate
        # widening/closure noise (well below the genuine clock separations of
        # the benchmark family), which must not break the symmetric-flasher
        # merge
        part = {i: j for i, j in window.composed.participants}
        quant = self.cfg.dedup_tol
        entries = []
        for ci in range(self.n):
            scope = self.comps[ci].vars
            j = part.get(ci)
            if j is None:
                jsig = None
            else:
                jsig = (j.source, j.target,
                        tuple(tuple((scope.index(n), c) for n, c in lc.terms) + (lc.rel, lc.bound)
                              for lc in j.guard.constraints),
                        tuple((scope.index(n), a, b) for n, a, b in j.reset.entries),
                        j.urgent)
            e = window.enabling[ci]
            if isinstance(e, Octagon2D):
                raw = e.normalize().off.tolist()
            else:
                raw = e.lo.tolist() + e.hi.tolist()
            bounds = tuple(round(v * 1e9) for v in raw)
            entries.append((jsig, bounds, window.composed.source[ci]))
        return tuple(sorted(entries, key=repr))

    def dedup_successors(self, windows: List[EnablingWindow]) -> List[EnablingWindow]:
        """Merge/unify windows per the two deduplication rules.

        Rule 1: identical per-component resets, identical target tuple,
        overlapping joint windows: hull the enabling sets into one window.
        Rule 2: windows identical up to a permutation of components with
        equal jump shape and equal enabling sets (simultaneous flashers):
        keep the first representative.
        """
        merged: List[EnablingWindow] = []
        for w in windows:
            hit = None
            for i, m in enumerate(merged):
                if (w.composed.target == m.composed.target
                        and w.composed.reset == m.composed.reset
                        and _resets_per_component(w) == _resets_per_component(m)
                        and w.time.overlaps(m.time)):
                    hit = i
                    break
            if hit is None:
                merged.append(w)
            else:
                m = merged[hit]
                enabling = [a.hull(b) for a, b in zip(m.enabling, w.enabling)]
                merged[hit] = EnablingWindow(m.composed,
                                             (min(m.k_range[0], w.k_range[0]),
                                              max(m.k_range[1], w.k_range[1])),
                                             m.time.hull(w.time), enabling)
        out: List[EnablingWindow] = []
        seen_sigs: List[Tuple] = []
        for w in merged:
            sig = self._window_signature(w)
            dup = False
            for s, t in seen_sigs:
                if s == sig and w.time.overlaps(t):
                    dup = True
                    break
            if not dup:
                seen_sigs.append((sig, w.time))
                out.append(w)
        return out

    def successor(self, sub: Subspace, window: EnablingWindow) -> Optional[Tuple[Tuple[str, ...], List[object]]]:
        tightened = self.tighten_by_time(window)
        part = {i: j for i, j in window.composed.participants}
        states: List[object] = []
        target = window.composed.target
        for ci in range(self.n):
            s = tightened[ci]
            j = part.get(ci)
            if j is not None:
                s = s.transform(j.reset)
            inv_lo, inv_hi = self.comps[ci].inv[target[ci]]
            if self.mode == BOX:
                s = Box(s.scope, np.maximum(s.lo, inv_lo), np.minimum(s.hi, inv_hi))
            else:
                s = s.intersect_box((float(inv_lo[0]), float(inv_hi[0])), (-np.inf, np.inf))
            if s.is_empty():
                return None
            states.append(s)
        return target, states


def _resets_per_component(w: EnablingWindow) -> Tuple:
    return tuple(sorted((ci, j.reset.entries) for ci, j in w.composed.participants))


def detect_synchronization(states: Sequence[object]) -> bool:
    """True iff every component's clock set is exactly the point zero."""
    for s in states:
        if isinstance(s, Octagon2D):
            lo, hi = s.x_bounds()
            if lo != 0.0 or hi != 0.0:
                return False
        else:
            if s.is_empty() or np.any(s.lo != 0.0) or np.any(s.hi != 0.0):
                return False
    return True


def initial_states(network: Network, mode: str) -> Tuple[Tuple[str, ...], List[object]]:
    roots = initial_tuples(network)
    if len(roots) != 1:
        raise UnsupportedFeatureError("decomposed analysis expects one initial location per component")
    locs = roots[0]
    states: List[object] = []
    for i, comp in enumerate(network.components):
        cond = comp.init_condition(locs[i])
        scope = comp.variable_names
        cc = compile_condition(cond, scope)
        if np.any(~np.isfinite(cc.lo)) or np.any(~np.isfinite(cc.hi)) or cc.general:
            raise ModelError(f"init condition of {comp.name!r} must be a bounded box")
        if mode == OCTAGON:
            states.append(Octagon2D.from_box((scope[0], TIME_VAR),
                                             (float(cc.lo[0]), float(cc.hi[0])), (0.0, 0.0)))
        else:
            states.append(Box(scope, cc.lo, cc.hi))
    return locs, states


def analyze_decomposed(network: Network, init, cfg: AnalysisConfig) -> DecomposedResult:
    """Lazily-composed reachability with per-component state sets.

    ``init`` overrides the per-component initial sets (mapping component name
    to Box); None uses the declared init conditions.  See ``AnalysisConfig``
    for the optimization switches (octagon representation with explicit time,
    optimized transition enumeration, successor deduplication, termination on
    detected synchronization).
    """
    eng = DecomposedEngine(network, cfg)
    res = DecomposedResult(network, cfg, eng.mode)
    locs, states = initial_states(network, eng.mode)
    if init is not None:
        for i, comp in enumerate(network.components):
            if comp.name in init:
                b = init[comp.name]
                if eng.mode == OCTAGON:
                    states[i] = Octagon2D.from_box((comp.variable_names[0], TIME_VAR),
                                                   b.interval(comp.variable_names[0]), (0.0, 0.0))
                else:
                    states[i] = b
    res.nodes.append(DNode(locs, states, 0, -1, None,
                           time=TimeInterval(0.0, 0.0)))

    queue = deque([0])
    pop = queue.popleft if cfg.order == "bfs" else queue.pop
    stop = False
    windows_total = 0
    while queue and not stop:
        i = pop()
        node = res.nodes[i]
        sub = eng.open_node(node.locs, node.states)
        wins = eng.windows(sub)
        if cfg.dedup:
            wins = eng.dedup_successors(wins)
        windows_total += len(wins)
        if not wins:
            continue
        if cfg.depth is not None and node.depth >= cfg.depth:
            res.depth_hit = True
            continue
        created = []
        for w in wins:
            succ = eng.successor(sub, w)
            if succ is None:
                continue
            target, st = succ
            if eng.mode == OCTAGON:
                tiv = w.time
            else:
                tiv = TimeInterval(node.time.lo + (w.k_range[0] * cfg.delta if not sub.zero_dwell else 0.0),
                                   node.time.hi + ((w.k_range[1] + 1) * cfg.delta if not sub.zero_dwell else 0.0))
            if cfg.terminate_on_sync and detect_synchronization(st):
                res.verdict = VERDICT_SYNCHRONIZED
                if not sub.zero_dwell:
                    res.nodes.append(DNode(target, st, node.depth + 1, i, w.label,
                                           _resets_per_component(w), tiv))
                    res.sync_node = len(res.nodes) - 1
                else:
                    res.sync_node = i
                stop = True
                break
            res.nodes.append(DNode(target, st, node.depth + 1, i, w.label,
                                   _resets_per_component(w), tiv))
            created.append(len(res.nodes) - 1)
            if len(res.nodes) >= cfg.max_nodes:
                res.depth_hit = True
                stop = True
                break
        if cfg.order == "dfs":
            queue.extend(reversed(created))
        else:
            queue.extend(created)

    if res.verdict != VERDICT_SYNCHRONIZED and res.depth_hit:
        res.verdict = VERDICT_DEPTH_BOUND
    res.stats.update(nodes=res.node_count, max_depth=res.max_depth,
                     windows=windows_total)
    return res


def enumerate_combos(engine: DecomposedEngine, sub: Subspace, label: Optional[str]) -> List[EnablingWindow]:
    """Windows for one label (or the unlabeled subsets when label is None)."""
    return [w for w in engine.windows(sub) if w.label == label]
