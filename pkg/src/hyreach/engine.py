"""Monolithic flowpipe-construction reachability over boxes.

The engine explores the reachability tree of a single (possibly composed)
hybrid automaton.  Flowpipe segments of a node are never retained: they are
cheap to recompute from the entry set, which keeps million-node explorations
in memory.  The per-node work (segment construction, guard scans, jump
successors) runs in a compiled kernel when every guard and invariant is a
conjunction of single-variable constraints, which holds for all generated
benchmark models; otherwise a pure-Python path over ``geometry.Box`` takes
over.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .geometry import Box, CompiledCondition, TimeInterval, compile_condition
from .model import (Condition, HybridAutomaton, Jump, LOCAL, ModelError)

BFS, DFS = "bfs", "dfs"

VERDICT_SAFE = "safe"
VERDICT_UNSAFE_POSSIBLE = "unsafe-possible"
VERDICT_DEPTH_BOUND = "depth-bound-hit"
VERDICT_SYNCHRONIZED = "synchronized"


@dataclass
class AnalysisConfig:
    """Knobs of a reachability run.

    ``horizon`` is the local time horizon per location; ``depth`` limits the
    number of jumps along a path (None defers to ``max_nodes``).  With
    ``terminate_on_sync`` the run stops once a jump successor has every
    local-kind variable at exactly zero.
    """

    delta: float
    horizon: float
    depth: Optional[int] = 20
    order: str = BFS
    representation: str = "box"
    fixed_point: bool = False
    terminate_on_sync: bool = False
    dedup: bool = False
    dedup_tol: float = 1e-6
    opt_enum: bool = False
    slack: float = 0.0
    max_nodes: int = 5_000_000

    def __post_init__(self):
        if self.delta <= 0:
            raise ModelError("time step must be positive")
        if self.horizon < self.delta:
            raise ModelError("horizon must be at least one time step")
        if self.depth is not None and self.depth < 0:
            raise ModelError("jump depth must be nonnegative")
        if self.order not in (BFS, DFS):
            raise ModelError(f"unknown search order {self.order!r}")

    @property
    def max_segments(self) -> int:
        return int(math.ceil(self.horizon / self.delta - 1e-12))


@dataclass(frozen=True)
class FlowpipeSegment:
    location: str
    box: Box
    index: int


class CompiledAutomaton:
    """Automaton flattened into arrays for the expansion kernel."""

    def __init__(self, automaton: HybridAutomaton):
        self.automaton = automaton
        self.var_names = automaton.variable_names
        self.n = len(self.var_names)
        self.kinds = tuple(v.kind for v in automaton.variables)
        self.clock_dims = np.array([i for i, k in enumerate(self.kinds) if k == LOCAL], dtype=np.int64)
        L = len(automaton.locations)
        self.loc_names = tuple(l.name for l in automaton.locations)
        self.rates = np.zeros((L, self.n))
        self.inv_lo = np.full((L, self.n), -np.inf)
        self.inv_hi = np.full((L, self.n), np.inf)
        self.zero_dwell = np.zeros(L, dtype=np.bool_)
        self.inv_compiled: List[CompiledCondition] = []
        self.kernel_ok = True
        for li, loc in enumerate(automaton.locations):
            for d, name in enumerate(self.var_names):
                self.rates[li, d] = loc.flow.rate(name)
            cc = compile_condition(loc.invariant, self.var_names)
            self.inv_compiled.append(cc)
            self.inv_lo[li] = cc.lo
            self.inv_hi[li] = cc.hi
            if cc.general:
                self.kernel_ok = False
            self.zero_dwell[li] = automaton.is_zero_dwell(loc.name)

        jumps = sorted(automaton.jumps, key=lambda j: automaton.location_index(j.source))
        J = len(jumps)
        self.jumps: Tuple[Jump, ...] = tuple(jumps)
        self.j_src = np.array([automaton.location_index(j.source) for j in jumps], dtype=np.int64)
        self.j_tgt = np.array([automaton.location_index(j.target) for j in jumps], dtype=np.int64)
        self.jstart = np.zeros(L + 1, dtype=np.int64)
        for j in jumps:
            self.jstart[automaton.location_index(j.source) + 1] += 1
        self.jstart = np.cumsum(self.jstart)
        self.g_lo = np.full((J, self.n), -np.inf)
        self.g_hi = np.full((J, self.n), np.inf)
        self.r_a = np.ones((J, self.n))
        self.r_b = np.zeros((J, self.n))
        self.guard_compiled: List[CompiledCondition] = []
        for ji, j in enumerate(jumps):
            cc = compile_condition(j.guard, self.var_names)
            self.guard_compiled.append(cc)
            self.g_lo[ji] = cc.lo
            self.g_hi[ji] = cc.hi
            if cc.general:
                self.kernel_ok = False
            for name, a, b in j.reset.entries:
                d = self.var_names.index(name)
                self.r_a[ji, d] = a
                self.r_b[ji, d] = b
        self.max_jumps_per_loc = int(np.max(self.jstart[1:] - self.jstart[:-1])) if J else 0

    def loc_index(self, name: str) -> int:
        return self.automaton.location_index(name)


class _Grow:
    """Growable 2-D float array."""

    def __init__(self, cols, cap=1024):
        self.cols = cols
        self.a = np.empty((cap, cols)) if cols else np.empty((cap, 0))
        self.len = 0

    def append_pair(self, lo, hi):
        if self.len == self.a.shape[0]:
            self.a = np.concatenate([self.a, np.empty_like(self.a)], axis=0)
        half = self.cols // 2
        self.a[self.len, :half] = lo
        self.a[self.len, half:] = hi
        self.len += 1

    def view(self):
        return self.a[: self.len]


class _FpStore:
    """Per-location recorded entry boxes with vectorized containment lookup."""

    def __init__(self, n):
        self.n = n
        self.boxes: Dict[int, np.ndarray] = {}
        self.ids: Dict[int, np.ndarray] = {}
        self.count: Dict[int, int] = {}

    def record(self, loc, lo, hi, node_id):
        if loc not in self.boxes:
            self.boxes[loc] = np.empty((16, 2 * self.n))
            self.ids[loc] = np.empty(16, dtype=np.int64)
            self.count[loc] = 0
        c = self.count[loc]
        if c == self.boxes[loc].shape[0]:
            self.boxes[loc] = np.concatenate([self.boxes[loc], np.empty_like(self.boxes[loc])])
            self.ids[loc] = np.concatenate([self.ids[loc], np.empty_like(self.ids[loc])])
        self.boxes[loc][c, : self.n] = lo
        self.boxes[loc][c, self.n:] = hi
        self.ids[loc][c] = node_id
        self.count[loc] = c + 1

    def coverer(self, loc, lo, hi) -> int:
        c = self.count.get(loc, 0)
        if c == 0:
            return -1
        P = self.boxes[loc][:c]
        mask = np.all(lo >= P[:, : self.n], axis=1) & np.all(hi <= P[:, self.n:], axis=1)
        hits = np.nonzero(mask)[0]
        return int(self.ids[loc][hits[0]]) if len(hits) else -1


class ReachResult:
    """Reachability tree plus verdict and statistics.

    Entry sets are stored per node; flowpipe segments are recomputed on demand
    through :meth:`flowpipe_boxes`, which is deterministic because the
    analysis itself derives children from exactly the same recomputation.
    """

    def __init__(self, compiled: CompiledAutomaton, cfg: AnalysisConfig):
        self.compiled = compiled
        self.automaton = compiled.automaton
        self.cfg = cfg
        self.var_names = compiled.var_names
        self.loc: List[int] = []
        self.parent: List[int] = []
        self.depth: List[int] = []
        self.jump_idx: List[int] = []  # kernel index, -1 for roots
        self.ent = _Grow(2 * compiled.n)
        self.k0: List[int] = []
        self.k1: List[int] = []
        self.t_lo: List[float] = []
        self.t_hi: List[float] = []
        self.expanded: List[bool] = []
        self.covered_by: List[int] = []  # fixed-point: node whose entry covers this one
        self.verdict = VERDICT_SAFE
        self.sync_node: Optional[int] = None
        self.depth_hit = False
        self.stats: Dict[str, float] = {}

    # -- construction
    def _add(self, loc, parent, depth, jump_idx, lo, hi, k0, k1, tlo, thi) -> int:
        self.loc.append(loc)
        self.parent.append(parent)
        self.depth.append(depth)
        self.jump_idx.append(jump_idx)
        self.ent.append_pair(lo, hi)
        self.k0.append(k0)
        self.k1.append(k1)
        self.t_lo.append(tlo)
        self.t_hi.append(thi)
        self.expanded.append(True)
        self.covered_by.append(-1)
        return len(self.loc) - 1

    # -- accessors
    @property
    def node_count(self) -> int:
        return len(self.loc)

    @property
    def max_depth(self) -> int:
        return max(self.depth) if self.depth else 0

    def entry_box(self, i: int) -> Box:
        n = self.compiled.n
        row = self.ent.view()[i]
        return Box(self.var_names, row[:n], row[n:])

    def location_label(self, i: int) -> str:
        return self.compiled.loc_names[self.loc[i]]

    def jump_of(self, i: int) -> Optional[Jump]:
        ji = self.jump_idx[i]
        return None if ji < 0 else self.compiled.jumps[ji]

    def children_map(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for i, p in enumerate(self.parent):
            if p >= 0:
                out.setdefault(p, []).append(i)
        return out

    def roots(self) -> List[int]:
        return [i for i, p in enumerate(self.parent) if p < 0]

    def node_time(self, i: int) -> TimeInterval:
        return TimeInterval(self.t_lo[i], self.t_hi[i])

    def flowpipe_boxes(self, i: int) -> List[Box]:
        return [s.box for s in flowpipe(self.automaton, self.location_label(i), self.entry_box(i), self.cfg)]

    def iter_nodes(self):
        for i in range(self.node_count):
            yield i


def initial_boxes(automaton: HybridAutomaton) -> Dict[str, Box]:
    """Entry boxes from the automaton's init conditions (must be bounded)."""
    out = {}
    scope = automaton.variable_names
    for loc_name, cond in automaton.init:
        cc = compile_condition(cond, scope)
        if np.any(~np.isfinite(cc.lo)) or np.any(~np.isfinite(cc.hi)):
            raise ModelError(f"init condition of {loc_name!r} does not bound all variables")
        box = Box(scope, cc.lo, cc.hi)
        for coefs, ub in cc.general:
            box = box.intersect(CompiledCondition(scope, np.full(len(scope), -np.inf), np.full(len(scope), np.inf), [(coefs, ub)]))
        if not box.is_empty():
            out[loc_name] = box
    return out


def flowpipe(automaton: HybridAutomaton, loc_name: str, entry: Box,
             cfg: AnalysisConfig) -> List[FlowpipeSegment]:
    """Clipped time-successor segments of ``entry`` in ``loc_name``.

    Segment k covers local time [k*delta, (k+1)*delta]; the sequence stops at
    the first empty segment or the horizon.  A zero-dwell location (source of
    an urgent jump) yields a single zero-length segment equal to the clipped
    entry set.
    """
    loc = automaton.location(loc_name)
    inv = compile_condition(loc.invariant, entry.scope)
    entry = entry.intersect(inv)
    if entry.is_empty():
        return []
    if automaton.is_zero_dwell(loc_name):
        seg = entry if cfg.slack == 0.0 else entry.widen(cfg.slack)
        return [FlowpipeSegment(loc_name, seg, 0)]
    out = []
    rates = np.asarray([loc.flow.rate(v) for v in entry.scope])
    for k in range(cfg.max_segments):
        seg = entry.elapse(rates, TimeInterval(k * cfg.delta, (k + 1) * cfg.delta)).intersect(inv)
        if cfg.slack:
            seg = seg.widen(cfg.slack)
        if seg.is_empty():
            break
        out.append(FlowpipeSegment(loc_name, seg, k))
    return out


def jump_successor(automaton: HybridAutomaton, segments: Sequence[FlowpipeSegment],
                   jump: Jump) -> Box:
    """Hull of per-segment jump images, clipped to the target invariant."""
    if not segments:
        raise ModelError("jump_successor needs at least one segment")
    scope = segments[0].box.scope
    guard = compile_condition(jump.guard, scope)
    acc = Box.empty(scope)
    for seg in segments:
        hit = seg.box.intersect(guard)
        if not hit.is_empty():
            acc = acc.hull(hit)
    if acc.is_empty():
        return acc
    target_inv = compile_condition(automaton.location(jump.target).invariant, scope)
    return acc.transform(jump.reset).intersect(target_inv)


def _is_sync_box(lo, hi, clock_dims) -> bool:
    if len(clock_dims) == 0:
        return False
    return bool(np.all(lo[clock_dims] == 0.0) and np.all(hi[clock_dims] == 0.0))


def analyze(automaton: HybridAutomaton, init: Optional[Mapping[str, Box]],
            cfg: AnalysisConfig) -> ReachResult:
    """Explore the reachability tree of ``automaton`` under ``cfg``.

    ``init`` maps location names to entry boxes; None uses the automaton's
    declared init conditions.  Depth is counted in (composed) jumps; the
    verdict is depth-bound-hit when a node at the depth limit still has an
    enabled successor, synchronized when sync termination triggers, safe
    otherwise.
    """
    compiled = CompiledAutomaton(automaton)
    if not compiled.kernel_ok:
        raise ModelError(
            "analyze requires single-variable invariant/guard constraints; "
            "multi-variable constraints are not supported by the box engine"
        )
    if init is None:
        init = initial_boxes(automaton)
    res = ReachResult(compiled, cfg)
    expand = _kernels.expand_box_node

    Jmax = max(compiled.max_jumps_per_loc, 1)
    n = compiled.n
    out_j = np.empty(Jmax, dtype=np.int64)
    out_lo = np.empty((Jmax, n))
    out_hi = np.empty((Jmax, n))
    out_k0 = np.empty(Jmax, dtype=np.int64)
    out_k1 = np.empty(Jmax, dtype=np.int64)

    fp_store = _FpStore(n)

    for loc_name in sorted(init, key=automaton.location_index):
        box = init[loc_name].intersect(compiled.inv_compiled[automaton.location_index(loc_name)])
        if box.is_empty():
            continue
        li = automaton.location_index(loc_name)
        node = res._add(li, -1, 0, -1, box.lo, box.hi, 0, 0, 0.0, 0.0)
        if cfg.fixed_point:
            fp_store.record(li, box.lo, box.hi, node)

    queue = deque(range(res.node_count))
    pop = queue.popleft if cfg.order == BFS else queue.pop
    ent = res.ent
    segments_total = 0
    stop = False

    while queue and not stop:
        i = pop()
        if not res.expanded[i]:
            continue
        li = res.loc[i]
        row = ent.a[i]
        lo = row[:n].copy()
        hi = row[n:2 * n].copy()
        count, segs = expand(
            li, lo, hi, compiled.rates, compiled.inv_lo, compiled.inv_hi,
            compiled.zero_dwell, compiled.jstart, compiled.j_tgt,
            compiled.g_lo, compiled.g_hi, compiled.r_a, compiled.r_b,
            cfg.delta, cfg.max_segments,
            out_j, out_lo, out_hi, out_k0, out_k1)
        segments_total += segs
        if count == 0:
            continue
        depth = res.depth[i]
        if cfg.depth is not None and depth >= cfg.depth:
            res.depth_hit = True
            continue
        parent_zero = bool(compiled.zero_dwell[li])
        created = []
        for c in range(count):
            ji = int(out_j[c])
            clo = out_lo[c].copy()
            chi = out_hi[c].copy()
            if cfg.slack:
                clo -= cfg.slack
                chi += cfg.slack
            tgt = int(compiled.j_tgt[ji])
            if parent_zero:
                tlo, thi = res.t_lo[i], res.t_hi[i]
            else:
                tlo = res.t_lo[i] + out_k0[c] * cfg.delta
                thi = res.t_hi[i] + (out_k1[c] + 1) * cfg.delta
            if cfg.terminate_on_sync and _is_sync_box(clo, chi, compiled.clock_dims):
                res.verdict = VERDICT_SYNCHRONIZED
                if not parent_zero:
                    res.sync_node = res._add(tgt, i, depth + 1, ji, clo, chi,
                                             int(out_k0[c]), int(out_k1[c]), tlo, thi)
                else:
                    res.sync_node = i
                stop = True
                break
            node = res._add(tgt, i, depth + 1, ji, clo, chi,
                            int(out_k0[c]), int(out_k1[c]), tlo, thi)
            if cfg.fixed_point:
                coverer = fp_store.coverer(tgt, clo, chi)
                if coverer >= 0:
                    res.expanded[node] = False
                    res.covered_by[node] = coverer
                else:
                    fp_store.record(tgt, clo, chi, node)
            if res.expanded[node]:
                created.append(node)
            if res.node_count >= cfg.max_nodes:
                res.depth_hit = True
                stop = True
                break
        if cfg.order == DFS:
            queue.extend(reversed(created))
        else:
            queue.extend(created)

    if res.verdict != VERDICT_SYNCHRONIZED and res.depth_hit:
        res.verdict = VERDICT_DEPTH_BOUND
    res.stats.update(nodes=res.node_count, max_depth=res.max_depth,
                     segments=segments_total)
    return res


@dataclass
class SafetyResult:
    verdict: str
    witness_node: Optional[int] = None
    witness_segment: Optional[int] = None


def check_safety(result: ReachResult, bad: Mapping[str, Condition]) -> SafetyResult:
    """Scan stored flowpipes against per-location bad conditions.

    Returns unsafe-possible iff some segment intersects a bad set; safe is
    relative to the explored depth and the over-approximation.
    """
    compiled = {}
    for loc_name, cond in bad.items():
        compiled[loc_name] = compile_condition(cond, result.var_names)
    for i in result.iter_nodes():
        label = result.location_label(i)
        hits = [cc for name, cc in compiled.items() if name in ("*", label)]
        if not hits:
            continue
        for seg in result.flowpipe_boxes(i):
            for cc in hits:
                if not seg.intersect(cc).is_empty():
                    return SafetyResult(VERDICT_UNSAFE_POSSIBLE, i, None)
    return SafetyResult(VERDICT_SAFE)
