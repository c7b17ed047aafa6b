"""Swarm-synchronization benchmark: model generator and exact discrete-event oracle.

Each robot carries a clock that grows at rate 1 up to a firing threshold f.
When a robot's clock reaches f it flashes and resets to zero; every other
clock x is pulled towards firing: it becomes alpha*x when alpha*x < f
(strictly) and 0 otherwise.  Four encodings of this behavior as a network of
hybrid automata are generated: two using per-robot flash labels (lsync1,
lsync2) and two using a shared flag z (shd1, shd2).

The oracle simulates the update rule exactly (event-driven, no time
discretization) and is the reference for soundness checks of the set-based
engines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .compose import lazy_outgoing, loc_label
from .engine import ReachResult
from .model import (AffineReset, Condition, EQ, GE, HybridAutomaton, Jump,
                    LE, LT, Location, ModelError, Network, SHARED,
                    UnsupportedFeatureError, Variable, constraint, evaluate,
                    flow)

VARIANTS = ("lsync1", "lsync2", "shd1", "shd2")
LABEL_VARIANTS = ("lsync1", "lsync2")
SHARED_VARIANTS = ("shd1", "shd2")


@dataclass(frozen=True)
class SwarmSpec:
    """Parameters of a swarm instance.

    Initial clock intervals are [a_i, a_i + width] with a_i = (i-1)/n by
    default; the oracle requires width 0.
    """

    n: int
    f: float = 1.0
    alpha: float = 1.1
    variant: str = "lsync1"
    width: float = 0.0
    inits: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.n < 1:
            raise ModelError("need at least one robot")
        if self.f <= 0:
            raise ModelError("firing threshold f must be positive")
        if self.alpha <= 1:
            raise ModelError("coupling factor alpha must exceed 1")
        if self.width < 0:
            raise ModelError("initial interval width must be nonnegative")
        if self.inits is not None:
            object.__setattr__(self, "inits", tuple(float(a) for a in self.inits))
            if len(self.inits) != self.n:
                raise ModelError("inits must list one anchor per robot")
        for a in self.anchors:
            if a < 0 or a + self.width > self.f:
                raise ModelError(f"initial interval [{a}, {a + self.width}] outside [0, f]")

    @property
    def anchors(self) -> Tuple[float, ...]:
        if self.inits is not None:
            return self.inits
        return tuple((i - 1) / self.n for i in range(1, self.n + 1))

    def clock(self, i: int) -> str:
        return f"x{i}"


def _robot_lsync(spec: SwarmSpec, i: int, sync_return: bool) -> HybridAutomaton:
    x = spec.clock(i)
    f, a = spec.f, spec.alpha
    wait = Location("wait", flow({x: 1.0}), Condition((constraint({x: 1.0}, LE, f),)))
    adapt = Location("adapt", flow({x: 1.0}))
    ret_label = "return" if sync_return else None
    jumps = [Jump("wait", "wait", guard=Condition((constraint({x: 1.0}, GE, f),)),
                  reset=AffineReset(((x, 0.0, 0.0),)), label=f"flash{i}")]
    for j in range(1, spec.n + 1):
        if j != i:
            jumps.append(Jump("wait", "adapt", label=f"flash{j}"))
    jumps.append(Jump("adapt", "wait", guard=Condition((constraint({x: a}, LT, f),)),
                      reset=AffineReset(((x, a, 0.0),)), label=ret_label, urgent=True))
    jumps.append(Jump("adapt", "wait", guard=Condition((constraint({x: a}, GE, f),)),
                      reset=AffineReset(((x, 0.0, 0.0),)), label=ret_label, urgent=True))
    if sync_return and spec.n > 1:
        jumps.append(Jump("wait", "wait", label="return"))
    return HybridAutomaton(f"robot{i}", (Variable(x),), (wait, adapt), tuple(jumps),
                           ((("wait"), _init_cond(spec, i)),))


def _init_cond(spec: SwarmSpec, i: int, with_z: bool = False) -> Condition:
    x = spec.clock(i)
    a = spec.anchors[i - 1]
    if spec.width == 0.0:
        cs = [constraint({x: 1.0}, EQ, a)]
    else:
        cs = [constraint({x: 1.0}, GE, a), constraint({x: 1.0}, LE, a + spec.width)]
    if with_z:
        cs.append(constraint({"z": 1.0}, EQ, 0.0))
    return Condition(tuple(cs))


def _robot_shd1(spec: SwarmSpec, i: int) -> HybridAutomaton:
    x = spec.clock(i)
    f, a = spec.f, spec.alpha
    wait = Location("wait", flow({x: 1.0}), Condition((constraint({x: 1.0}, LE, f),)))
    flash = Location("flash", flow({x: 1.0}))
    adapt = Location("adapt", flow({x: 1.0}))
    z1 = constraint({"z": 1.0}, EQ, 1.0)
    jumps = (
        Jump("wait", "flash", guard=Condition((constraint({x: 1.0}, GE, f),)),
             reset=AffineReset(((x, 0.0, 0.0), ("z", 0.0, 1.0)))),
        Jump("flash", "flash", reset=AffineReset((("z", 0.0, 0.0),)), label="sync1", urgent=True),
        # guarded by the flag, hence not urgent: time may pass in wait while z = 0
        Jump("wait", "adapt", guard=Condition((z1, constraint({x: a}, LT, f))),
             reset=AffineReset(((x, a, 0.0),)), label="sync1"),
        Jump("wait", "adapt", guard=Condition((z1, constraint({x: a}, GE, f))),
             reset=AffineReset(((x, 0.0, 0.0),)), label="sync1"),
        Jump("flash", "wait", label="sync2", urgent=True),
        Jump("adapt", "wait", label="sync2", urgent=True),
    )
    return HybridAutomaton(f"robot{i}", (Variable(x), Variable("z", SHARED)),
                           (wait, flash, adapt), jumps,
                           (("wait", _init_cond(spec, i, with_z=True)),))


def _robot_shd2(spec: SwarmSpec, i: int) -> HybridAutomaton:
    x = spec.clock(i)
    f, a = spec.f, spec.alpha
    wait = Location("wait", flow({x: 1.0}), Condition((constraint({x: 1.0}, LE, f),)))
    sync = Location("sync", flow({x: 1.0}))
    z1 = constraint({"z": 1.0}, EQ, 1.0)
    jumps = (
        Jump("wait", "sync", guard=Condition((constraint({x: 1.0}, GE, f),)),
             reset=AffineReset(((x, 0.0, 0.0), ("z", 0.0, 1.0)))),
        Jump("wait", "sync", guard=Condition((z1,)), label="sync1"),
        Jump("sync", "sync", reset=AffineReset((("z", 0.0, 0.0),)), label="sync1", urgent=True),
        Jump("sync", "wait", guard=Condition((constraint({x: a}, LT, f),)),
             reset=AffineReset(((x, a, 0.0),)), label="sync2", urgent=True),
        Jump("sync", "wait", guard=Condition((constraint({x: a}, GE, f),)),
             reset=AffineReset(((x, 0.0, 0.0),)), label="sync2", urgent=True),
    )
    return HybridAutomaton(f"robot{i}", (Variable(x), Variable("z", SHARED)),
                           (wait, sync), jumps,
                           (("wait", _init_cond(spec, i, with_z=True)),))


def generate_model(spec: SwarmSpec) -> Network:
    """The network of per-robot automata for the chosen encoding."""
    if spec.variant == "lsync1":
        comps = [_robot_lsync(spec, i, sync_return=False) for i in range(1, spec.n + 1)]
    elif spec.variant == "lsync2":
        comps = [_robot_lsync(spec, i, sync_return=True) for i in range(1, spec.n + 1)]
    elif spec.variant == "shd1":
        comps = [_robot_shd1(spec, i) for i in range(1, spec.n + 1)]
    else:
        comps = [_robot_shd2(spec, i) for i in range(1, spec.n + 1)]
    return Network(tuple(comps))


# ---------------------------------------------------------------------------
# exact oracle

@dataclass(frozen=True)
class FlashEvent:
    time: float
    flashers: Tuple[int, ...]           # 1-based robot indices, a joint event
    pre: Tuple[float, ...]              # clocks at the instant of the event
    post: Tuple[float, ...]             # clocks right after the update


@dataclass
class OracleTrace:
    spec: SwarmSpec
    events: Tuple[FlashEvent, ...]
    flash_count: int                    # events up to and including sync
    sync_time: Optional[float]
    sample_times: np.ndarray
    samples: np.ndarray                 # (T, n) clock values on the delta grid


def simulate_oracle(spec: SwarmSpec, horizon: float, delta: float) -> OracleTrace:
    """Event-driven simulation of the pulse-coupling update rule.

    Requires point initial clocks.  All clocks at the threshold flash as one
    joint event; a follower with alpha*x exactly equal to f resets to zero.
    """
    if spec.width != 0.0:
        raise UnsupportedFeatureError("the oracle needs point initial clocks (width 0)")
    n, f, alpha = spec.n, spec.f, spec.alpha
    x = np.array(spec.anchors, dtype=np.float64)
    t = 0.0
    events: List[FlashEvent] = []
    sync_time = None
    flash_count = 0
    while True:
        top = float(np.max(x))
        dt = f - top
        t_next = t + dt
        if t_next > horizon:
            break
        flashers = np.nonzero(x == top)[0]
        flasher_set = set(int(i) for i in flashers)
        pre = x + dt
        pre[flashers] = f  # exact threshold for the flashing group
        post = pre.copy()
        post[flashers] = 0.0
        for j in range(n):
            if j in flasher_set:
                continue
            pulled = alpha * pre[j]
            post[j] = pulled if pulled < f else 0.0
        events.append(FlashEvent(t_next, tuple(int(i) + 1 for i in flashers),
                                 tuple(pre), tuple(post)))
        x = post
        t = t_next
        if sync_time is None and np.all(post == post[0]):
            sync_time = t_next
            flash_count = len(events)
    if sync_time is None:
        flash_count = len(events)

    times = np.arange(0.0, horizon + delta * 0.5, delta)
    samples = np.empty((len(times), n))
    ev_times = np.array([e.time for e in events])
    starts = np.vstack([np.array(spec.anchors)] + [np.array(e.post) for e in events])
    t0s = np.concatenate([[0.0], ev_times])
    idx = np.searchsorted(ev_times, times, side="right")
    for k, (ti, ei) in enumerate(zip(times, idx)):
        samples[k] = starts[ei] + (ti - t0s[ei])
    return OracleTrace(spec, tuple(events), flash_count, sync_time, times, samples)


# ---------------------------------------------------------------------------
# cascade construction: the sequence of composed jumps realizing one oracle
# event in each encoding

@dataclass(frozen=True)
class CascadeStep:
    label: Optional[str]
    target: Tuple[str, ...]             # per-robot location names
    reset: AffineReset                  # merged composed reset
    post: Dict[str, float]              # valuation after the step (incl. z)


def _branch(spec: SwarmSpec, xval: float) -> Tuple[float, float]:
    return (spec.alpha, 0.0) if spec.alpha * xval < spec.f else (0.0, 0.0)


def cascade_steps(spec: SwarmSpec, event: FlashEvent) -> List[CascadeStep]:
    """Composed jumps (label, target tuple, merged reset) realizing one event.

    When several robots flash simultaneously the canonical representative is
    the lowest-index flasher; cross-updates between simultaneous flashers are
    zero-resets either way, so the post state matches the joint oracle rule.
    """
    n = spec.n
    xs = [spec.clock(i) for i in range(1, n + 1)]
    G = set(event.flashers)
    fl = min(G)
    pre = {xs[i]: event.pre[i] for i in range(n)}
    post = {xs[i]: event.post[i] for i in range(n)}
    steps: List[CascadeStep] = []

    if spec.variant in LABEL_VARIANTS:
        if n == 1:
            # single robot: the flash jump is the whole cascade
            return [CascadeStep("flash1", ("wait",),
                                AffineReset(((xs[0], 0.0, 0.0),)), dict(post))]
        mid = dict(pre)
        mid[xs[fl - 1]] = 0.0
        target1 = tuple("wait" if i == fl else "adapt" for i in range(1, n + 1))
        steps.append(CascadeStep(f"flash{fl}", target1,
                                 AffineReset(((xs[fl - 1], 0.0, 0.0),)), mid))
        entries = []
        for i in range(1, n + 1):
            if i == fl:
                continue
            a, b = _branch(spec, pre[xs[i - 1]])
            entries.append((xs[i - 1], a, b))
        label2 = "return" if spec.variant == "lsync2" else None
        steps.append(CascadeStep(label2, tuple("wait" for _ in range(n)),
                                 AffineReset(tuple(entries)), dict(post)))
        return steps

    # shared-variable encodings
    mid1 = dict(pre)
    for g in G:
        mid1[xs[g - 1]] = 0.0
    mid1["z"] = 1.0
    first_loc = "flash" if spec.variant == "shd1" else "sync"
    target1 = tuple(first_loc if i in G else "wait" for i in range(1, n + 1))
    entries1 = [(xs[g - 1], 0.0, 0.0) for g in sorted(G)] + [("z", 0.0, 1.0)]
    steps.append(CascadeStep(None, target1, AffineReset(tuple(entries1)), mid1))

    if spec.variant == "shd1":
        entries2 = [("z", 0.0, 0.0)]
        mid2 = dict(mid1)
        mid2["z"] = 0.0
        for i in range(1, n + 1):
            if i in G:
                continue
            a, b = _branch(spec, pre[xs[i - 1]])
            entries2.append((xs[i - 1], a, b))
            mid2[xs[i - 1]] = a * pre[xs[i - 1]] + b
        target2 = tuple("flash" if i in G else "adapt" for i in range(1, n + 1))
        steps.append(CascadeStep("sync1", target2, AffineReset(tuple(entries2)), mid2))
        final = dict(post)
        final["z"] = 0.0
        steps.append(CascadeStep("sync2", tuple("wait" for _ in range(n)),
                                 AffineReset(()), final))
    else:
        mid2 = dict(mid1)
        mid2["z"] = 0.0
        steps.append(CascadeStep("sync1", tuple("sync" for _ in range(n)),
                                 AffineReset((("z", 0.0, 0.0),)), mid2))
        entries3 = []
        final = dict(post)
        final["z"] = 0.0
        for i in range(1, n + 1):
            xv = 0.0 if i in G else pre[xs[i - 1]]
            a, b = _branch(spec, xv)
            entries3.append((xs[i - 1], a, b))
        steps.append(CascadeStep("sync2", tuple("wait" for _ in range(n)),
                                 AffineReset(tuple(entries3)), final))
    return steps


def _with_z(spec: SwarmSpec, valuation: Mapping[str, float], z: float = 0.0) -> Dict[str, float]:
    v = dict(valuation)
    if spec.variant in SHARED_VARIANTS:
        v.setdefault("z", z)
    return v


def replay_concrete(network: Network, trace: OracleTrace) -> List[str]:
    """Replay the oracle trace as a concrete run of the composed semantics.

    Each event must map to a sequence of enabled composed jumps whose resets
    reproduce the oracle's update; returns a list of discrepancies (empty if
    the trace is a run of the network).
    """
    spec = trace.spec
    n = spec.n
    problems: List[str] = []
    xs = [spec.clock(i) for i in range(1, n + 1)]
    cur = tuple("wait" for _ in range(n))
    v = _with_z(spec, {xs[i]: spec.anchors[i] for i in range(n)})
    t = 0.0
    for event in trace.events:
        # time elapse: clocks advance at rate 1, invariant x <= f must hold
        dt = event.time - t
        for i in range(n):
            v[xs[i]] = event.pre[i]
        t = event.time
        if any(v[x] > spec.f for x in xs):
            problems.append(f"t={t}: invariant x<=f violated before event")
        for step in cascade_steps(spec, event):
            options = [cj for cj in lazy_outgoing(network, cur)
                       if cj.label == step.label and cj.target == step.target
                       and cj.reset == step.reset]
            if len(options) != 1:
                problems.append(f"t={t}: expected one composed jump for step "
                                f"{step.label}/{step.target}, found {len(options)}")
                return problems
            cj = options[0]
            if not evaluate(cj.guard, v):
                problems.append(f"t={t}: guard {cj.guard} not enabled at {v}")
            v = cj.reset.apply(v)
            cur = step.target
            for name, want in step.post.items():
                if v[name] != want:
                    problems.append(f"t={t}: {name} is {v[name]}, oracle says {want}")
    return problems


# ---------------------------------------------------------------------------
# containment of the oracle trace in a reachability tree

@dataclass
class ContainmentReport:
    violations: List[str]
    points_checked: int = 0
    events_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_containment(trace: OracleTrace, result: ReachResult,
                      tol: float = 1e-9) -> ContainmentReport:
    """Check that every sampled oracle state lies in a stored segment of the
    node whose discrete path matches the trace.

    Pre/post valuations of each event are checked against the surrounding
    nodes; grid samples between events are checked against the flowpipe of
    the dwelling node.  The tolerance covers only outward floating-point
    slack.
    """
    spec = trace.spec
    n = spec.n
    xs = [spec.clock(i) for i in range(1, n + 1)]
    tol = tol + result.cfg.slack
    report = ContainmentReport([])
    children = result.children_map()

    roots = result.roots()
    if len(roots) != 1:
        report.violations.append(f"expected a single root, found {len(roots)}")
        return report
    cur = roots[0]

    def point_vec(valuation):
        return np.array([valuation[name] for name in result.var_names])

    def in_flowpipe(node, valuation, when):
        boxes = result.flowpipe_boxes(node)
        p = point_vec(valuation)
        for b in boxes:
            if not b.is_empty() and np.all(p >= b.lo - tol) and np.all(p <= b.hi + tol):
                return
        report.violations.append(
            f"t={when:g}: state {valuation} not covered in node {node} ({result.location_label(node)})")

    def find_child(node, step: CascadeStep):
        want_target = loc_label(step.target)
        for c in children.get(node, ()):
            j = result.jump_of(c)
            if j.label == step.label and j.target == want_target and j.reset == step.reset:
                return c
        return None

    # samples strictly before the first event live in the root
    ev_times = [e.time for e in trace.events]
    sample_idx = 0
    depth_limit = result.cfg.depth

    for e_i, event in enumerate(trace.events):
        while sample_idx < len(trace.sample_times) and trace.sample_times[sample_idx] < event.time:
            tval = trace.sample_times[sample_idx]
            valuation = _with_z(spec, dict(zip(xs, trace.samples[sample_idx])))
            in_flowpipe(cur, valuation, tval)
            report.points_checked += 1
            sample_idx += 1
        pre = _with_z(spec, dict(zip(xs, event.pre)))
        in_flowpipe(cur, pre, event.time)
        truncated = False
        for step in cascade_steps(spec, event):
            if depth_limit is not None and result.depth[cur] >= depth_limit:
                truncated = True
                break
            nxt = find_child(cur, step)
            if nxt is None:
                report.violations.append(
                    f"t={event.time:g}: no child of node {cur} matches step "
                    f"label={step.label} target={loc_label(step.target)}")
                return report
            post = _with_z(spec, step.post, z=step.post.get("z", 0.0))
            box = result.entry_box(nxt)
            if not box.contains_point(point_vec(post), tol=tol):
                report.violations.append(
                    f"t={event.time:g}: post state {post} outside entry of node {nxt}")
            # fixed-point pruning: continue in the covering node, whose entry
            # is a superset in the same location
            if not result.expanded[nxt] and result.covered_by[nxt] >= 0:
                nxt = result.covered_by[nxt]
            cur = nxt
        report.events_checked += 1
        if truncated:
            return report
    # tail samples after the last event
    while sample_idx < len(trace.sample_times):
        tval = trace.sample_times[sample_idx]
        valuation = _with_z(spec, dict(zip(xs, trace.samples[sample_idx])))
        in_flowpipe(cur, valuation, tval)
        report.points_checked += 1
        sample_idx += 1
    return report
