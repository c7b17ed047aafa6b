"""Eager and lazy parallel composition under label synchronization.

Composition rules:

* R1  Labeled composed jumps require every component whose alphabet contains
      the label to take a local jump with that label (strict blocking).
      Unlabeled local jumps compose over every nonempty subset of components
      moving simultaneously.
* R2  Composed jumps that are pure no-ops (source tuple equals target tuple
      and the merged reset is the identity) are pruned.
* R3  Locations unreachable from the initial location(s) in the discrete
      jump graph are pruned along with their jumps (eager composition builds
      the reachable part only, so this holds by construction).

A single-component network composes to the component itself, unpruned.

Locations and jumps are emitted deterministically: locations in lexicographic
order of component location indices, jumps grouped by source location in
enumeration order (labels in alphabet order before unlabeled subsets, local
jumps in declaration order).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .model import (AffineReset, CompositionError, Condition, Flow,
                    HybridAutomaton, Jump, Location, Network, Variable)

LOC_SEP = "|"


def loc_label(names: Sequence[str]) -> str:
    return LOC_SEP.join(names)


@dataclass(frozen=True)
class ComposedJump:
    """A composed jump plus the per-component local jumps that form it."""

    source: Tuple[str, ...]
    target: Tuple[str, ...]
    participants: Tuple[Tuple[int, Jump], ...]
    label: Optional[str]
    guard: Condition
    reset: AffineReset
    urgent: bool

    def to_jump(self) -> Jump:
        return Jump(loc_label(self.source), loc_label(self.target),
                    guard=self.guard, reset=self.reset, label=self.label,
                    urgent=self.urgent)

    def local_jump(self, comp_index: int) -> Optional[Jump]:
        for i, j in self.participants:
            if i == comp_index:
                return j
        return None


def _merge(components, source: Tuple[str, ...], participants, label) -> Optional[ComposedJump]:
    target = list(source)
    constraints: list = []
    resets: Dict[str, Tuple[float, float]] = {}
    urgent = False
    for i, j in participants:
        target[i] = j.target
        constraints.extend(j.guard.constraints)
        for name, a, b in j.reset.entries:
            prev = resets.get(name)
            if prev is not None and prev != (a, b):
                raise CompositionError(
                    f"conflicting resets of shared variable {name!r} in composed jump from {loc_label(source)}"
                )
            resets[name] = (a, b)
        urgent = urgent or j.urgent
    reset = AffineReset(tuple((n, a, b) for n, (a, b) in resets.items()))
    target_t = tuple(target)
    if target_t == source and reset.is_identity:
        return None  # R2
    return ComposedJump(source, target_t, tuple(participants), label,
                        Condition(tuple(constraints)), reset, urgent)


def _outgoing(network: Network, loc: Tuple[str, ...]) -> List[ComposedJump]:
    comps = network.components
    out: List[ComposedJump] = []

    for label in network.labels:
        members = [i for i, c in enumerate(comps) if label in c.labels]
        choice_lists = []
        blocked = False
        for i in members:
            local = [j for j in comps[i].jumps_from(loc[i]) if j.label == label]
            if not local:
                blocked = True
                break
            choice_lists.append([(i, j) for j in local])
        if blocked or not members:
            continue
        for combo in itertools.product(*choice_lists):
            cj = _merge(comps, loc, combo, label)
            if cj is not None:
                out.append(cj)

    options = []
    any_unlabeled = False
    for i, c in enumerate(comps):
        local = [(i, j) for j in c.jumps_from(loc[i]) if j.label is None]
        any_unlabeled = any_unlabeled or bool(local)
        options.append([None] + local)
    if any_unlabeled:
        for combo in itertools.product(*options):
            participants = [p for p in combo if p is not None]
            if not participants:
                continue
            cj = _merge(comps, loc, participants, None)
            if cj is not None:
                out.append(cj)
    return out


def _check_shared_rates(network: Network, loc: Tuple[str, ...]):
    for name in network.shared_variables:
        seen = None
        for i, c in enumerate(network.components):
            if name not in c.variable_names:
                continue
            r = c.location(loc[i]).flow.rate(name)
            if seen is None:
                seen = r
            elif r != seen:
                raise CompositionError(
                    f"conflicting rates for shared variable {name!r} in composed location {loc_label(loc)}"
                )


def lazy_outgoing(network: Network, loc: Tuple[str, ...]) -> List[ComposedJump]:
    """Composed jumps with source ``loc``, exactly as compose() would emit them.

    For a single-component network this returns the component's raw jumps
    (identity composition, no pruning).
    """
    comps = network.components
    if len(loc) != len(comps):
        raise CompositionError(f"location tuple {loc} does not match {len(comps)} components")
    for i, c in enumerate(comps):
        if not c.has_location(loc[i]):
            raise CompositionError(f"component {c.name!r} has no location {loc[i]!r}")
    _check_shared_rates(network, loc)
    if len(comps) == 1:
        return [
            ComposedJump((j.source,), (j.target,), ((0, j),), j.label, j.guard, j.reset, j.urgent)
            for j in comps[0].jumps_from(loc[0])
        ]
    return _outgoing(network, loc)


def initial_tuples(network: Network) -> List[Tuple[str, ...]]:
    lists = []
    for c in network.components:
        names = [name for name, _ in c.init]
        if not names:
            raise CompositionError(f"component {c.name!r} declares no initial location")
        lists.append(names)
    return [tuple(t) for t in itertools.product(*lists)]


def compose(network: Network) -> HybridAutomaton:
    """Build the eager parallel composition (rules R1, R2, R3)."""
    comps = network.components
    if len(comps) == 0:
        raise CompositionError("cannot compose an empty network")
    if len(comps) == 1:
        return comps[0]

    roots = initial_tuples(network)
    discovered: Dict[Tuple[str, ...], List[ComposedJump]] = {}
    queue = list(roots)
    seen = set(roots)
    while queue:
        loc = queue.pop(0)
        _check_shared_rates(network, loc)
        jumps = _outgoing(network, loc)
        discovered[loc] = jumps
        for cj in jumps:
            if cj.target not in seen:
                seen.add(cj.target)
                queue.append(cj.target)

    def loc_key(t: Tuple[str, ...]):
        return tuple(comps[i].location_index(name) for i, name in enumerate(t))

    ordered = sorted(discovered, key=loc_key)

    # composed variable scope: per-component order, shared names once
    variables: List[Variable] = []
    names = set()
    for c in comps:
        for v in c.variables:
            if v.name not in names:
                names.add(v.name)
                variables.append(v)

    locations = []
    for t in ordered:
        rates: Dict[str, float] = {}
        constraints: list = []
        for i, c in enumerate(comps):
            l = c.location(t[i])
            for name, r in l.flow.rates:
                rates[name] = r
            constraints.extend(l.invariant.constraints)
        locations.append(Location(loc_label(t), Flow(tuple(rates.items())), Condition(tuple(constraints))))

    jumps = tuple(cj.to_jump() for t in ordered for cj in discovered[t])

    init = []
    for t in roots:
        constraints = []
        for i, c in enumerate(comps):
            constraints.extend(c.init_condition(t[i]).constraints)
        init.append((loc_label(t), Condition(tuple(constraints))))

    return HybridAutomaton(
        name=loc_label(tuple(c.name for c in comps)),
        variables=tuple(variables),
        locations=tuple(locations),
        jumps=jumps,
        init=tuple(init),
    )


def count_stats(automaton: HybridAutomaton) -> Tuple[int, int]:
    """(number of locations, number of transitions) of the composition."""
    return len(automaton.locations), len(automaton.jumps)


def lazy_count_stats(network: Network) -> Tuple[int, int]:
    """Location/transition counts via lazy traversal, without building Jump objects."""
    if len(network.components) == 1:
        return count_stats(network.components[0])
    roots = initial_tuples(network)
    seen = set(roots)
    queue = list(roots)
    trans = 0
    while queue:
        loc = queue.pop(0)
        for cj in _outgoing(network, loc):
            trans += 1
            if cj.target not in seen:
                seen.add(cj.target)
                queue.append(cj.target)
    return len(seen), trans
