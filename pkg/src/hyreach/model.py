"""Domain types for networks of constant-rate hybrid automata.

A hybrid automaton here consists of named locations with constant-rate flows
and conjunctive linear invariants, plus guarded, resetting jumps that may
carry a synchronization label and an urgency flag.  Several automata form a
network that communicates through labels and shared variables.

All types are immutable values after construction and safe to share across
concurrent analyses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple


class ModelError(Exception):
    """Malformed model or invalid request."""


class ScopeError(ModelError):
    """A constraint, flow or reset references a variable outside its scope."""


class CompositionError(ModelError):
    """Conflicting shared-variable rates or resets during composition."""


class UnsupportedFeatureError(ModelError):
    """The requested analysis does not support this model class."""


# Variable kinds
LOCAL = "local"
SHARED = "shared"
TIME = "time"
VARIABLE_KINDS = (LOCAL, SHARED, TIME)


@dataclass(frozen=True)
class Variable:
    """A real-valued variable; ``kind`` is one of local/shared/time."""

    name: str
    kind: str = LOCAL

    def __post_init__(self):
        if self.kind not in VARIABLE_KINDS:
            raise ModelError(f"unknown variable kind {self.kind!r}")


# Relations of linear constraints.  Strict relations are kept faithfully and
# evaluated strictly on concrete valuations; set-based analysis relaxes them
# to their closed counterparts.
LE, LT, EQ, GE, GT = "<=", "<", "=", ">=", ">"
RELATIONS = (LE, LT, EQ, GE, GT)

_REL_FUNCS = {
    LE: lambda lhs, b: lhs <= b,
    LT: lambda lhs, b: lhs < b,
    EQ: lambda lhs, b: lhs == b,
    GE: lambda lhs, b: lhs >= b,
    GT: lambda lhs, b: lhs > b,
}


def _canon_terms(terms) -> Tuple[Tuple[str, float], ...]:
    """Sorted (name, coefficient) pairs with zero coefficients dropped."""
    if isinstance(terms, Mapping):
        items = terms.items()
    else:
        items = terms
    merged: dict = {}
    for name, coef in items:
        merged[name] = merged.get(name, 0.0) + float(coef)
    return tuple(sorted((n, c) for n, c in merged.items() if c != 0.0))


@dataclass(frozen=True)
class LinearConstraint:
    """A constraint ``sum(coef * var) ~ bound`` with ``~`` in <=,<,=,>=,>.

    An empty term list is the constant constraint ``0 ~ bound``.
    """

    terms: Tuple[Tuple[str, float], ...]
    rel: str
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "terms", _canon_terms(self.terms))
        object.__setattr__(self, "bound", float(self.bound))
        if self.rel not in RELATIONS:
            raise ModelError(f"unknown relation {self.rel!r}")

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.terms)

    def evaluate(self, valuation: Mapping[str, float]) -> bool:
        """Strict concrete evaluation; raises ScopeError on unknown variables."""
        lhs = 0.0
        for name, coef in self.terms:
            if name not in valuation:
                raise ScopeError(f"variable {name!r} not in valuation scope")
            lhs += coef * valuation[name]
        return _REL_FUNCS[self.rel](lhs, self.bound)

    def __str__(self):
        if not self.terms:
            return f"0 {self.rel} {self.bound:g}"
        parts = []
        for i, (name, coef) in enumerate(self.terms):
            if coef == 1.0:
                term = name
            elif coef == -1.0:
                term = f"-{name}"
            else:
                term = f"{coef!r}*{name}"
            if i > 0 and not term.startswith("-"):
                term = "+ " + term
            elif i > 0:
                term = "- " + term[1:]
            parts.append(term)
        return f"{' '.join(parts)} {self.rel} {self.bound!r}"


def constraint(terms, rel: str, bound: float) -> LinearConstraint:
    return LinearConstraint(_canon_terms(terms), rel, bound)


@dataclass(frozen=True)
class Condition:
    """A conjunction of linear constraints; the empty conjunction is true."""

    constraints: Tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def is_true(self) -> bool:
        return not self.constraints

    @property
    def variables(self) -> Tuple[str, ...]:
        seen = []
        for c in self.constraints:
            for v in c.variables:
                if v not in seen:
                    seen.append(v)
        return tuple(seen)

    def conjoin(self, other: "Condition") -> "Condition":
        return Condition(self.constraints + other.constraints)

    def evaluate(self, valuation: Mapping[str, float]) -> bool:
        return all(c.evaluate(valuation) for c in self.constraints)

    def __str__(self):
        return " && ".join(str(c) for c in self.constraints) if self.constraints else "true"


TRUE = Condition()


def evaluate(condition: Condition, valuation: Mapping[str, float]) -> bool:
    """Concrete evaluation of a condition; strict relations stay strict."""
    return condition.evaluate(valuation)


@dataclass(frozen=True)
class AffineReset:
    """Per-variable assignments ``x' := a*x + b``; absent variables keep their value.

    Identity entries (a=1, b=0) are dropped, so the identity reset has no
    entries and resets compare syntactically.
    """

    entries: Tuple[Tuple[str, float, float], ...] = ()

    def __post_init__(self):
        canon = tuple(
            sorted((n, float(a), float(b)) for n, a, b in self.entries if not (a == 1.0 and b == 0.0))
        )
        object.__setattr__(self, "entries", canon)

    @property
    def is_identity(self) -> bool:
        return not self.entries

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(n for n, _, _ in self.entries)

    def get(self, name: str) -> Tuple[float, float]:
        for n, a, b in self.entries:
            if n == name:
                return a, b
        return 1.0, 0.0

    def apply(self, valuation: Mapping[str, float]) -> dict:
        out = dict(valuation)
        for name, a, b in self.entries:
            if name not in valuation:
                raise ScopeError(f"reset variable {name!r} not in valuation scope")
            out[name] = a * valuation[name] + b
        return out

    def __str__(self):
        if not self.entries:
            return "id"
        return "; ".join(f"{n} := {a!r}*{n} + {b!r}" for n, a, b in self.entries)


def reset(assignments: Mapping[str, Tuple[float, float]]) -> AffineReset:
    return AffineReset(tuple((n, a, b) for n, (a, b) in assignments.items()))


def apply_reset(r: AffineReset, valuation: Mapping[str, float]) -> dict:
    """Map assigned variables through a*x + b, leave the rest unchanged."""
    return r.apply(valuation)


@dataclass(frozen=True)
class Flow:
    """Constant rates per variable; variables without an entry have rate 0."""

    rates: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self):
        canon = tuple(sorted((n, float(c)) for n, c in self.rates if c != 0.0))
        object.__setattr__(self, "rates", canon)

    def rate(self, name: str) -> float:
        for n, c in self.rates:
            if n == name:
                return c
        return 0.0

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.rates)


def flow(rates: Mapping[str, float]) -> Flow:
    return Flow(tuple(rates.items()))


@dataclass(frozen=True)
class Location:
    name: str
    flow: Flow = Flow()
    invariant: Condition = TRUE


@dataclass(frozen=True)
class Jump:
    """A discrete transition with guard, affine reset, optional label, urgency."""

    source: str
    target: str
    guard: Condition = TRUE
    reset: AffineReset = AffineReset()
    label: Optional[str] = None
    urgent: bool = False


@dataclass(frozen=True)
class HybridAutomaton:
    """A single hybrid automaton over an ordered variable scope.

    Zero-dwell status of a location is derived, not stored: a location is
    zero-dwell iff it is the source of at least one urgent jump.
    """

    name: str
    variables: Tuple[Variable, ...]
    locations: Tuple[Location, ...]
    jumps: Tuple[Jump, ...]
    init: Tuple[Tuple[str, Condition], ...] = ()

    _loc_index: dict = field(init=False, repr=False, compare=False, default=None)
    _jumps_from: dict = field(init=False, repr=False, compare=False, default=None)
    _zero_dwell: frozenset = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "jumps", tuple(self.jumps))
        object.__setattr__(self, "init", tuple(self.init))
        object.__setattr__(self, "_loc_index", {l.name: i for i, l in enumerate(self.locations)})
        by_src: dict = {l.name: [] for l in self.locations}
        for j in self.jumps:
            by_src.setdefault(j.source, []).append(j)
        object.__setattr__(self, "_jumps_from", by_src)
        object.__setattr__(
            self, "_zero_dwell", frozenset(j.source for j in self.jumps if j.urgent)
        )

    @property
    def variable_names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def labels(self) -> Tuple[str, ...]:
        seen = []
        for j in self.jumps:
            if j.label is not None and j.label not in seen:
                seen.append(j.label)
        return tuple(seen)

    def location(self, name: str) -> Location:
        try:
            return self.locations[self._loc_index[name]]
        except KeyError:
            raise ModelError(f"automaton {self.name!r} has no location {name!r}") from None

    def location_index(self, name: str) -> int:
        return self._loc_index[name]

    def has_location(self, name: str) -> bool:
        return name in self._loc_index

    def jumps_from(self, loc_name: str) -> Sequence[Jump]:
        return self._jumps_from.get(loc_name, ())

    def is_zero_dwell(self, loc_name: str) -> bool:
        return loc_name in self._zero_dwell

    def init_condition(self, loc_name: str) -> Optional[Condition]:
        for name, cond in self.init:
            if name == loc_name:
                return cond
        return None


@dataclass(frozen=True)
class Network:
    """A list of component automata communicating via labels and shared variables."""

    components: Tuple[HybridAutomaton, ...]

    _labels: tuple = field(init=False, repr=False, compare=False, default=None)
    _shared: tuple = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        labels = []
        for comp in self.components:
            for lab in comp.labels:
                if lab not in labels:
                    labels.append(lab)
        object.__setattr__(self, "_labels", tuple(labels))
        seen: dict = {}
        shared = []
        for comp in self.components:
            for v in comp.variables:
                if v.name in seen:
                    if v.name not in shared:
                        shared.append(v.name)
                else:
                    seen[v.name] = v
        # variables declared shared are shared even if used by one component
        for comp in self.components:
            for v in comp.variables:
                if v.kind == SHARED and v.name not in shared:
                    shared.append(v.name)
        object.__setattr__(self, "_shared", tuple(shared))

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    @property
    def shared_variables(self) -> Tuple[str, ...]:
        return self._shared

    @property
    def variable_names(self) -> Tuple[str, ...]:
        """Union of component scopes; shared names appear once, in first-use order."""
        out = []
        for comp in self.components:
            for v in comp.variables:
                if v.name not in out:
                    out.append(v.name)
        return tuple(out)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.subject}: {self.message}"


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _check_scope(cond: Condition, scope: set, subject: str, out: list):
    for c in cond.constraints:
        for name in c.variables:
            if name not in scope:
                out.append(Violation("scope", subject, f"unknown variable {name!r}"))


def validate(network: Network) -> ValidationReport:
    """Check all type invariants; an empty report means the network is well-formed."""
    out: list = []
    kinds: dict = {}
    owners: dict = {}
    for comp in network.components:
        scope = set(comp.variable_names)
        for v in comp.variables:
            prev = kinds.get(v.name)
            if prev is not None and prev != v.kind:
                out.append(
                    Violation("variable", v.name, f"declared {v.kind!r} in {comp.name!r} but {prev!r} elsewhere")
                )
            kinds[v.name] = v.kind
            owners.setdefault(v.name, []).append(comp.name)
        for loc in comp.locations:
            for name in loc.flow.variables:
                if name not in scope:
                    out.append(Violation("scope", f"{comp.name}.{loc.name}", f"flow on unknown variable {name!r}"))
            _check_scope(loc.invariant, scope, f"{comp.name}.{loc.name}", out)
        for k, j in enumerate(comp.jumps):
            subject = f"{comp.name}.jump[{k}] {j.source}->{j.target}"
            if not comp.has_location(j.source):
                out.append(Violation("jump", subject, f"unknown source location {j.source!r}"))
            if not comp.has_location(j.target):
                out.append(Violation("jump", subject, f"unknown target location {j.target!r}"))
            _check_scope(j.guard, scope, subject, out)
            for name in j.reset.variables:
                if name not in scope:
                    out.append(Violation("scope", subject, f"reset on unknown variable {name!r}"))
        for loc_name, cond in comp.init:
            if not comp.has_location(loc_name):
                out.append(Violation("init", comp.name, f"init for unknown location {loc_name!r}"))
            _check_scope(cond, scope, f"{comp.name}.init[{loc_name}]", out)

    # names used by several components must be declared shared (time vars are
    # per-component, local vars private)
    for name, comps in owners.items():
        if len(comps) > 1 and kinds.get(name) != SHARED:
            out.append(
                Violation("variable", name, f"used by components {comps} but not declared shared")
            )

    # explicit-time variables: never reset, rate 1 in every location
    for comp in network.components:
        for v in comp.variables:
            if v.kind != TIME:
                continue
            for loc in comp.locations:
                if loc.flow.rate(v.name) != 1.0:
                    out.append(
                        Violation("time", v.name, f"rate {loc.flow.rate(v.name)} in {comp.name}.{loc.name}, expected 1")
                    )
            for j in comp.jumps:
                if v.name in j.reset.variables:
                    out.append(Violation("time", v.name, f"reset by {comp.name} jump {j.source}->{j.target}"))

    # shared-variable rates must agree across components in every location pair;
    # with constant rates this reduces to: one rate everywhere
    for name in network.shared_variables:
        rates = {}
        for comp in network.components:
            if name not in comp.variable_names:
                continue
            for loc in comp.locations:
                rates.setdefault(comp.name + "." + loc.name, loc.flow.rate(name))
        distinct = sorted(set(rates.values()))
        if len(distinct) > 1:
            out.append(
                Violation("shared-rate", name, f"conflicting rates {distinct} across component locations")
            )

    # constraints must have a nonzero coefficient or be trivial constants
    # (the canonical form already drops zero coefficients, so nothing to do)

    return ValidationReport(out)
