"""Core model types: concrete evaluation, resets, validation."""

import pytest
from hypothesis import given, settings, strategies as st

from hyreach.model import (AffineReset, Condition, EQ, Flow, GE, GT,
                           HybridAutomaton, Jump, LE, LT, LinearConstraint,
                           Location, Network, ScopeError, SHARED, Variable,
                           apply_reset, constraint, evaluate, flow, reset,
                           validate)


def cond(*cs):
    return Condition(tuple(cs))


class TestEvaluate:
    def test_closed_relation_boundary(self):
        assert evaluate(cond(constraint({"x": 1.0}, GE, 1.0)), {"x": 1.0})

    def test_scaled_strict(self):
        # 1.1 * 0.5 = 0.55 < 1
        assert evaluate(cond(constraint({"x": 1.1}, LT, 1.0)), {"x": 0.5})
        assert not evaluate(cond(constraint({"x": 2.0}, LT, 1.0)), {"x": 0.5})

    def test_empty_condition_true(self):
        assert evaluate(Condition(), {})
        assert evaluate(Condition(), {"x": 42.0})

    def test_strictness(self):
        assert not evaluate(cond(constraint({"x": 1.0}, LT, 1.0)), {"x": 1.0})
        assert evaluate(cond(constraint({"x": 1.0}, LE, 1.0)), {"x": 1.0})
        assert evaluate(cond(constraint({"x": 1.0}, EQ, 1.0)), {"x": 1.0})
        assert not evaluate(cond(constraint({"x": 1.0}, GT, 1.0)), {"x": 1.0})

    def test_scope_error(self):
        with pytest.raises(ScopeError):
            evaluate(cond(constraint({"y": 1.0}, LE, 0.0)), {"x": 0.0})

    def test_deterministic(self):
        c = cond(constraint({"x": 0.3, "y": -2.0}, LE, 0.7))
        v = {"x": 1.234, "y": 0.456}
        assert evaluate(c, v) == evaluate(c, dict(v))


class TestReset:
    def test_scale(self):
        r = reset({"x": (1.1, 0.0)})
        assert apply_reset(r, {"x": 0.5}) == {"x": 0.55}

    def test_identity_returns_equal_valuation(self):
        r = AffineReset()
        v = {"x": 1.0, "y": -2.0}
        assert apply_reset(r, v) == v

    def test_zero_reset(self):
        r = reset({"x": (0.0, 0.0)})
        assert apply_reset(r, {"x": 1.0}) == {"x": 0.0}

    def test_identity_entries_canonicalized(self):
        assert AffineReset((("x", 1.0, 0.0),)).is_identity
        assert reset({"x": (1.0, 0.0), "y": (2.0, 0.0)}).variables == ("y",)

    def test_scope_error(self):
        with pytest.raises(ScopeError):
            apply_reset(reset({"z": (0.0, 0.0)}), {"x": 1.0})

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), x=st.floats(-10, 10))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_iff_image_fixed_point(self, a, b, x):
        r = reset({"x": (a, b)})
        once = apply_reset(r, {"x": x})
        twice = apply_reset(r, once)
        assert (twice == once) == (a * once["x"] + b == once["x"])


def tiny_automaton(name="a", var="x", shared_rate=None):
    variables = [Variable(var)]
    locs = [Location("on", flow({var: 1.0}), cond(constraint({var: 1.0}, LE, 1.0))),
            Location("off", flow({var: 0.0}))]
    jumps = [Jump("on", "off", guard=cond(constraint({var: 1.0}, GE, 1.0)),
                  reset=reset({var: (0.0, 0.0)}))]
    init = (("on", cond(constraint({var: 1.0}, EQ, 0.0))),)
    if shared_rate is not None:
        variables.append(Variable("z", SHARED))
        locs = [Location(l.name, Flow(l.flow.rates + (("z", shared_rate),)), l.invariant) for l in locs]
    return HybridAutomaton(name, tuple(variables), tuple(locs), tuple(jumps), init)


class TestValidate:
    def test_well_formed(self):
        net = Network((tiny_automaton(),))
        assert validate(net).ok

    def test_unknown_jump_target(self):
        a = tiny_automaton()
        bad = HybridAutomaton(a.name, a.variables, a.locations,
                              a.jumps + (Jump("on", "nowhere"),), a.init)
        report = validate(Network((bad,)))
        assert len(report.violations) == 1
        assert "nowhere" in str(report.violations[0])

    def test_shared_rate_conflict(self):
        a = tiny_automaton("a", "x", shared_rate=1.0)
        b = tiny_automaton("b", "y", shared_rate=0.0)
        report = validate(Network((a, b)))
        assert any(v.kind == "shared-rate" for v in report.violations)

    def test_unshared_name_collision(self):
        a = tiny_automaton("a", "x")
        b = tiny_automaton("b", "x")
        report = validate(Network((a, b)))
        assert any(v.kind == "variable" for v in report.violations)

    def test_time_variable_rules(self):
        t = Variable("t", "time")
        loc = Location("l", flow({"t": 0.0}))
        auto = HybridAutomaton("a", (t,), (loc,), (), (("l", Condition()),))
        report = validate(Network((auto,)))
        assert any(v.kind == "time" for v in report.violations)


class TestDerived:
    def test_zero_dwell_derived_from_urgency(self):
        a = tiny_automaton()
        assert not a.is_zero_dwell("on")
        urgent = HybridAutomaton(a.name, a.variables, a.locations,
                                 (Jump("on", "off", urgent=True),), a.init)
        assert urgent.is_zero_dwell("on")
        assert not urgent.is_zero_dwell("off")

    def test_labels_and_alphabet(self):
        a = tiny_automaton()
        x = HybridAutomaton(a.name, a.variables, a.locations,
                            a.jumps + (Jump("off", "on", label="go"),), a.init)
        assert x.labels == ("go",)
        assert Network((x,)).labels == ("go",)
