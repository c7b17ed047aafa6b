"""Parallel composition: published size table, lazy/eager agreement, determinism."""

import itertools
import math

import pytest

from hyreach.compose import (compose, count_stats, lazy_count_stats,
                             lazy_outgoing, loc_label)
from hyreach.model import (CompositionError, Condition, Flow, HybridAutomaton,
                           Jump, Location, Network, SHARED, Variable, validate)
from hyreach.swarm import SwarmSpec, generate_model

# locations / transitions of the composed automata for 1..8 robots
SIZE_TABLE = {
    "lsync1": ([2, 3, 7, 15, 31, 63, 127, 255],
               [3, 6, 33, 164, 755, 3310, 14077, 58728]),
    "lsync2": ([2, 3, 4, 5, 6, 7, 8, 9],
               [3, 6, 15, 36, 85, 198, 455, 1032]),
    "shd1": ([3, 7, 15, 31, 63, 127, 255, 511],
             [6, 18, 54, 162, 486, 1458, 4374, 13122]),
    "shd2": ([2, 4, 8, 16, 32, 64, 128, 256],
             [5, 13, 35, 97, 275, 793, 2315, 6817]),
}


def closed_form(variant, n):
    """Independent count formulas, cross-checked against the published table."""
    if n == 1:
        return SIZE_TABLE[variant][0][0], SIZE_TABLE[variant][1][0]
    c = math.comb
    if variant == "lsync1":
        return 2 ** n - 1, n + sum(c(n, k) * (3 ** k - 1) for k in range(1, n))
    if variant == "lsync2":
        return n + 1, n * (2 ** (n - 1) + 1)
    if variant == "shd1":
        return 2 ** (n + 1) - 1, 2 * 3 ** n
    return 2 ** n, 3 ** n + 2 ** n


@pytest.mark.parametrize("variant", sorted(SIZE_TABLE))
def test_published_counts(variant):
    locs, trans = SIZE_TABLE[variant]
    for n in range(1, 7):
        net = generate_model(SwarmSpec(n=n, f=1.0, alpha=1.1, variant=variant))
        assert count_stats(compose(net)) == (locs[n - 1], trans[n - 1]), (variant, n)


@pytest.mark.parametrize("variant", sorted(SIZE_TABLE))
def test_closed_form_matches_table(variant):
    locs, trans = SIZE_TABLE[variant]
    for n in range(1, 9):
        assert closed_form(variant, n) == (locs[n - 1], trans[n - 1])


def test_big_instances_lazy_stats():
    # n = 8 via the lazy traversal, against the table
    for variant in sorted(SIZE_TABLE):
        locs, trans = SIZE_TABLE[variant]
        net = generate_model(SwarmSpec(n=8, f=1.0, alpha=1.1, variant=variant))
        assert lazy_count_stats(net) == (locs[7], trans[7])


def test_single_component_identity():
    net = generate_model(SwarmSpec(n=1, variant="lsync1"))
    assert compose(net) is net.components[0]


def test_lsync1_n3_structure():
    net = generate_model(SwarmSpec(n=3, variant="lsync1"))
    www = ("wait", "wait", "wait")
    out = lazy_outgoing(net, www)
    flashes = [cj for cj in out if cj.label is not None]
    assert len(out) == 3 and len(flashes) == 3
    assert sorted(cj.label for cj in flashes) == ["flash1", "flash2", "flash3"]
    waa = ("wait", "adapt", "adapt")
    returns = lazy_outgoing(net, waa)
    assert len(returns) == 8  # 3^2 - 1 subset/branch combinations
    assert all(cj.label is None for cj in returns)
    # a location with no enabled structure: the all-adapt tuple has no labeled
    # jumps (flash blocked) and only return composites
    assert lazy_outgoing(net, ("adapt", "adapt", "adapt")) != []


def test_lazy_agrees_with_eager():
    for variant in sorted(SIZE_TABLE):
        for n in (2, 3, 4):
            net = generate_model(SwarmSpec(n=n, variant=variant))
            auto = compose(net)
            by_source = {}
            for j in auto.jumps:
                by_source.setdefault(j.source, []).append(j)
            for loc in auto.locations:
                parts = tuple(loc.name.split("|"))
                lazy = [cj.to_jump() for cj in lazy_outgoing(net, parts)]
                assert lazy == by_source.get(loc.name, []), (variant, n, loc.name)


def test_deterministic():
    spec = SwarmSpec(n=3, variant="shd2")
    a = compose(generate_model(spec))
    b = compose(generate_model(spec))
    assert a == b


def test_generated_models_validate():
    for variant in sorted(SIZE_TABLE):
        for n in (1, 2, 5, 16):
            report = validate(generate_model(SwarmSpec(n=n, variant=variant)))
            assert report.ok, (variant, n, str(report))


def test_shared_rate_conflict_rejected():
    def mk(name, var, z_rate):
        return HybridAutomaton(
            name, (Variable(var), Variable("z", SHARED)),
            (Location("l", Flow(((var, 1.0), ("z", z_rate)))),),
            (Jump("l", "l", label="go"),),
            (("l", Condition()),),
        )

    net = Network((mk("a", "x", 0.0), mk("b", "y", 1.0)))
    with pytest.raises(CompositionError):
        compose(net)


def test_urgency_disjunction_and_guard_conjunction():
    net = generate_model(SwarmSpec(n=2, variant="lsync2"))
    out = lazy_outgoing(net, ("wait", "adapt"))
    # return composites are urgent because the adapt participant is urgent
    assert all(cj.urgent for cj in out if cj.label == "return")
    flash = [cj for cj in lazy_outgoing(net, ("wait", "wait")) if cj.label == "flash1"][0]
    assert len(flash.guard.constraints) == 1  # only the flasher guards
