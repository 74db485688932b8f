import random

import pytest
from hypothesis import given, settings, strategies as st

from flowauction.model import PriceVector, validate_instance
from flowauction.tiers import indirect_utility, preferred_bundle, tier_report
from flowauction.verify import best_bundle_payoff


@st.composite
def instance_and_prices(draw):
    m = draw(st.integers(1, 3))
    n = draw(st.integers(1, 3))
    supplies = {f"o{k}": draw(st.integers(0, 3)) for k in range(m)}
    demands = {f"b{k}": draw(st.integers(0, 3)) for k in range(n)}
    valuations = {j: {i: draw(st.integers(0, 4)) for i in supplies} for j in demands}
    inst = validate_instance(supplies, demands, valuations)
    prices = PriceVector({i: draw(st.integers(0, 5)) for i in inst.objects})
    return inst, prices


def bundle_payoff(instance, buyer, prices, bundle):
    return sum(instance.payoff(i, buyer, prices) * q for i, q in bundle.quantities.items())


class TestPreferredBundle:
    def test_fig1_first_buyer_at_zero(self, fig1):
        bundle, last = preferred_bundle(fig1, "j1", PriceVector.zero(fig1))
        assert bundle.quantities == {"alpha": 1, "beta": 1, "gamma": 2}
        assert last == "gamma"

    def test_no_positive_payoff_gives_empty_bundle(self, fig1):
        prices = PriceVector({"alpha": 3, "beta": 2, "gamma": 1})
        bundle, last = preferred_bundle(fig1, "j1", prices)
        assert bundle.quantities == {}
        assert last is None

    def test_tie_resolved_by_canonical_order(self, three_buyers):
        # payoffs (1, 1): canonical order puts alpha first, supply covers it
        bundle, last = preferred_bundle(three_buyers, "b1", PriceVector({"alpha": 2, "beta": 0}))
        assert bundle.quantities == {"alpha": 2}
        assert last == "alpha"
        assert bundle_payoff(three_buyers, "b1", PriceVector({"alpha": 2, "beta": 0}), bundle) == (
            best_bundle_payoff(three_buyers, "b1", PriceVector({"alpha": 2, "beta": 0}))
        )


class TestTierReport:
    def test_fig1_second_buyer(self, fig1):
        report = tier_report(fig1, "j2", PriceVector.zero(fig1))
        assert report.above == ()
        assert report.at_margin == ("beta",)
        assert report.zero == ("alpha", "gamma")
        assert (report.demand_above, report.demand_at_margin) == (0, 1)
        assert report.demand_zero == 1
        assert report.last_item == "beta"

    def test_fig1_first_buyer(self, fig1):
        report = tier_report(fig1, "j1", PriceVector.zero(fig1))
        assert report.above == ("alpha", "beta")
        assert report.at_margin == ("gamma",)
        assert report.zero == ()
        assert (report.demand_above, report.demand_at_margin, report.demand_zero) == (2, 2, 0)

    def test_all_zero_valuations(self):
        inst = validate_instance({"a": 2, "b": 3}, {"j": 4}, {"j": {}})
        report = tier_report(inst, "j", PriceVector.zero(inst))
        assert report.above == () and report.at_margin == ()
        assert report.zero == ("a", "b")
        assert report.demand_zero == min(5, 4)
        assert report.last_item is None

    def test_zero_demand_buyer_reports_empty_tiers(self):
        inst = validate_instance({"a": 2}, {"j": 0}, {"j": {"a": 4}})
        report = tier_report(inst, "j", PriceVector.zero(inst))
        assert report == tier_report(inst, "j", PriceVector({"a": 1}))
        assert report.above == report.at_margin == report.zero == ()
        assert (report.demand_above, report.demand_at_margin, report.demand_zero) == (0, 0, 0)


class TestIndirectUtility:
    def test_fig1_first_buyer(self, fig1):
        prices = PriceVector.zero(fig1)
        assert indirect_utility(fig1, "j1", prices) == 7
        assert best_bundle_payoff(fig1, "j1", prices) == 7

    def test_priced_out_buyer(self, fig1):
        prices = PriceVector({"alpha": 9, "beta": 9, "gamma": 9})
        assert indirect_utility(fig1, "j1", prices) == 0

    def test_example1(self, example1):
        prices = PriceVector.zero(example1)
        assert indirect_utility(example1, "b1", prices) == 6
        assert best_bundle_payoff(example1, "b1", prices) == 6


@settings(max_examples=150, deadline=None)
@given(instance_and_prices())
def test_greedy_bundle_is_optimal(data):
    inst, prices = data
    for j in inst.buyers:
        bundle, _ = preferred_bundle(inst, j, prices)
        assert bundle_payoff(inst, j, prices, bundle) == best_bundle_payoff(inst, j, prices)
        assert indirect_utility(inst, j, prices) == best_bundle_payoff(inst, j, prices)


@settings(max_examples=150, deadline=None)
@given(instance_and_prices())
def test_report_invariants(data):
    inst, prices = data
    for j in inst.buyers:
        report = tier_report(inst, j, prices)
        bundle, last = preferred_bundle(inst, j, prices)
        assert set(report.above).isdisjoint(report.at_margin)
        assert set(report.above).isdisjoint(report.zero)
        assert set(report.at_margin).isdisjoint(report.zero)
        assert report.demand_above + report.demand_at_margin <= inst.demands[j]
        assert (report.last_item is None) == (not report.above and not report.at_margin)
        if report.last_item is not None:
            assert inst.payoff(report.last_item, j, prices) > 0
        # the minimal bundle buys exactly the above-margin and at-margin amounts
        assert bundle.size == report.demand_above + report.demand_at_margin


def shuffled_greedy(instance, buyer, prices, rng):
    """Greedy construction under a random payoff-monotone tie-break order."""
    ranked = sorted(
        instance.objects,
        key=lambda i: (-instance.payoff(i, buyer, prices), rng.random()),
    )
    residual = instance.demands[buyer]
    last = None
    for obj in ranked:
        if residual <= 0 or instance.payoff(obj, buyer, prices) <= 0:
            break
        residual -= min(instance.supplies[obj], residual)
        last = obj
    return last


@settings(max_examples=100, deadline=None)
@given(instance_and_prices(), st.integers(0, 2**30))
def test_tiers_independent_of_tie_breaking(data, seed):
    inst, prices = data
    rng = random.Random(seed)
    for j in inst.buyers:
        report = tier_report(inst, j, prices)
        last = shuffled_greedy(inst, j, prices, rng)
        if last is None:
            assert report.above == report.at_margin == ()
            continue
        margin = inst.payoff(last, j, prices)
        assert set(report.above) == {
            i for i in inst.objects if inst.payoff(i, j, prices) > margin
        }
        assert set(report.at_margin) == {
            i for i in inst.objects if inst.payoff(i, j, prices) == margin
        }
