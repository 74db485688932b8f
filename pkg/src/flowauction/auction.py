"""The ascending auctions and allocation extraction.

``price_raising`` runs the ascending auction: while the demand network does
not admit a saturating flow, raise prices on the objects of the left-most
min cut, by one unit per iteration or, in adapted mode, by as many units as
the cut's object set survives.  The final prices are the component-wise
minimum competitive prices.  ``allocate`` then reads a stable,
market-clearing assignment off a max flow in the allocation network of the
balanced instance.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import flow as flownet
from .model import (
    Allocation,
    AuctionTrace,
    DUMMY_OBJECT,
    Instance,
    IterationRecord,
    PriceVector,
    balance_instance,
)
from .tiers import TierReport, tier_report

MODES = ("unit", "adapted")


class AuctionError(RuntimeError):
    """Raised when a guaranteed property of the auction fails to hold."""


@dataclass(frozen=True)
class SolveOptions:
    """Solver configuration.

    ``start_prices`` must be component-wise at most the minimum competitive
    prices for the result to be meaningful; this is the caller's
    responsibility and cannot be checked up front.
    """

    mode: str = "unit"
    warm_start: bool = True
    start_prices: PriceVector | None = None
    trace: bool = True


@dataclass(frozen=True)
class Equilibrium:
    prices: PriceVector
    allocation: Allocation
    trace: AuctionTrace


def _reports(instance: Instance, prices: PriceVector) -> dict[str, TierReport]:
    return {j: tier_report(instance, j, prices) for j in instance.buyers}


def _cut_objects_at(instance: Instance, prices: PriceVector) -> frozenset[str]:
    reports = _reports(instance, prices)
    network = flownet.build_demand_network(instance, prices, reports)
    best = flownet.max_flow(network)
    if best.value == network.cap_s:
        return frozenset()
    return flownet.leftmost_min_cut(network, best).objects


def _step_length(
    instance: Instance, prices: PriceVector, raised: frozenset[str], v_max: int
) -> tuple[int, int]:
    """Smallest raise after which the left-most cut's object set changes.

    Raising through any smaller amount replays unit steps on the same
    object set, so the auction may jump by this step in one go.  The
    change point is found by binary search; monotonicity holds because a
    once-changed cut never reverts as prices keep rising on the same set.
    Returns the step and the number of tier-oracle calls spent probing.
    """
    calls = 0

    def changed(amount: int) -> bool:
        nonlocal calls
        calls += len(instance.buyers)
        return _cut_objects_at(instance, prices.raised(raised, amount)) != raised

    # At v_max the raised objects are priced out for every buyer, so the
    # cut has certainly changed and the search window [1, v_max] suffices.
    low, high = 1, max(1, v_max)
    if not changed(high):
        raise AuctionError("cut did not change within the valuation bound")
    while low < high:
        mid = (low + high) // 2
        if changed(mid):
            high = mid
        else:
            low = mid + 1
    return low, calls


def adapted_step_length(
    instance: Instance, prices: PriceVector, cut: flownet.CutResult, flow: flownet.IntegralFlow
) -> int:
    """Public step-length oracle with precondition checks.

    ``cut`` must be the left-most min cut of the demand network at
    ``prices`` for the given maximum ``flow``, and the network must not be
    saturated yet.
    """
    network = flownet.build_demand_network(instance, prices, _reports(instance, prices))
    flownet.check_feasible(network, flow)
    if flow.value >= network.cap_s:
        raise AuctionError("prices are already competitive; no step to take")
    leftmost = flownet.leftmost_min_cut(network, flow)
    if cut.objects != leftmost.objects:
        raise AuctionError("cut is not the left-most min cut at these prices")
    step, _ = _step_length(instance, prices, leftmost.objects, instance.max_valuation)
    return step


def price_raising(
    instance: Instance, options: SolveOptions | None = None
) -> tuple[PriceVector, AuctionTrace]:
    """Run the ascending auction and return the minimum competitive prices.

    Returns the final price vector and a trace with one record per price
    raise (empty when tracing is disabled by the options).
    """
    opts = options or SolveOptions()
    if opts.mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {opts.mode!r}")
    prices = opts.start_prices or PriceVector.zero(instance)
    prices = PriceVector.for_instance(instance, prices.as_dict())
    v_max = instance.max_valuation
    price_bound = v_max + 1

    calls = len(instance.buyers)
    network = flownet.build_demand_network(instance, prices, _reports(instance, prices))
    best = flownet.max_flow(network)
    records: list[IterationRecord] = []

    # Each raise lifts at least one price by at least one and prices stay
    # below the bound, so this limit is never hit unless something is wrong.
    for _ in range(len(instance.objects) * (price_bound + 1) + 1):
        if best.value == network.cap_s:
            trace = AuctionTrace(tuple(records), prices.as_dict(), calls)
            return prices, trace
        cut = flownet.leftmost_min_cut(network, best)
        raised = tuple(i for i in instance.objects if i in cut.objects)
        if not raised:
            raise AuctionError("unsaturated network with an object-free min cut")
        if opts.mode == "adapted":
            step, probe_calls = _step_length(instance, prices, cut.objects, v_max)
            calls += probe_calls
        else:
            step = 1
        next_prices = prices.raised(raised, step)
        if any(next_prices[i] > price_bound for i in raised):
            raise AuctionError("price raised beyond the maximum valuation")
        handoff_gap = None
        if opts.warm_start:
            # Walk the raise one unit at a time: the cut's object set is
            # unchanged at every intermediate price, so each unit update is
            # covered by the update guarantees, and re-augmenting between
            # steps keeps the demand gap non-increasing along the chain.
            next_network, next_best = network, best
            for _ in range(step):
                step_prices = PriceVector(next_network.prices).raised(raised, 1)
                calls += len(instance.buyers)
                step_network = flownet.build_demand_network(
                    instance, step_prices, _reports(instance, step_prices)
                )
                update = flownet.flow_update(
                    next_network, next_best, step_prices.as_dict(), step_network
                )
                handoff_gap = step_network.cap_s - update.flow.value
                next_best = flownet.max_flow(step_network, warm_start=update.flow)
                next_network = step_network
        else:
            calls += len(instance.buyers)
            next_network = flownet.build_demand_network(
                instance, next_prices, _reports(instance, next_prices)
            )
            next_best = flownet.max_flow(next_network)
        if opts.trace:
            records.append(
                IterationRecord(
                    index=len(records),
                    prices=prices.as_dict(),
                    raised=raised,
                    cut_nodes=cut.labels,
                    flow_value=best.value,
                    cap_s=network.cap_s,
                    step=step,
                    handoff_gap=handoff_gap,
                )
            )
        prices, network, best = next_prices, next_network, next_best
    raise AuctionError("auction failed to terminate within the price bound")


def allocate(instance: Instance, prices: PriceVector) -> Allocation:
    """Extract a stable, market-clearing allocation at the given prices.

    The instance is balanced with a zero-value dummy, the allocation
    network is saturated by a max flow, and the per-buyer quantities are
    read off the tier arcs.  ``prices`` must be the minimum competitive
    prices; at those a saturating flow exists, so failing to saturate
    signals a bug and raises :class:`AuctionError`.
    """
    balanced, dummy = balance_instance(instance)
    full_prices = prices
    if dummy.kind == "dummy-object":
        full_prices = prices.extended(DUMMY_OBJECT, 0)
    network = flownet.build_allocation_network(balanced, full_prices)
    best = flownet.max_flow(network)
    if best.value != network.cap_s:
        raise AuctionError(
            "allocation flow does not saturate the source; "
            "market clearing should guarantee saturation"
        )
    quantities: dict[tuple[str, str], int] = {}
    for j in instance.buyers:
        for i in instance.objects:
            amount = sum(
                best.on((flownet.buyer_node(j, tier), flownet.object_node(i)))
                for tier in network.tiers
            )
            if amount > 0:
                quantities[(i, j)] = amount
    return Allocation(quantities)


def solve(instance: Instance, options: SolveOptions | None = None) -> Equilibrium:
    """Minimum competitive prices plus a supporting stable allocation."""
    prices, trace = price_raising(instance, options)
    allocation = allocate(instance, prices)
    return Equilibrium(prices, allocation, trace)


def trace_records(trace: AuctionTrace) -> list[dict]:
    """Iteration records in the documented JSON layout."""
    return [
        {
            "iter": record.index,
            "prices": record.prices,
            "raised_set": list(record.raised),
            "alpha": record.step,
            "flow_value": record.flow_value,
            "cap_s": record.cap_s,
        }
        for record in trace.iterations
    ]
