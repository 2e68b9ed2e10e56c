"""Portfolio planners: interval cost model, greedy migration planner,
single-marketspace planners, and portfolio aggregation.

A plan covers a planning period of ``n`` hours with a chain of intervals,
each interval being one stay on one marketspace. Switching marketspaces (or
starting a fresh 6-hour spot VM) needs one hour of double hosting for the
data transfer, so a migrating interval starts on the last hour of its
predecessor and both pay for that hour. Consecutive reservation terms on the
same marketspace renew seamlessly instead (no overlap, one more fee).

Consequently the paid decision count of a plan is always
``n + number_of_migrations``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .catalog import (
    MARKETSPACE_ORDER,
    MARKETSPACE_RANK,
    Catalog,
    CostModel,
    InstanceType,
    Marketspace,
    PricingMode,
    effective_hourly_cost,
    term_fee,
)
from .errors import (
    DivisionGuardError,
    InfeasiblePlanError,
    MixedHorizonsError,
    NoPriceError,
    SingleHourOnlyError,
)

__all__ = [
    "Regime",
    "Interval",
    "Plan",
    "PortfolioReport",
    "avg_cost",
    "instance_prices",
    "single_marketspace_cost",
    "plan_vm_with_migration",
    "plan_vm_no_migration",
    "plan_homogeneous",
    "plan_portfolio",
    "aggregate",
]


class Regime(Enum):
    HOMOGENEOUS = "homogeneous"
    HETERO_NO_MIGRATION = "hetero_no_migration"
    HETERO_WITH_MIGRATION = "hetero_with_migration"


@dataclass(frozen=True)
class Interval:
    """One contiguous stay on one marketspace, hours ``start..end`` inclusive.

    ``entered_by_migration`` marks intervals whose first hour overlaps the
    predecessor (double hosting). The paid decision count is
    ``end - start + 1`` either way.
    """

    start: int
    end: int
    marketspace: Marketspace
    entered_by_migration: bool
    cost_usd: Fraction

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ValueError(f"bad interval bounds {self.start}..{self.end}")
        period = self.marketspace.contract_period_hours
        if period is not None and self.decision_count > period:
            raise ValueError(
                f"{self.marketspace.token} interval of {self.decision_count} h "
                f"exceeds the {period} h contract period")

    @property
    def decision_count(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Plan:
    """Interval chain hosting one VM for the whole planning period."""

    vm_id: str
    instance_type: str
    n: int
    intervals: tuple[Interval, ...]

    @property
    def total_cost(self) -> Fraction:
        return sum((iv.cost_usd for iv in self.intervals), Fraction(0))

    @property
    def avg_cost_per_hour(self) -> Fraction:
        return self.total_cost / self.n

    @property
    def migrations(self) -> int:
        return sum(1 for iv in self.intervals if iv.entered_by_migration)


@dataclass(frozen=True)
class PortfolioReport:
    """Aggregate view of one portfolio under one regime.

    ``timeline[ms][h]`` is the number of VMs hosted on ``ms`` during hour
    ``h`` (1-based); a migrating VM appears on both marketspaces during the
    overlap hour.
    """

    regime: Regime
    n: int
    plans: tuple[Plan, ...]
    timeline: dict[Marketspace, np.ndarray]
    total_usd: Fraction
    avg_usd_per_vm_hour: Fraction
    homogeneous_marketspace: Optional[Marketspace] = None


# --- average-cost functions ----------------------------------------------------

def avg_cost(marketspace: Marketspace, base_cost: Fraction, l: int,
             k: int) -> Fraction:
    """Average cost per productive hour of one candidate interval.

    ``base_cost`` is the effective hourly cost for per-hour marketspaces and
    the term fee for reservations. ``l`` is the number of slots the interval
    occupies beyond the decision slot, ``k`` is 1 when a migration must
    follow the interval and 0 when it can host to the end of the planning
    period. The 1-hour marketspace only supports single-hour planning.
    """
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    if l < 0:
        raise ValueError("l must be non-negative")
    base = Fraction(base_cost)
    if marketspace is Marketspace.H1SM:
        if l == 0 and k == 0:
            return base
        raise SingleHourOnlyError(
            "1-hour marketspace is not usable beyond a single-hour plan")
    if marketspace in (Marketspace.SM, Marketspace.ODM):
        if k == 0:
            return base
        if l == 0:
            raise DivisionGuardError("cannot spread a migration over zero slots")
        return base + base / l * k
    if marketspace is Marketspace.H6SM:
        return base + base / 5 * k
    # reservations: the fee is spread over the productive slots
    denom = l + (1 - k)
    if denom <= 0:
        raise DivisionGuardError("cannot spread a fee over zero slots")
    return base / denom


@dataclass(frozen=True)
class InstancePrices:
    """Exact per-marketspace prices of one instance under one cost model."""

    hourly: dict[Marketspace, Fraction]
    fees: dict[Marketspace, Fraction]

    def priced(self, ms: Marketspace) -> bool:
        return ms in self.hourly or ms in self.fees


def instance_prices(instance: InstanceType, catalog: Catalog,
                    model: CostModel) -> InstancePrices:
    hourly: dict[Marketspace, Fraction] = {}
    fees: dict[Marketspace, Fraction] = {}
    for ms in MARKETSPACE_ORDER:
        if not catalog.has_price(instance, ms):
            continue
        if ms.pricing_mode is PricingMode.PER_HOUR:
            hourly[ms] = effective_hourly_cost(instance, ms, model, catalog)
        else:
            fees[ms] = term_fee(instance, ms, catalog)
    return InstancePrices(hourly, fees)


# --- single-marketspace planning -----------------------------------------------

def single_marketspace_cost(marketspace: Marketspace, instance: InstanceType,
                            n: int, catalog: Catalog,
                            model: CostModel) -> Fraction:
    """Total cost of hosting one VM on one marketspace for ``n`` hours.

    Bounded per-hour marketspaces are only feasible within their contract
    period (no migration available here); reservations renew seamlessly, one
    fee per started term.
    """
    if n < 1:
        raise ValueError("planning period must be at least one hour")
    period = marketspace.contract_period_hours
    if marketspace.pricing_mode is PricingMode.PER_HOUR:
        if period is not None and n > period:
            raise InfeasiblePlanError(
                f"{marketspace.token} cannot host beyond {period} h without "
                "migration", marketspace=marketspace.token, n=n)
        return n * effective_hourly_cost(instance, marketspace, model, catalog)
    terms = math.ceil(n / period)
    return terms * term_fee(instance, marketspace, catalog)


def _single_marketspace_plan(marketspace: Marketspace, instance: InstanceType,
                             n: int, catalog: Catalog, model: CostModel,
                             vm_id: str) -> Plan:
    intervals: list[Interval] = []
    if marketspace.pricing_mode is PricingMode.PER_HOUR:
        hourly = effective_hourly_cost(instance, marketspace, model, catalog)
        intervals.append(Interval(1, n, marketspace, False, n * hourly))
    else:
        fee = term_fee(instance, marketspace, catalog)
        period = marketspace.contract_period_hours
        start = 1
        while start <= n:
            end = min(start + period - 1, n)
            intervals.append(Interval(start, end, marketspace, False, fee))
            start = end + 1
    return Plan(vm_id, instance.name, n, tuple(intervals))


def plan_vm_no_migration(n: int, instance: InstanceType, catalog: Catalog,
                         model: CostModel, vm_id: str = "") -> Plan:
    """Cheapest plan that keeps the VM on a single marketspace throughout."""
    best: tuple | None = None
    for ms in MARKETSPACE_ORDER:
        if not catalog.has_price(instance, ms):
            continue
        try:
            total = single_marketspace_cost(ms, instance, n, catalog, model)
        except InfeasiblePlanError:
            continue
        key = (total, MARKETSPACE_RANK[ms])
        if best is None or key < best[0]:
            best = (key, ms)
    if best is None:
        raise InfeasiblePlanError(
            f"no marketspace can host {instance.name} for {n} h",
            instance=instance.name, n=n)
    return _single_marketspace_plan(best[1], instance, n, catalog, model, vm_id)


# --- greedy planner with migration ----------------------------------------------

def _chain_cost(span: int, hourly: Fraction, from_start: bool) -> Fraction:
    """Cost of covering ``span`` hours with chained 6-hour spot intervals.

    Every chain link after the first re-pays the overlap hour of its
    predecessor; a chain starting at hour 1 gets its first link without an
    entry overlap. If a migration follows the chain, that overlap is paid by
    the follower, not counted here.
    """
    if span < 1:
        raise ValueError("span must be positive")
    if from_start:
        links = 1 if span <= 6 else 1 + math.ceil((span - 6) / 5)
        decisions = span + links - 1
    else:
        links = math.ceil(span / 5)
        decisions = span + links
    return decisions * hourly


@dataclass(frozen=True)
class _Candidate:
    price: Fraction      # cost per productive hour, the greedy's sort key
    rank: int
    seq: int
    kind: str            # final | link | term | renewal
    marketspace: Marketspace
    cost: Fraction       # cost of the committed interval(s) for finals/terms

    def sort_key(self):
        return (self.price, self.rank, self.seq)


def plan_vm_with_migration(n: int, instance: InstanceType, catalog: Catalog,
                           model: CostModel, vm_id: str = "",
                           chain_lookahead: bool = True) -> Plan:
    """Greedy minimum-average-cost plan allowing marketspace migrations.

    At every decision point the planner prices, for each marketspace, the
    longest interval it can contribute (full contract period when a migration
    must follow, the whole remaining period otherwise) by its average cost
    per productive hour, and commits the cheapest. Reservation candidates are
    additionally compared against a chain of 6-hour spot intervals covering
    the same span (``chain_lookahead``), because a chain's last link escapes
    the migration surcharge that the per-link average assumes.

    After a reservation term ends, a seamless same-marketspace renewal (no
    overlap hour, one more fee) competes with migration to the other
    marketspaces.

    Single-marketspace plans are part of the search space, so the result is
    floored at the best of those: the average-cost heuristic can otherwise
    overcommit to a reservation term whose post-term remainder prices badly
    (for example two 1-year terms plus an expensive tail where one 3-year
    term would have covered everything).
    """
    if n < 1:
        raise ValueError("planning period must be at least one hour")
    prices = instance_prices(instance, catalog, model)

    intervals: list[Interval] = []
    covered = 0
    renewal_ms: Optional[Marketspace] = None

    def add_interval(start: int, end: int, ms: Marketspace, migrated: bool,
                     cost: Fraction):
        intervals.append(Interval(start, end, ms, migrated, cost))

    guard = 0
    while covered < n:
        guard += 1
        if guard > n + 10:
            raise AssertionError("planner failed to converge")
        at_start = covered == 0
        remaining = n - covered
        attach = 1 if at_start else covered
        cands: list[_Candidate] = []
        seq = 0

        def push(price, rank, kind, ms, cost=Fraction(0)):
            nonlocal seq
            cands.append(_Candidate(price, rank, seq, kind, ms, cost))
            seq += 1

        # Seamless renewal of the reservation that just expired.
        if renewal_ms is not None and renewal_ms in prices.fees:
            fee = prices.fees[renewal_ms]
            period = renewal_ms.contract_period_hours
            span = min(period, remaining)
            push(fee / span, MARKETSPACE_RANK[renewal_ms], "renewal", renewal_ms)

        for ms in MARKETSPACE_ORDER:
            rank = MARKETSPACE_RANK[ms]
            if ms in prices.hourly:
                hourly = prices.hourly[ms]
                if ms in (Marketspace.SM, Marketspace.ODM):
                    decisions = remaining + (0 if at_start else 1)
                    push(Fraction(decisions, remaining) * hourly, rank,
                         "final", ms, decisions * hourly)
                elif ms is Marketspace.H1SM:
                    if n == 1:
                        push(hourly, rank, "final", ms, hourly)
                elif ms is Marketspace.H6SM:
                    limit = 6 if at_start else 5
                    if remaining <= limit:
                        decisions = remaining + (0 if at_start else 1)
                        push(Fraction(decisions, remaining) * hourly, rank,
                             "final", ms, decisions * hourly)
                    else:
                        push(hourly + hourly / 5, rank, "link", ms)
                        if chain_lookahead and at_start:
                            # chain to the horizon: the first link has no
                            # entry overlap, so this can undercut the
                            # per-link average (mid-plan it never can)
                            cost = _chain_cost(remaining, hourly, True)
                            push(cost / remaining, rank, "link", ms)
            if ms in prices.fees:
                fee = prices.fees[ms]
                period = ms.contract_period_hours
                chain_spans = []
                limit = period if at_start else period - 1
                if remaining <= limit:
                    decisions = remaining + (0 if at_start else 1)
                    push(fee / remaining, rank, "final", ms, fee)
                    chain_spans.append((remaining, remaining))
                else:
                    # full term, migration follows; the fee spreads over the
                    # productive slots only
                    push(fee / (period - 1), rank, "term", ms)
                    span = period if at_start else period - 1
                    chain_spans.append((span, period - 1))
                if chain_lookahead and Marketspace.H6SM in prices.hourly:
                    h6 = prices.hourly[Marketspace.H6SM]
                    link_span = 6 if at_start else 5
                    for span, net in chain_spans:
                        if span <= link_span:
                            continue  # identical to the plain 6-hour candidate
                        cost = _chain_cost(span, h6, at_start)
                        push(cost / net, MARKETSPACE_RANK[Marketspace.H6SM],
                             "link", Marketspace.H6SM)

        if not cands:
            raise InfeasiblePlanError(
                f"no marketspace can continue hosting {instance.name} at "
                f"hour {covered + 1}", instance=instance.name, n=n)
        winner = min(cands, key=_Candidate.sort_key)

        if winner.kind == "final":
            add_interval(attach, n, winner.marketspace, not at_start, winner.cost)
            covered = n
            renewal_ms = None
        elif winner.kind == "link":
            h6 = prices.hourly[Marketspace.H6SM]
            if at_start:
                add_interval(1, 6, Marketspace.H6SM, False, 6 * h6)
                covered = 6
            else:
                add_interval(covered, covered + 5, Marketspace.H6SM, True, 6 * h6)
                covered += 5
            # Chain on: nothing gets cheaper than the per-link average until
            # fewer than six decision slots remain.
            while n - covered > 5:
                add_interval(covered, covered + 5, Marketspace.H6SM, True, 6 * h6)
                covered += 5
            renewal_ms = None
        elif winner.kind == "term":
            ms = winner.marketspace
            fee = prices.fees[ms]
            period = ms.contract_period_hours
            if at_start:
                add_interval(1, period, ms, False, fee)
                covered = period
            else:
                add_interval(covered, covered + period - 1, ms, True, fee)
                covered += period - 1
            renewal_ms = ms
        else:  # renewal
            ms = winner.marketspace
            fee = prices.fees[ms]
            period = ms.contract_period_hours
            end = covered + min(period, remaining)
            add_interval(covered + 1, end, ms, False, fee)
            covered = end
            renewal_ms = ms

    plan = Plan(vm_id, instance.name, n, tuple(intervals))
    try:
        baseline = plan_vm_no_migration(n, instance, catalog, model, vm_id)
    except InfeasiblePlanError:
        return plan
    return baseline if baseline.total_cost < plan.total_cost else plan


# --- portfolio-level planning ----------------------------------------------------

def plan_homogeneous(n: int, assignments: Sequence[tuple[str, InstanceType]],
                     catalog: Catalog, model: CostModel) -> PortfolioReport:
    """Cheapest portfolio with every VM on the same marketspace.

    A marketspace is a candidate only if it can host the whole portfolio for
    the whole period (bounded per-hour marketspaces within their contract
    period, every instance priced).
    """
    instances = {inst.name: inst for _, inst in assignments}
    multiplicity: dict[str, int] = {}
    for _, inst in assignments:
        multiplicity[inst.name] = multiplicity.get(inst.name, 0) + 1

    best: tuple | None = None
    for ms in MARKETSPACE_ORDER:
        total = Fraction(0)
        feasible = True
        for name, inst in instances.items():
            try:
                total += multiplicity[name] * single_marketspace_cost(
                    ms, inst, n, catalog, model)
            except (InfeasiblePlanError, NoPriceError):
                feasible = False
                break
        if feasible:
            key = (total, MARKETSPACE_RANK[ms])
            if best is None or key < best[0]:
                best = (key, ms)
    if best is None:
        raise InfeasiblePlanError(
            f"no single marketspace can host the portfolio for {n} h", n=n)
    ms = best[1]
    templates = {
        name: _single_marketspace_plan(ms, inst, n, catalog, model, "")
        for name, inst in instances.items()
    }
    plans = tuple(replace(templates[inst.name], vm_id=vm_id)
                  for vm_id, inst in assignments)
    report = aggregate(plans, Regime.HOMOGENEOUS)
    return replace(report, homogeneous_marketspace=ms)


def plan_portfolio(regime: Regime, n: int,
                   assignments: Sequence[tuple[str, InstanceType]],
                   catalog: Catalog, model: CostModel,
                   chain_lookahead: bool = True) -> PortfolioReport:
    """Plan every VM of a portfolio under one regime and aggregate.

    Identical instance types share one plan computation.
    """
    if regime is Regime.HOMOGENEOUS:
        return plan_homogeneous(n, assignments, catalog, model)
    instances = {inst.name: inst for _, inst in assignments}
    templates: dict[str, Plan] = {}
    for name, inst in instances.items():
        if regime is Regime.HETERO_WITH_MIGRATION:
            templates[name] = plan_vm_with_migration(
                n, inst, catalog, model, chain_lookahead=chain_lookahead)
        else:
            templates[name] = plan_vm_no_migration(n, inst, catalog, model)
    plans = tuple(replace(templates[inst.name], vm_id=vm_id)
                  for vm_id, inst in assignments)
    return aggregate(plans, regime)


def aggregate(plans: Sequence[Plan],
              regime: Regime = Regime.HETERO_WITH_MIGRATION) -> PortfolioReport:
    """Merge per-VM plans into totals and a per-hour composition timeline."""
    plans = tuple(plans)
    if not plans:
        return PortfolioReport(regime, 0, (), {}, Fraction(0), Fraction(0))
    n = plans[0].n
    for plan in plans:
        if plan.n != n:
            raise MixedHorizonsError(
                f"plan for {plan.vm_id!r} spans {plan.n} h, expected {n}")

    # Plans are routinely shared between VMs of the same instance type;
    # rasterize each distinct interval chain once, via difference arrays.
    groups: dict[tuple[Interval, ...], int] = {}
    for plan in plans:
        groups[plan.intervals] = groups.get(plan.intervals, 0) + 1

    deltas: dict[Marketspace, np.ndarray] = {}
    total = Fraction(0)
    for chain, count in groups.items():
        bounds: dict[Marketspace, list[tuple[int, int]]] = {}
        for iv in chain:
            bounds.setdefault(iv.marketspace, []).append((iv.start, iv.end))
        for ms, pairs in bounds.items():
            delta = deltas.get(ms)
            if delta is None:
                delta = np.zeros(n + 2, dtype=np.int64)
                deltas[ms] = delta
            arr = np.asarray(pairs, dtype=np.int64)
            np.add.at(delta, arr[:, 0], count)
            np.add.at(delta, arr[:, 1] + 1, -count)
        total += count * sum((iv.cost_usd for iv in chain), Fraction(0))
    timeline = {ms: np.cumsum(delta)[:n + 1] for ms, delta in deltas.items()}

    return PortfolioReport(
        regime=regime,
        n=n,
        plans=plans,
        timeline=timeline,
        total_usd=total,
        avg_usd_per_vm_hour=total / (n * len(plans)),
    )
