"""Exact minimum-cost planner and greedy-validation harness.

``dp_optimal`` solves the same planning problem as the greedy planner by
dynamic programming over every legal interval chain, in O(n * marketspaces)
using sliding-window minima for the reservation transitions. It is the ground
truth the greedy planner is validated against; ``brute_force_total``
re-derives the optimum by plain enumeration at desk scale to validate the DP
itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Optional, Sequence

from .catalog import (
    MARKETSPACE_ORDER,
    Catalog,
    CostModel,
    InstanceType,
    InterruptionBucket,
    Marketspace,
    PriceEntry,
    PricingMode,
    MICRO,
)
from .errors import HorizonTooLargeError, InfeasiblePlanError
from .optimizer import (
    Interval,
    Plan,
    instance_prices,
    plan_vm_with_migration,
)

__all__ = [
    "DEFAULT_ORACLE_CAP",
    "dp_optimal",
    "brute_force_total",
    "ValidationCase",
    "ValidationResult",
    "validate_greedy",
    "structured_suite",
    "random_suite",
    "single_instance_catalog",
]

DEFAULT_ORACLE_CAP = 2000
GAP_TOLERANCE = Fraction(1, 10**9)

_INF = math.inf

_UNBOUNDED = (Marketspace.SM, Marketspace.ODM)
_RESERVATIONS = (Marketspace.YR1M, Marketspace.YR3M)


class _WindowMin:
    """Sliding-window minimum over an append-only sequence of (index, value)."""

    def __init__(self):
        self._deque: list[tuple[float, int]] = []
        self._head = 0

    def push(self, index: int, value):
        if value == _INF:
            return
        while len(self._deque) > self._head and self._deque[-1][0] > value:
            self._deque.pop()
        self._deque.append((value, index))

    def min_from(self, lo: int) -> tuple[float, Optional[int]]:
        """Minimum among pushed entries with index >= lo."""
        while (len(self._deque) > self._head
               and self._deque[self._head][1] < lo):
            self._head += 1
        if len(self._deque) == self._head:
            return _INF, None
        value, index = self._deque[self._head]
        return value, index


def _integer_prices(instance: InstanceType, catalog: Catalog,
                    model: CostModel):
    """Exact prices rescaled to a common integer denominator."""
    prices = instance_prices(instance, catalog, model)
    denom = 1
    for value in list(prices.hourly.values()) + list(prices.fees.values()):
        denom = denom * value.denominator // math.gcd(denom, value.denominator)
    hourly = {ms: int(v * denom) for ms, v in prices.hourly.items()}
    fees = {ms: int(v * denom) for ms, v in prices.fees.items()}
    return hourly, fees, denom


def dp_optimal(n: int, instance: InstanceType, catalog: Catalog,
               model: CostModel, vm_id: str = "",
               cap: Optional[int] = DEFAULT_ORACLE_CAP) -> Plan:
    """Globally cheapest plan over all legal interval chains.

    Ties between marketspaces break in the same fixed order the greedy
    planner uses. ``cap`` guards against accidentally quadratic-size runs;
    pass a larger value (or ``None``) deliberately for year-scale checks.
    """
    if n < 1:
        raise ValueError("planning period must be at least one hour")
    if cap is not None and n > cap:
        raise HorizonTooLargeError(
            f"horizon {n} exceeds the oracle cap of {cap}", n=n, cap=cap)
    totals, backs, denom = _dp_tables(n, instance, catalog, model)
    return _reconstruct(n, instance, totals, backs, denom, vm_id)


def _dp_tables(n: int, instance: InstanceType, catalog: Catalog,
               model: CostModel):
    """Forward DP pass; ``dp[e]`` is the optimum for horizon ``e``, any e."""
    hourly, fees, denom = _integer_prices(instance, catalog, model)

    dp = [0] + [_INF] * n
    back_dp: list = [None] * (n + 1)

    open_val = {ms: [_INF] * (n + 1) for ms in _UNBOUNDED if ms in hourly}
    open_back = {ms: [None] * (n + 1) for ms in open_val}
    res_val = {ms: [_INF] * (n + 1) for ms in _RESERVATIONS if ms in fees}
    res_back = {ms: [None] * (n + 1) for ms in res_val}
    w_attach = {ms: _WindowMin() for ms in res_val}
    w_renew = {ms: _WindowMin() for ms in res_val}

    h6 = hourly.get(Marketspace.H6SM)
    h1 = hourly.get(Marketspace.H1SM)

    for e in range(1, n + 1):
        for ms in res_val:
            if e - 1 >= 1:
                w_attach[ms].push(e - 1, dp[e - 1])
                w_renew[ms].push(e - 1, res_val[ms][e - 1])

        best = _INF
        best_back = None
        for ms in MARKETSPACE_ORDER:
            if ms in open_val:
                c = hourly[ms]
                if e == 1:
                    value, src = c, "start"
                else:
                    ext = open_val[ms][e - 1] + c
                    att = dp[e - 1] + 2 * c
                    # prefer extending on ties; attaching same-marketspace
                    # intervals is never reconstructed
                    value, src = (ext, "extend") if ext <= att else (att, "attach")
                open_val[ms][e] = value
                open_back[ms][e] = src
                if value < best:
                    best, best_back = value, ("unb", ms)
            elif ms is Marketspace.H1SM and h1 is not None and e == 1:
                if h1 < best:
                    best, best_back = h1, ("h1",)
            elif ms is Marketspace.H6SM and h6 is not None:
                if e <= 6:
                    value = e * h6
                    if value < best:
                        best, best_back = value, ("h6s",)
                for d in range(1, 6):
                    a = e - d
                    if a < 1 or dp[a] == _INF:
                        continue
                    value = dp[a] + (d + 1) * h6
                    if value < best:
                        best, best_back = value, ("h6a", a)
            elif ms in res_val:
                fee = fees[ms]
                period = ms.contract_period_hours
                value, src = _INF, None
                if e <= period:
                    value, src = fee, ("start",)
                att, a = w_attach[ms].min_from(max(1, e - period + 1))
                if att + fee < value:
                    value, src = att + fee, ("attach", a)
                ren, a = w_renew[ms].min_from(max(1, e - period))
                if ren + fee < value:
                    value, src = ren + fee, ("renew", a)
                res_val[ms][e] = value
                res_back[ms][e] = src
                if value < best:
                    best, best_back = value, ("res", ms)

        dp[e] = best
        back_dp[e] = best_back

    if dp[n] == _INF:
        raise InfeasiblePlanError(
            f"no marketspace combination can host {instance.name} for {n} h",
            instance=instance.name, n=n)
    return (dp, open_val, open_back, res_val, res_back, hourly, fees), back_dp, denom


def _reconstruct(n: int, instance: InstanceType, tables, back_dp,
                 denom: int, vm_id: str) -> Plan:
    dp, open_val, open_back, res_val, res_back, hourly, fees = tables
    intervals: list[Interval] = []
    e = n
    while e > 0:
        tag = back_dp[e]
        if tag is None:
            raise AssertionError(f"no backpointer at horizon {e}")
        kind = tag[0]
        if kind == "unb":
            ms = tag[1]
            c = hourly[ms]
            s = e
            while open_back[ms][s] == "extend":
                s -= 1
            if open_back[ms][s] == "start":
                start, migrated, prev = 1, False, 0
            else:  # attach at s - 1
                start, migrated, prev = s - 1, True, s - 1
            dec = e - start + 1
            intervals.append(Interval(start, e, ms, migrated,
                                      Fraction(dec * c, denom)))
            e = prev
        elif kind == "res":
            ms = tag[1]
            fee = Fraction(fees[ms], denom)
            while True:
                src = res_back[ms][e]
                if src[0] == "start":
                    intervals.append(Interval(1, e, ms, False, fee))
                    e = 0
                    break
                if src[0] == "attach":
                    a = src[1]
                    intervals.append(Interval(a, e, ms, True, fee))
                    e = a
                    break
                a = src[1]  # renew
                intervals.append(Interval(a + 1, e, ms, False, fee))
                e = a
        elif kind == "h6a":
            a = tag[1]
            dec = e - a + 1
            intervals.append(Interval(a, e, Marketspace.H6SM, True,
                                      Fraction(dec * hourly[Marketspace.H6SM],
                                               denom)))
            e = a
        elif kind == "h6s":
            intervals.append(Interval(1, e, Marketspace.H6SM, False,
                                      Fraction(e * hourly[Marketspace.H6SM],
                                               denom)))
            e = 0
        elif kind == "h1":
            intervals.append(Interval(1, 1, Marketspace.H1SM, False,
                                      Fraction(hourly[Marketspace.H1SM], denom)))
            e = 0
        else:
            raise AssertionError(f"unknown backpointer {tag!r}")
    intervals.reverse()
    return Plan(vm_id, instance.name, n, tuple(intervals))


def brute_force_total(n: int, instance: InstanceType, catalog: Catalog,
                      model: CostModel) -> Fraction:
    """Minimum plan cost by exhaustive enumeration of interval chains.

    Exponential; intended for horizons up to roughly 14 hours as an
    independent check of the dynamic program.
    """
    prices = instance_prices(instance, catalog, model)
    hourly, fees = prices.hourly, prices.fees
    best: list = [None]

    def visit(covered: int, last_ms: Optional[Marketspace], cost: Fraction):
        if best[0] is not None and cost >= best[0]:
            return
        if covered == n:
            best[0] = cost
            return
        at_start = covered == 0
        attach = 1 if at_start else covered
        for ms, c in hourly.items():
            if ms in _UNBOUNDED:
                if ms is last_ms:
                    continue  # adjacent same-marketspace intervals must merge
                for end in range(covered + 1, n + 1):
                    visit(end, ms, cost + (end - attach + 1) * c)
            elif ms is Marketspace.H1SM:
                if at_start:
                    visit(1, ms, cost + c)  # one-hour lifetime, no migrations
            else:  # 6-hour spot
                for end in range(covered + 1, min(n, attach + 5) + 1):
                    visit(end, ms, cost + (end - attach + 1) * c)
        for ms, fee in fees.items():
            period = ms.contract_period_hours
            for end in range(covered + 1, min(n, attach + period - 1) + 1):
                visit(end, ms, cost + fee)
            if ms is last_ms:  # seamless renewal
                for end in range(covered + 1, min(n, covered + period) + 1):
                    visit(end, ms, cost + fee)

    visit(0, None, Fraction(0))
    if best[0] is None:
        raise InfeasiblePlanError(
            f"no marketspace combination can host {instance.name} for {n} h")
    return best[0]


# --- validation harness ----------------------------------------------------------

@dataclass(frozen=True)
class ValidationCase:
    case_id: str
    n: int
    instance: InstanceType
    catalog: Catalog
    model: CostModel
    seed: int = 0


@dataclass(frozen=True)
class ValidationResult:
    case_id: str
    n: int
    seed: int
    greedy_total: Fraction
    dp_total: Fraction
    rel_gap: Fraction

    @property
    def mismatch(self) -> bool:
        return self.rel_gap > GAP_TOLERANCE


def validate_greedy(cases: Sequence[ValidationCase],
                    cap: Optional[int] = DEFAULT_ORACLE_CAP,
                    chain_lookahead: bool = True) -> list[ValidationResult]:
    """Run greedy and exact planner on every case and report the gaps.

    Cases sharing the same catalog/model/instance objects share one DP pass.
    Gaps are findings, not errors.
    """
    for case in cases:
        if cap is not None and case.n > cap:
            raise HorizonTooLargeError(
                f"case {case.case_id}: horizon {case.n} exceeds the oracle "
                f"cap of {cap}", case=case.case_id, n=case.n, cap=cap)

    groups: dict[tuple[int, int, int], list[ValidationCase]] = {}
    order: list[tuple[int, int, int]] = []
    for case in cases:
        key = (id(case.catalog), id(case.model), id(case.instance))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(case)

    by_id: dict[str, ValidationResult] = {}
    for key in order:
        block = groups[key]
        n_max = max(c.n for c in block)
        tables, _, denom = _dp_tables(n_max, block[0].instance,
                                      block[0].catalog, block[0].model)
        dp = tables[0]
        for case in block:
            greedy = plan_vm_with_migration(
                case.n, case.instance, case.catalog, case.model,
                chain_lookahead=chain_lookahead).total_cost
            exact = Fraction(dp[case.n], denom) if dp[case.n] != _INF else None
            if exact is None:
                raise InfeasiblePlanError(
                    f"case {case.case_id}: exact planner found no plan")
            if exact == 0:
                gap = Fraction(0) if greedy == 0 else Fraction(10**18)
            else:
                gap = (greedy - exact) / exact
            by_id[case.case_id] = ValidationResult(
                case.case_id, case.n, case.seed, greedy, exact, gap)
    return [by_id[c.case_id] for c in cases]


# --- synthetic catalogs and suites -----------------------------------------------

def single_instance_catalog(
        hourly_usd: dict[Marketspace, Fraction],
        fees_usd: dict[Marketspace, Fraction],
        name: str = "synthetic.unit",
        bucket: InterruptionBucket = InterruptionBucket.LT5) -> Catalog:
    """Catalog with one instance type and one default price per marketspace."""
    instance = InstanceType(name, 1, 1000.0, 1.0, bucket)
    entries = []
    for ms, usd in hourly_usd.items():
        entries.append(PriceEntry(name, ms, "default",
                                  int(Fraction(usd) * MICRO),
                                  PricingMode.PER_HOUR))
    for ms, usd in fees_usd.items():
        entries.append(PriceEntry(name, ms, "default",
                                  int(Fraction(usd) * MICRO),
                                  PricingMode.PER_TERM_FEE))
    return Catalog([instance], entries)


DEFAULT_SUITE_PERIODS = tuple(range(1, 49)) + (100, 500, 2000)


def _micro_between(rng: Random, lo: Fraction, hi: Fraction) -> Fraction:
    lo_m, hi_m = int(lo * MICRO), int(hi * MICRO)
    return Fraction(rng.randint(min(lo_m, hi_m), max(lo_m, hi_m)), MICRO)


def structured_suite(count: int, seed: int,
                     periods: Sequence[int] = DEFAULT_SUITE_PERIODS
                     ) -> list[ValidationCase]:
    """Catalogs whose price ordering mirrors the real market.

    Spot is the cheapest hourly channel, on-demand the most expensive, the
    two fixed-lifetime spot channels sit in between, and reservations are the
    cheapest amortized (a three-year term costing between two and three
    one-year terms). Penalties are zero.
    """
    rng = Random(seed)
    cases: list[ValidationCase] = []
    model = CostModel(penalty_usd=0)
    for i in range(count):
        odm = _micro_between(rng, Fraction(1, 20), Fraction(5))
        sm = _micro_between(rng, odm * Fraction(20, 100), odm * Fraction(40, 100))
        h1 = _micro_between(rng, odm * Fraction(45, 100), odm * Fraction(55, 100))
        h6 = _micro_between(rng, odm * Fraction(60, 100), odm * Fraction(75, 100))
        amort1 = _micro_between(rng, sm * Fraction(20, 100), sm * Fraction(95, 100))
        fee1 = amort1 * 8760
        fee3 = _micro_between(rng, fee1 * 2, fee1 * Fraction(29, 10))
        catalog = single_instance_catalog(
            {Marketspace.SM: sm, Marketspace.ODM: odm,
             Marketspace.H1SM: h1, Marketspace.H6SM: h6},
            {Marketspace.YR1M: fee1, Marketspace.YR3M: fee3},
        )
        instance = catalog.instance("synthetic.unit")
        for n in periods:
            cases.append(ValidationCase(
                f"structured-{seed}-{i}-n{n}", n, instance, catalog, model,
                seed=seed))
    return cases


def random_suite(count: int, seed: int, max_n: int = 200
                 ) -> list[ValidationCase]:
    """Adversarial random prices; greedy gaps here are findings to report."""
    rng = Random(seed)
    cases: list[ValidationCase] = []
    model = CostModel(penalty_usd=0)
    for i in range(count):
        hourly = {
            ms: _micro_between(rng, Fraction(1, 100), Fraction(2))
            for ms in (Marketspace.SM, Marketspace.ODM, Marketspace.H1SM,
                       Marketspace.H6SM)
        }
        fees = {
            Marketspace.YR1M: _micro_between(rng, Fraction(1), Fraction(20000)),
            Marketspace.YR3M: _micro_between(rng, Fraction(1), Fraction(60000)),
        }
        catalog = single_instance_catalog(hourly, fees)
        instance = catalog.instance("synthetic.unit")
        n = rng.randint(1, max_n)
        cases.append(ValidationCase(
            f"random-{seed}-{i}-n{n}", n, instance, catalog, model, seed=seed))
    return cases
