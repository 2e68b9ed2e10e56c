import random
from fractions import Fraction

import pytest

from cloudfolio.catalog import Marketspace
from cloudfolio.errors import (
    EmptyDistributionError,
    NoFeasibleTypeError,
    SingleClassError,
)
from cloudfolio.mapping import (
    TypeDistribution,
    gini,
    map_portfolio,
    match_instance,
)
from cloudfolio.oracle import single_instance_catalog
from cloudfolio.trace import RequirementMode, VmRequirement


def req(cpu, mem, mode=RequirementMode.REQUESTED, vm="vm"):
    return VmRequirement(vm, cpu, mem, mode)


def gini_mad(counts):
    """Independent oracle: mean absolute difference over the count vector."""
    q = len(counts)
    mean = sum(counts) / q
    mad = sum(abs(a - b) for a in counts for b in counts)
    return mad / (2 * q * q * mean)


def test_match_paper_flagship_request(sample_catalog):
    result = match_instance(req(11704.0, 64.0), sample_catalog)
    assert result.instance_type == "r5.4xlarge"


def test_match_zero_requirement_cheapest_overall(sample_catalog):
    result = match_instance(req(0.0, 0.0), sample_catalog)
    assert result.instance_type == "t3.nano"


def test_match_infeasible(sample_catalog):
    with pytest.raises(NoFeasibleTypeError):
        match_instance(req(1e9, 1e6), sample_catalog)


def test_match_cheapest_feasible_brute_force(sample_catalog):
    rng = random.Random(42)
    basis = Marketspace.ODM
    for _ in range(200):
        r = req(rng.uniform(0, 300000), rng.uniform(0, 4000))
        try:
            chosen = match_instance(r, sample_catalog, basis)
        except NoFeasibleTypeError:
            feasible = [t for t in sample_catalog.instance_types
                        if t.total_cpu_mhz >= r.cpu_mhz
                        and t.memory_gib >= r.memory_gib]
            assert not feasible
            continue
        inst = sample_catalog.instance(chosen.instance_type)
        assert inst.total_cpu_mhz >= r.cpu_mhz
        assert inst.memory_gib >= r.memory_gib
        for other in sample_catalog.instance_types:
            if (other.total_cpu_mhz >= r.cpu_mhz
                    and other.memory_gib >= r.memory_gib):
                assert sample_catalog.min_price(other, basis) \
                    >= chosen.reference_hourly_price


def test_match_deterministic_tie_break():
    catalog = single_instance_catalog({Marketspace.ODM: Fraction(1, 10)}, {})
    # two equally priced feasible types: smaller memory must win
    from cloudfolio.catalog import Catalog, InstanceType, PriceEntry, PricingMode
    from cloudfolio.catalog import InterruptionBucket
    types = [
        InstanceType("b.big", 4, 1000.0, 32.0, InterruptionBucket.LT5),
        InstanceType("a.small", 4, 1000.0, 16.0, InterruptionBucket.LT5),
    ]
    entries = [PriceEntry(t.name, Marketspace.ODM, "default", 100000,
                          PricingMode.PER_HOUR) for t in types]
    catalog = Catalog(types, entries)
    result = match_instance(req(500.0, 8.0), catalog)
    assert result.instance_type == "a.small"


def test_map_portfolio_downgrade_flags(sample_catalog):
    reqs = [
        # oversized: requested a monster, used a sliver
        req(150000.0, 700.0, RequirementMode.REQUESTED, "vm-big"),
        req(100.0, 0.2, RequirementMode.MAX_UTILIZATION, "vm-big"),
        # right-sized: identical requirements in both modes
        req(4000.0, 3.0, RequirementMode.REQUESTED, "vm-fit"),
        req(4000.0, 3.0, RequirementMode.MAX_UTILIZATION, "vm-fit"),
    ]
    mapping = map_portfolio(reqs, sample_catalog)
    assert mapping.downgraded == ("vm-big",)
    assert mapping.downgrade_share == 0.5
    fit_req, fit_max = [
        [r for r in mapping.results[m] if r.vm_id == "vm-fit"][0]
        for m in RequirementMode
    ]
    assert fit_req.instance_type == fit_max.instance_type


def test_map_portfolio_delta_zero_for_stable_type(sample_catalog):
    reqs = []
    for i in range(3):
        reqs.append(req(100.0, 0.4, RequirementMode.REQUESTED, f"vm{i}"))
        reqs.append(req(100.0, 0.4, RequirementMode.MAX_UTILIZATION, f"vm{i}"))
    mapping = map_portfolio(reqs, sample_catalog)
    assert mapping.delta == {"t3.nano": 0}
    assert mapping.downgraded == ()


def test_map_portfolio_price_dominance(sample_catalog):
    rng = random.Random(5)
    reqs = []
    for i in range(30):
        cpu = rng.uniform(0, 100000)
        mem = rng.uniform(0, 700)
        reqs.append(req(cpu, mem, RequirementMode.REQUESTED, f"vm{i:02d}"))
        reqs.append(req(cpu * rng.random(), mem * rng.random(),
                        RequirementMode.MAX_UTILIZATION, f"vm{i:02d}"))
    mapping = map_portfolio(reqs, sample_catalog)
    by_vm = {m: {r.vm_id: r for r in mapping.results[m]}
             for m in RequirementMode}
    for vm_id, res in by_vm[RequirementMode.MAX_UTILIZATION].items():
        assert res.reference_hourly_price <= \
            by_vm[RequirementMode.REQUESTED][vm_id].reference_hourly_price


def test_gini_equal_distribution():
    result = gini(TypeDistribution({"a": 10, "b": 10, "c": 10, "d": 10}))
    assert result.raw == 0.0
    assert result.corrected == 0.0


def test_gini_full_concentration_with_declared_zeros():
    result = gini(TypeDistribution({"a": 0, "b": 0, "c": 0, "d": 0, "e": 100}))
    assert result.raw == pytest.approx(4 / 5)
    assert result.corrected == 1.0


def test_gini_two_class_hand_value():
    # counts {1, 3}: shares (1/4, 3/4), k = (1/2, 1);
    # raw = (0 + 1/2) * 1/4 + (1/2 + 1) * 3/4 - 1 = 1/4
    result = gini(TypeDistribution({"a": 1, "b": 3}))
    assert result.raw == pytest.approx(0.25)
    assert result.corrected == pytest.approx(0.5)
    assert result.raw == pytest.approx(gini_mad([1, 3]))


def test_gini_matches_mean_absolute_difference_oracle():
    rng = random.Random(11)
    for _ in range(50):
        q = rng.randint(2, 12)
        counts = [rng.randint(0, 40) for _ in range(q)]
        if sum(counts) == 0:
            counts[0] = 1
        dist = TypeDistribution({f"t{i}": c for i, c in enumerate(counts)})
        assert gini(dist).raw == pytest.approx(gini_mad(counts), abs=1e-12)


def test_gini_scale_invariance():
    rng = random.Random(13)
    for _ in range(20):
        counts = {f"t{i}": rng.randint(1, 30) for i in range(rng.randint(2, 8))}
        scaled = {k: v * 10 for k, v in counts.items()}
        a = gini(TypeDistribution(counts))
        b = gini(TypeDistribution(scaled))
        assert a.raw == b.raw and a.corrected == b.corrected


def test_gini_errors():
    with pytest.raises(EmptyDistributionError):
        gini(TypeDistribution({}))
    with pytest.raises(EmptyDistributionError):
        gini(TypeDistribution({"a": 0}))
    with pytest.raises(SingleClassError):
        gini(TypeDistribution({"a": 5}))


def test_gini_bounds_random():
    rng = random.Random(17)
    for _ in range(50):
        counts = {f"t{i}": rng.randint(0, 50)
                  for i in range(rng.randint(2, 10))}
        if sum(counts.values()) == 0:
            counts["t0"] = 1
        result = gini(TypeDistribution(counts))
        assert 0 <= result.raw <= 1
        assert 0 <= result.corrected <= 1
