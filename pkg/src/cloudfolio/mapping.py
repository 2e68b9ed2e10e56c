"""Requirement-to-instance-type matching and portfolio concentration stats."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .catalog import Catalog, InstanceType, Marketspace
from .errors import EmptyDistributionError, NoFeasibleTypeError, SingleClassError
from .trace import RequirementMode, VmRequirement

__all__ = [
    "MappingResult",
    "TypeDistribution",
    "PortfolioMapping",
    "GiniResult",
    "match_instance",
    "map_portfolio",
    "gini",
]


@dataclass(frozen=True)
class MappingResult:
    vm_id: str
    mode: RequirementMode
    instance_type: str
    reference_hourly_price: Fraction


@dataclass(frozen=True)
class TypeDistribution:
    """How many VMs landed on each instance type."""

    counts: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(self.counts))
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class GiniResult:
    raw: float
    corrected: float


@dataclass(frozen=True)
class PortfolioMapping:
    """Mapping of a whole portfolio in both requirement modes."""

    results: Mapping[RequirementMode, tuple[MappingResult, ...]]
    distributions: Mapping[RequirementMode, TypeDistribution]
    downgraded: tuple[str, ...]  # vm_ids whose max-utilization mapping is cheaper
    delta: Mapping[str, int]     # per-type |requested - max_utilization| count

    @property
    def downgrade_share(self) -> float:
        n = len(self.results[RequirementMode.REQUESTED])
        return len(self.downgraded) / n if n else 0.0


def match_instance(req: VmRequirement, catalog: Catalog,
                   price_basis: Marketspace = Marketspace.ODM) -> MappingResult:
    """Cheapest instance type that covers the requirement.

    Feasibility means total CPU MHz and memory GiB both at least the
    requirement. "Cheapest" is judged on the cheapest payment variant of
    ``price_basis``; instance types without a price there are not candidates.
    Equal-priced candidates tie-break on smaller memory, then smaller CPU,
    then name.
    """
    best: tuple | None = None
    for itype in catalog.instance_types:
        if itype.total_cpu_mhz < req.cpu_mhz or itype.memory_gib < req.memory_gib:
            continue
        if not catalog.has_price(itype, price_basis):
            continue
        price = catalog.min_price(itype, price_basis)
        key = (price, itype.memory_gib, itype.total_cpu_mhz, itype.name)
        if best is None or key < best[0]:
            best = (key, itype, price)
    if best is None:
        raise NoFeasibleTypeError(
            f"no instance type covers cpu={req.cpu_mhz} MHz, "
            f"memory={req.memory_gib} GiB", vm_id=req.vm_id)
    _, itype, price = best
    return MappingResult(req.vm_id, req.mode, itype.name, price)


def map_portfolio(requirements: Sequence[VmRequirement], catalog: Catalog,
                  price_basis: Marketspace = Marketspace.ODM) -> PortfolioMapping:
    """Map every VM in both modes and compare the two resulting portfolios.

    ``requirements`` must contain, for each vm_id, one REQUESTED and one
    MAX_UTILIZATION entry. A VM counts as downgraded when its max-utilization
    mapping is strictly cheaper than its requested mapping.
    """
    by_vm: dict[str, dict[RequirementMode, VmRequirement]] = {}
    for req in requirements:
        by_vm.setdefault(req.vm_id, {})[req.mode] = req
    for vm_id, modes in by_vm.items():
        if len(modes) != 2:
            raise ValueError(f"vm {vm_id!r} lacks one of the two modes")

    results: dict[RequirementMode, list[MappingResult]] = {
        RequirementMode.REQUESTED: [],
        RequirementMode.MAX_UTILIZATION: [],
    }
    downgraded: list[str] = []
    for vm_id in sorted(by_vm):
        pair = {}
        for mode, req in by_vm[vm_id].items():
            pair[mode] = match_instance(req, catalog, price_basis)
            results[mode].append(pair[mode])
        if (pair[RequirementMode.MAX_UTILIZATION].reference_hourly_price
                < pair[RequirementMode.REQUESTED].reference_hourly_price):
            downgraded.append(vm_id)

    distributions = {}
    for mode, mapped in results.items():
        counts: dict[str, int] = {}
        for res in mapped:
            counts[res.instance_type] = counts.get(res.instance_type, 0) + 1
        distributions[mode] = TypeDistribution(counts)

    names = set(distributions[RequirementMode.REQUESTED].counts)
    names |= set(distributions[RequirementMode.MAX_UTILIZATION].counts)
    delta = {
        name: abs(
            distributions[RequirementMode.REQUESTED].counts.get(name, 0)
            - distributions[RequirementMode.MAX_UTILIZATION].counts.get(name, 0))
        for name in sorted(names)
    }

    return PortfolioMapping(
        results={mode: tuple(res) for mode, res in results.items()},
        distributions=distributions,
        downgraded=tuple(downgraded),
        delta=delta,
    )


def gini(dist: TypeDistribution) -> GiniResult:
    """Concentration of a type distribution: 0 = uniform, 1 = single type.

    Classes are the distribution's declared types (zero counts included),
    sorted by ascending share. The raw index is
    ``sum((k[i-1] + k[i]) * s[i]) - 1`` with ``k[i] = i / q`` the cumulative
    class share and ``s[i]`` the VM share of class ``i``; the corrected index
    rescales by ``q / (q - 1)``. Exact rational arithmetic throughout.
    """
    counts = sorted(dist.counts.values())
    q = len(counts)
    total = sum(counts)
    if q == 0 or total == 0:
        raise EmptyDistributionError("distribution has no virtual machines")
    raw = Fraction(0)
    for i, count in enumerate(counts, start=1):
        k_prev = Fraction(i - 1, q)
        k_cur = Fraction(i, q)
        raw += (k_prev + k_cur) * Fraction(count, total)
    raw -= 1
    if q == 1:
        raise SingleClassError(
            "corrected index undefined for a single instance type")
    corrected = raw * Fraction(q, q - 1)
    corrected = min(max(corrected, Fraction(0)), Fraction(1))
    return GiniResult(float(raw), float(corrected))
