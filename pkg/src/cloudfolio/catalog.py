"""Marketspace and instance-type data model, catalog loading, hourly cost model.

Six marketspaces trade virtual machines. Two of them (spot, on-demand) host a
VM for as long as you keep paying per hour; the 1-hour and 6-hour spot
marketspaces bill per hour but terminate the VM after a fixed contract period;
the 1-year and 3-year reservation marketspaces charge one fee for the whole
term. Spot VMs can additionally be reclaimed at any time, which the cost model
prices as an expected hourly penalty derived from the published interruption
frequency of the instance type.

All monetary amounts are handled exactly: catalog prices are micro-USD
integers and derived hourly costs are `fractions.Fraction` values in USD, so
cost comparisons between marketspaces are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .errors import (
    DanglingReferenceError,
    DuplicateEntryError,
    MissingFileError,
    NoPriceError,
    SchemaViolationError,
)

__all__ = [
    "Marketspace",
    "MARKETSPACE_ORDER",
    "PricingMode",
    "InterruptionBucket",
    "InstanceType",
    "PriceEntry",
    "CostModel",
    "Catalog",
    "load_catalog",
    "penalty_per_hour",
    "effective_hourly_cost",
    "term_fee",
    "sample_catalog_path",
]

MICRO = 1_000_000

NumberLike = Union[int, float, str, Decimal, Fraction]


class PricingMode(Enum):
    PER_HOUR = "per_hour"
    PER_TERM_FEE = "per_term"


class Marketspace(Enum):
    """The six purchasing channels, with their contract characteristics.

    ``contract_period_hours`` is ``None`` for the two unbounded marketspaces.
    Only the spot marketspace is interruptible.
    """

    SM = ("SM", None, PricingMode.PER_HOUR, True)
    H1SM = ("1HSM", 1, PricingMode.PER_HOUR, False)
    H6SM = ("6HSM", 6, PricingMode.PER_HOUR, False)
    ODM = ("ODM", None, PricingMode.PER_HOUR, False)
    YR1M = ("1YRM", 365 * 24, PricingMode.PER_TERM_FEE, False)
    YR3M = ("3YRM", 365 * 24 * 3, PricingMode.PER_TERM_FEE, False)

    def __init__(self, token: str, period: Optional[int], mode: PricingMode,
                 interruptible: bool):
        self.token = token
        self.contract_period_hours = period
        self.pricing_mode = mode
        self.interruptible = interruptible

    @property
    def bounded(self) -> bool:
        return self.contract_period_hours is not None

    @classmethod
    def from_token(cls, token: str) -> "Marketspace":
        for ms in cls:
            if ms.token == token or ms.name == token:
                return ms
        raise KeyError(token)


# Deterministic preference order used to break cost ties everywhere.
MARKETSPACE_ORDER = (
    Marketspace.SM,
    Marketspace.H1SM,
    Marketspace.H6SM,
    Marketspace.ODM,
    Marketspace.YR1M,
    Marketspace.YR3M,
)

MARKETSPACE_RANK = {ms: i for i, ms in enumerate(MARKETSPACE_ORDER)}


class InterruptionBucket(Enum):
    """Published monthly reclaim-frequency ranges of the spot marketspace."""

    LT5 = "<5%"
    B5_10 = "5-10%"
    B10_15 = "10-15%"
    B15_20 = "15-20%"
    GT20 = ">20%"

    @classmethod
    def from_token(cls, token: str) -> "InterruptionBucket":
        for bucket in cls:
            if bucket.value == token or bucket.name == token:
                return bucket
        raise KeyError(token)


@dataclass(frozen=True)
class InstanceType:
    """A purchasable VM configuration."""

    name: str
    vcpu: int
    clock_mhz_per_vcpu: float
    memory_gib: float
    interruption_bucket: InterruptionBucket

    def __post_init__(self):
        if self.vcpu <= 0:
            raise ValueError(f"{self.name}: vcpu must be positive")
        if self.clock_mhz_per_vcpu <= 0 or self.memory_gib <= 0:
            raise ValueError(f"{self.name}: clock and memory must be positive")

    @property
    def total_cpu_mhz(self) -> float:
        return self.vcpu * self.clock_mhz_per_vcpu


@dataclass(frozen=True)
class PriceEntry:
    """Price of one instance type on one marketspace, for one payment variant."""

    instance_type: str
    marketspace: Marketspace
    variant: str
    amount_micro_usd: int
    unit: PricingMode

    def __post_init__(self):
        if self.amount_micro_usd < 0:
            raise ValueError("price amounts must be non-negative")
        if self.unit is not self.marketspace.pricing_mode:
            raise ValueError(
                f"unit {self.unit.value} inconsistent with marketspace "
                f"{self.marketspace.token}"
            )

    @property
    def amount_usd(self) -> Fraction:
        return Fraction(self.amount_micro_usd, MICRO)


def _to_fraction(value: NumberLike, what: str) -> Fraction:
    """Convert a user-supplied number to an exact Fraction.

    Floats go through their shortest decimal repr so that 0.05 means 1/20,
    not the binary float closest to it.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    try:
        if isinstance(value, float):
            return Fraction(Decimal(repr(value)))
        return Fraction(Decimal(value))
    except (InvalidOperation, ValueError) as exc:
        raise ValueError(f"cannot interpret {what}={value!r} as a number") from exc


DEFAULT_BUCKET_RATES: Mapping[InterruptionBucket, Fraction] = {
    InterruptionBucket.LT5: Fraction(5, 100),
    InterruptionBucket.B5_10: Fraction(10, 100),
    InterruptionBucket.B10_15: Fraction(15, 100),
    InterruptionBucket.B15_20: Fraction(20, 100),
    InterruptionBucket.GT20: Fraction(25, 100),
}


@dataclass(frozen=True)
class CostModel:
    """Spot-interruption penalty model.

    ``penalty_usd`` is the cost the business attaches to one interruption.
    ``bucket_rate`` maps each interruption bucket to a representative monthly
    arrival rate; the hourly rate spreads it uniformly over
    ``hours_per_month``.
    """

    penalty_usd: Fraction = Fraction(0)
    bucket_rate: Mapping[InterruptionBucket, Fraction] = field(
        default_factory=lambda: dict(DEFAULT_BUCKET_RATES)
    )
    hours_per_month: int = 720

    def __post_init__(self):
        object.__setattr__(self, "penalty_usd",
                           _to_fraction(self.penalty_usd, "penalty_usd"))
        rates = {
            bucket: _to_fraction(rate, f"bucket_rate[{bucket.name}]")
            for bucket, rate in self.bucket_rate.items()
        }
        for bucket, rate in rates.items():
            if not 0 <= rate <= 1:
                raise ValueError(f"bucket rate {bucket.name}={rate} outside [0, 1]")
        object.__setattr__(self, "bucket_rate", rates)
        if self.penalty_usd < 0:
            raise ValueError("penalty_usd must be non-negative")
        if self.hours_per_month <= 0:
            raise ValueError("hours_per_month must be positive")

    def hourly_rate(self, bucket: InterruptionBucket) -> Fraction:
        return self.bucket_rate[bucket] / self.hours_per_month


class Catalog:
    """Immutable collection of instance types and their price entries."""

    def __init__(self, instance_types: Iterable[InstanceType],
                 prices: Iterable[PriceEntry]):
        self._types: dict[str, InstanceType] = {}
        for itype in instance_types:
            if itype.name in self._types:
                raise DuplicateEntryError(
                    f"duplicate instance type {itype.name!r}", name=itype.name)
            self._types[itype.name] = itype

        self._prices: dict[tuple[str, Marketspace], list[PriceEntry]] = {}
        seen: set[tuple[str, Marketspace, str]] = set()
        for entry in prices:
            if entry.instance_type not in self._types:
                raise DanglingReferenceError(
                    f"price entry references undeclared instance type "
                    f"{entry.instance_type!r}", name=entry.instance_type)
            key = (entry.instance_type, entry.marketspace, entry.variant)
            if key in seen:
                raise DuplicateEntryError(
                    f"duplicate price entry {key}", key=key)
            seen.add(key)
            self._prices.setdefault(
                (entry.instance_type, entry.marketspace), []).append(entry)

    @property
    def instance_types(self) -> tuple[InstanceType, ...]:
        return tuple(self._types.values())

    def instance(self, name: str) -> InstanceType:
        try:
            return self._types[name]
        except KeyError:
            raise DanglingReferenceError(f"unknown instance type {name!r}",
                                         name=name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._types

    def __len__(self) -> int:
        return len(self._types)

    def entries(self, instance: Union[str, InstanceType],
                marketspace: Marketspace) -> tuple[PriceEntry, ...]:
        name = instance if isinstance(instance, str) else instance.name
        return tuple(self._prices.get((name, marketspace), ()))

    def has_price(self, instance: Union[str, InstanceType],
                  marketspace: Marketspace) -> bool:
        return bool(self.entries(instance, marketspace))

    def min_price(self, instance: Union[str, InstanceType],
                  marketspace: Marketspace) -> Fraction:
        """Cheapest payment variant for the pair, in USD."""
        entries = self.entries(instance, marketspace)
        name = instance if isinstance(instance, str) else instance.name
        if not entries:
            raise NoPriceError(
                f"no price for {name} on {marketspace.token}",
                instance=name, marketspace=marketspace.token)
        return min(e.amount_usd for e in entries)


# --- cost model operations ---------------------------------------------------

def penalty_per_hour(instance: InstanceType, model: CostModel) -> Fraction:
    """Expected interruption cost per hour: hourly arrival rate times penalty."""
    return model.hourly_rate(instance.interruption_bucket) * model.penalty_usd


def effective_hourly_cost(instance: InstanceType, marketspace: Marketspace,
                          model: CostModel, catalog: Catalog) -> Fraction:
    """Hourly cost of hosting on a per-hour marketspace.

    The cheapest payment variant is used. Interruptible marketspaces add the
    expected penalty; all others return the raw price.
    """
    if marketspace.pricing_mode is not PricingMode.PER_HOUR:
        raise ValueError(f"{marketspace.token} is not priced per hour")
    price = catalog.min_price(instance, marketspace)
    if marketspace.interruptible:
        return price + penalty_per_hour(instance, model)
    return price


def term_fee(instance: InstanceType, marketspace: Marketspace,
             catalog: Catalog) -> Fraction:
    """Cheapest term fee across payment variants for a reservation marketspace."""
    if marketspace.pricing_mode is not PricingMode.PER_TERM_FEE:
        raise ValueError(f"{marketspace.token} is not fee-priced")
    return catalog.min_price(instance, marketspace)


# --- catalog file loading ----------------------------------------------------

_TYPE_FIELDS = ("name", "vcpu", "clock_mhz_per_vcpu", "memory_gib",
                "interruption_bucket")
_PRICE_FIELDS = ("instance_type", "marketspace", "variant", "unit",
                 "amount_usd")


def _parse_amount_micro(text: str, path: str, lineno: int) -> int:
    try:
        amount = Decimal(text)
    except InvalidOperation:
        raise SchemaViolationError(
            f"{path}:{lineno}: amount_usd {text!r} is not a decimal number",
            line=lineno, field="amount_usd")
    scaled = amount * MICRO
    if scaled != scaled.to_integral_value():
        raise SchemaViolationError(
            f"{path}:{lineno}: amount_usd {text!r} has sub-micro-USD precision",
            line=lineno, field="amount_usd")
    if scaled < 0:
        raise SchemaViolationError(
            f"{path}:{lineno}: amount_usd must be non-negative",
            line=lineno, field="amount_usd")
    return int(scaled)


def load_catalog(path: Union[str, Path]) -> Catalog:
    """Load and validate a catalog file.

    The file has two sections. ``[instance_types]`` declares one type per
    line (name, vcpu, clock MHz per vCPU, memory GiB, interruption bucket);
    ``[prices]`` declares one price entry per line (instance type,
    marketspace token, payment variant, unit, decimal USD amount). Tokens are
    whitespace-separated; ``#`` starts a comment.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"catalog file not found: {path}", path=str(path))

    types: list[InstanceType] = []
    prices: list[PriceEntry] = []
    section = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("instance_types", "prices"):
                raise SchemaViolationError(
                    f"{path}:{lineno}: unknown section {section!r}", line=lineno)
            continue
        if section == "instance_types":
            types.append(_parse_type_line(line, str(path), lineno))
        elif section == "prices":
            prices.append(_parse_price_line(line, str(path), lineno))
        else:
            raise SchemaViolationError(
                f"{path}:{lineno}: record outside of any section", line=lineno)

    return Catalog(types, prices)


def _parse_type_line(line: str, path: str, lineno: int) -> InstanceType:
    tokens = line.split()
    if len(tokens) != len(_TYPE_FIELDS):
        raise SchemaViolationError(
            f"{path}:{lineno}: expected {len(_TYPE_FIELDS)} fields "
            f"{_TYPE_FIELDS}, got {len(tokens)}", line=lineno)
    name, vcpu, clock, memory, bucket = tokens
    try:
        vcpu_i = int(vcpu)
    except ValueError:
        raise SchemaViolationError(f"{path}:{lineno}: vcpu {vcpu!r} is not an "
                                   "integer", line=lineno, field="vcpu")
    try:
        clock_f, memory_f = float(clock), float(memory)
    except ValueError:
        raise SchemaViolationError(
            f"{path}:{lineno}: clock/memory must be numbers", line=lineno,
            field="clock_mhz_per_vcpu")
    try:
        bucket_e = InterruptionBucket.from_token(bucket)
    except KeyError:
        raise SchemaViolationError(
            f"{path}:{lineno}: unknown interruption bucket {bucket!r}",
            line=lineno, field="interruption_bucket")
    try:
        return InstanceType(name, vcpu_i, clock_f, memory_f, bucket_e)
    except ValueError as exc:
        raise SchemaViolationError(f"{path}:{lineno}: {exc}", line=lineno)


def _parse_price_line(line: str, path: str, lineno: int) -> PriceEntry:
    tokens = line.split()
    if len(tokens) != len(_PRICE_FIELDS):
        raise SchemaViolationError(
            f"{path}:{lineno}: expected {len(_PRICE_FIELDS)} fields "
            f"{_PRICE_FIELDS}, got {len(tokens)}", line=lineno)
    itype, ms_token, variant, unit, amount = tokens
    try:
        ms = Marketspace.from_token(ms_token)
    except KeyError:
        raise SchemaViolationError(
            f"{path}:{lineno}: unknown marketspace {ms_token!r}",
            line=lineno, field="marketspace")
    try:
        unit_e = PricingMode(unit)
    except ValueError:
        raise SchemaViolationError(
            f"{path}:{lineno}: unit must be per_hour or per_term",
            line=lineno, field="unit")
    micro = _parse_amount_micro(amount, path, lineno)
    try:
        return PriceEntry(itype, ms, variant, micro, unit_e)
    except ValueError as exc:
        raise SchemaViolationError(f"{path}:{lineno}: {exc}", line=lineno)


def sample_catalog_path() -> Path:
    """Path of the bundled sample catalog (placeholder prices, Frankfurt-like)."""
    return Path(__file__).parent / "data" / "frankfurt_sample.catalog"
