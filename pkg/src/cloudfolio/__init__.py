"""Cost-optimal cloud portfolios from utilization traces and a pricing catalog."""

from .catalog import (
    Catalog,
    CostModel,
    InstanceType,
    InterruptionBucket,
    Marketspace,
    MARKETSPACE_ORDER,
    PriceEntry,
    PricingMode,
    effective_hourly_cost,
    load_catalog,
    penalty_per_hour,
    sample_catalog_path,
    term_fee,
)
from .errors import CloudfolioError
from .mapping import (
    GiniResult,
    MappingResult,
    PortfolioMapping,
    TypeDistribution,
    gini,
    map_portfolio,
    match_instance,
)
from .optimizer import (
    Interval,
    Plan,
    PortfolioReport,
    Regime,
    aggregate,
    avg_cost,
    plan_homogeneous,
    plan_portfolio,
    plan_vm_no_migration,
    plan_vm_with_migration,
    single_marketspace_cost,
)
from .oracle import (
    ValidationCase,
    ValidationResult,
    brute_force_total,
    dp_optimal,
    random_suite,
    single_instance_catalog,
    structured_suite,
    validate_greedy,
)
from .trace import (
    ParsedTrace,
    RequirementMode,
    TraceRow,
    VmRequirement,
    discover_trace_files,
    parse_trace_file,
    summarize,
)

__version__ = "0.1.0"
