"""Command-line front end: trace ingestion -> mapping -> planning -> reports.

Subcommands:
  map       parse traces, map VMs to instance types, emit distribution/Gini
  optimize  plan portfolios over penalty/period grids, emit plans/timelines
  validate  compare the greedy planner against the exact oracle
  report    re-emit the cost tables of a previous optimize run

All numeric USD output uses '.' decimals with six fractional digits. Outputs
are deterministic for a fixed configuration (including --seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .catalog import (
    MARKETSPACE_ORDER,
    Catalog,
    CostModel,
    Marketspace,
    PricingMode,
    load_catalog,
    penalty_per_hour,
)
from .errors import CloudfolioError, EmptyDistributionError, SingleClassError
from .mapping import PortfolioMapping, gini, map_portfolio
from .optimizer import PortfolioReport, Regime, plan_portfolio
from .oracle import (
    DEFAULT_ORACLE_CAP,
    random_suite,
    structured_suite,
    validate_greedy,
)
from .trace import (
    ParsedTrace,
    RequirementMode,
    discover_trace_files,
    parse_trace_file,
    summarize,
)

SCHEMA_VERSION = 1

TABLE_PERIODS = (1, 2, 3, 4, 5, 6, 7, 10, 24, 720, 4320, 5760, 8760, 8761,
                 13152, 17520, 20400, 21912, 26280)
DEFAULT_PENALTIES = ("0", "100", "500", "1000")

REGIME_FLAGS = {
    "homogeneous": Regime.HOMOGENEOUS,
    "hetero-no-migration": Regime.HETERO_NO_MIGRATION,
    "hetero-with-migration": Regime.HETERO_WITH_MIGRATION,
}
MONOTONE_ORDER = (Regime.HETERO_WITH_MIGRATION, Regime.HETERO_NO_MIGRATION,
                  Regime.HOMOGENEOUS)


def usd(x: Fraction) -> str:
    """Exact USD amount formatted with six fractional digits."""
    quant = Decimal(x.numerator) / Decimal(x.denominator)
    return str(quant.quantize(Decimal("0.000001")))


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise CloudfolioError(message)


@dataclass
class _Portfolio:
    assignments: list  # (vm_id, InstanceType)
    mapping: PortfolioMapping


# --- trace ingestion ---------------------------------------------------------

def _parse_one(args) -> ParsedTrace:
    path, delimiter, strict = args
    return parse_trace_file(path, delimiter=delimiter, strict=strict)


def _ingest(trace_dir: str, delimiter: str, strict: bool,
            workers: int) -> list[ParsedTrace]:
    files = discover_trace_files(trace_dir)
    if not files:
        raise CloudfolioError(f"no *.csv trace files in {trace_dir}")
    jobs = [(str(p), delimiter, strict) for p in files]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parsed = list(pool.map(_parse_one, jobs, chunksize=16))
    else:
        parsed = [_parse_one(job) for job in jobs]
    return sorted(parsed, key=lambda t: t.vm_id)


def _requirements(parsed: Sequence[ParsedTrace]):
    reqs = []
    for trace in parsed:
        for mode in RequirementMode:
            reqs.append(summarize(trace.rows, mode, vm_id=trace.vm_id))
    return reqs


def _map_portfolio(traces: str, catalog: Catalog, delimiter: str, strict: bool,
                   workers: int, price_basis: Marketspace):
    parsed = _ingest(traces, delimiter, strict, workers)
    reqs = _requirements(parsed)
    mapping = map_portfolio(reqs, catalog, price_basis)
    return parsed, reqs, mapping


def _assignments(mapping: PortfolioMapping, catalog: Catalog,
                 mode: RequirementMode):
    return [(res.vm_id, catalog.instance(res.instance_type))
            for res in mapping.results[mode]]


# --- emission helpers ----------------------------------------------------------

def _write(path: Path, lines: Sequence[str]):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit_mapping(out: Path, d: str, parsed, reqs, mapping: PortfolioMapping,
                  basis: Marketspace):
    lines = [d.join(("vm_id", "mode", "cpu_mhz", "memory_gib", "rows",
                     "repaired_rows"))]
    stats = {t.vm_id: t for t in parsed}
    for req in reqs:
        t = stats[req.vm_id]
        lines.append(d.join((req.vm_id, req.mode.value, f"{req.cpu_mhz:.2f}",
                             f"{req.memory_gib:.6f}", str(len(t.rows)),
                             str(t.repaired_rows))))
    _write(out / "requirements.csv", lines)

    lines = [d.join(("vm_id", "mode", "instance_type", "price_basis",
                     "price_usd"))]
    for mode in RequirementMode:
        for res in mapping.results[mode]:
            lines.append(d.join((res.vm_id, mode.value, res.instance_type,
                                 basis.token, usd(res.reference_hourly_price))))
    _write(out / "mapping.csv", lines)

    req_counts = mapping.distributions[RequirementMode.REQUESTED].counts
    max_counts = mapping.distributions[RequirementMode.MAX_UTILIZATION].counts
    lines = [d.join(("instance_type", "requested_count",
                     "max_utilization_count", "delta"))]
    for name in sorted(mapping.delta):
        lines.append(d.join((name, str(req_counts.get(name, 0)),
                             str(max_counts.get(name, 0)),
                             str(mapping.delta[name]))))
    _write(out / "distribution.csv", lines)


def _gini_summary(mapping: PortfolioMapping):
    out = {}
    for mode, dist in mapping.distributions.items():
        try:
            g = gini(dist)
            out[mode.value] = {"raw": round(g.raw, 6),
                               "corrected": round(g.corrected, 6)}
        except (EmptyDistributionError, SingleClassError) as exc:
            out[mode.value] = {"error": exc.code}
    return out


def _emit_plans(out: Path, d: str, tag: str, report: PortfolioReport):
    lines = [d.join(("vm_id", "marketspace", "start", "end", "migration_entry",
                     "cost_usd"))]
    for plan in report.plans:
        for iv in plan.intervals:
            lines.append(d.join((plan.vm_id, iv.marketspace.token,
                                 str(iv.start), str(iv.end),
                                 "1" if iv.entered_by_migration else "0",
                                 usd(iv.cost_usd))))
    _write(out / "plans" / f"plans_{tag}.csv", lines)

    distinct: dict[tuple, str] = {}
    assignments = {}
    plans_doc = {}
    for plan in report.plans:
        key = plan.intervals
        if key not in distinct:
            distinct[key] = f"p{len(distinct)}"
            plans_doc[distinct[key]] = {
                "instance_type": plan.instance_type,
                "total_usd": usd(plan.total_cost),
                "intervals": [
                    {"marketspace": iv.marketspace.token, "start": iv.start,
                     "end": iv.end,
                     "migration_entry": iv.entered_by_migration,
                     "cost_usd": usd(iv.cost_usd)}
                    for iv in plan.intervals
                ],
            }
        assignments[plan.vm_id] = distinct[key]
    _write_json(out / "plans" / f"plans_{tag}.json", {
        "schema_version": SCHEMA_VERSION,
        "regime": report.regime.value,
        "period_hours": report.n,
        "distinct_plans": plans_doc,
        "assignments": assignments,
    })


def _emit_timeline(out: Path, d: str, tag: str, report: PortfolioReport):
    lines = [d.join(("hour", "marketspace", "count"))]
    for ms in MARKETSPACE_ORDER:
        arr = report.timeline.get(ms)
        if arr is None:
            continue
        for hour in range(1, report.n + 1):
            count = int(arr[hour])
            if count:
                lines.append(d.join((str(hour), ms.token, str(count))))
    _write(out / "timelines" / f"timeline_{tag}.csv", lines)


def _homogeneous_variant_costs(catalog: Catalog, assignments, model: CostModel):
    """Portfolio cost per hour for every (marketspace, variant) pair.

    Reservation fees are amortized over their full contract period. The
    penalty column makes explicit whether expected interruption costs are
    included (they apply to the spot marketspace only).
    """
    rows = []
    counts: dict[str, int] = {}
    instances = {}
    for _, inst in assignments:
        counts[inst.name] = counts.get(inst.name, 0) + 1
        instances[inst.name] = inst
    for ms in MARKETSPACE_ORDER:
        variants = sorted({e.variant for name in counts
                           for e in catalog.entries(name, ms)})
        for variant in variants:
            total = Fraction(0)
            complete = True
            for name, count in counts.items():
                entries = [e for e in catalog.entries(name, ms)
                           if e.variant == variant]
                if not entries:
                    complete = False
                    break
                amount = min(e.amount_usd for e in entries)
                if ms.pricing_mode is PricingMode.PER_TERM_FEE:
                    hourly = amount / ms.contract_period_hours
                else:
                    hourly = amount
                    if ms.interruptible:
                        hourly += penalty_per_hour(instances[name], model)
                total += count * hourly
            if complete:
                rows.append((ms, variant, total))
    return rows


# --- subcommands -----------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--traces", required=True, help="directory of *.csv traces")
    p.add_argument("--catalog", required=True, help="catalog file path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--delimiter", default=";")
    p.add_argument("--price-basis", default="ODM",
                   help="marketspace whose price orders instance types")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strict", action="store_true",
                   help="fail on malformed trace rows instead of counting them")


def cmd_map(args) -> int:
    catalog = load_catalog(args.catalog)
    basis = Marketspace.from_token(args.price_basis)
    out = Path(args.out)
    parsed, reqs, mapping = _map_portfolio(
        args.traces, catalog, args.delimiter, args.strict, args.workers, basis)
    _emit_mapping(out, args.delimiter, parsed, reqs, mapping, basis)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "map",
        "config": {
            "traces": args.traces, "catalog": args.catalog,
            "delimiter": args.delimiter, "price_basis": basis.token,
            "strict": args.strict,
        },
        "vms": len(parsed),
        "downgraded": len(mapping.downgraded),
        "downgrade_share": round(mapping.downgrade_share, 6),
        "gini": _gini_summary(mapping),
    }
    _write_json(out / "map_summary.json", summary)
    print(f"mapped {len(parsed)} VMs; downgradable: {len(mapping.downgraded)} "
          f"({100 * mapping.downgrade_share:.1f}%)")
    for mode, stats in summary["gini"].items():
        print(f"gini[{mode}]: {stats}")
    return 0


def _combo_tag(regime: Regime, penalty: str, n: int) -> str:
    return f"{regime.value}_p{penalty}_n{n}"


def cmd_optimize(args) -> int:
    catalog = load_catalog(args.catalog)
    basis = Marketspace.from_token(args.price_basis)
    out = Path(args.out)
    d = args.delimiter
    parsed, reqs, mapping = _map_portfolio(
        args.traces, catalog, d, args.strict, args.workers, basis)
    _emit_mapping(out, d, parsed, reqs, mapping, basis)

    if args.mode == "both":
        modes = [RequirementMode.REQUESTED, RequirementMode.MAX_UTILIZATION]
    elif args.mode == "requested":
        modes = [RequirementMode.REQUESTED]
    else:
        modes = [RequirementMode.MAX_UTILIZATION]
    regimes = (list(MONOTONE_ORDER) if args.regime == "all"
               else [REGIME_FLAGS[args.regime]])
    penalties = list(args.penalty or DEFAULT_PENALTIES)
    periods = [int(p) for p in (args.period or TABLE_PERIODS)]

    combos = []
    variant_costs = []
    for mode in modes:
        assignments = _assignments(mapping, catalog, mode)
        mode_tag = {"requested": "requested",
                    "max_utilization": "maxutil"}[mode.value]
        for penalty in penalties:
            model = CostModel(penalty_usd=penalty)
            for ms, variant, total in _homogeneous_variant_costs(
                    catalog, assignments, model):
                variant_costs.append({
                    "mode": mode.value, "penalty_usd": penalty,
                    "marketspace": ms.token, "variant": variant,
                    "portfolio_usd_per_hour": usd(total),
                })
            for n in periods:
                results = {}
                for regime in regimes:
                    report = plan_portfolio(regime, n, assignments, catalog,
                                            model)
                    tag = f"{mode_tag}_{_combo_tag(regime, penalty, n)}"
                    if not args.no_plans:
                        _emit_plans(out, d, tag, report)
                        _emit_timeline(out, d, tag, report)
                    results[regime] = report
                    combos.append({
                        "mode": mode.value, "regime": regime.value,
                        "penalty_usd": penalty, "period_hours": n,
                        "total_usd": usd(report.total_usd),
                        "avg_usd_per_vm_hour": usd(report.avg_usd_per_vm_hour),
                        "homogeneous_marketspace":
                            report.homogeneous_marketspace.token
                            if report.homogeneous_marketspace else None,
                    })
                _assert_monotone(results, penalty, n)

    matrix_lines = _matrix_lines(combos, d, regimes, penalties, modes)
    _write(out / "avg_cost_matrix.csv", matrix_lines)
    lines = [d.join(("mode", "penalty_usd", "marketspace", "variant",
                     "portfolio_usd_per_hour"))]
    for row in variant_costs:
        lines.append(d.join((row["mode"], row["penalty_usd"],
                             row["marketspace"], row["variant"],
                             row["portfolio_usd_per_hour"])))
    _write(out / "homogeneous_costs.csv", lines)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "optimize",
        "config": {
            "traces": args.traces, "catalog": args.catalog,
            "delimiter": d, "price_basis": basis.token, "mode": args.mode,
            "regime": args.regime, "penalties_usd": penalties,
            "periods_hours": periods, "seed": args.seed,
            "strict": args.strict,
        },
        "vms": len(parsed),
        "downgrade_share": round(mapping.downgrade_share, 6),
        "gini": _gini_summary(mapping),
        "combos": combos,
        "homogeneous_variant_costs": variant_costs,
    }
    _write_json(out / "run_summary.json", summary)
    print(f"planned {len(combos)} portfolio configurations "
          f"({len(parsed)} VMs); matrix in {out / 'avg_cost_matrix.csv'}")
    return 0


def _assert_monotone(results: dict, penalty: str, n: int):
    tol = Fraction(1, 10**9)
    present = [r for r in MONOTONE_ORDER if r in results]
    for cheaper, pricier in zip(present, present[1:]):
        a = results[cheaper].total_usd
        b = results[pricier].total_usd
        if a > b * (1 + tol):
            raise AssertionError(
                f"regime cost ordering violated at penalty={penalty} "
                f"n={n}: {cheaper.value}={float(a)} > {pricier.value}={float(b)}")


def _matrix_lines(combos, d, regimes, penalties, modes):
    header = ["period_hours"]
    columns = []
    for mode in modes:
        for regime in MONOTONE_ORDER[::-1]:
            if regime not in regimes:
                continue
            for penalty in penalties:
                columns.append((mode.value, regime.value, penalty))
                header.append(f"{mode.value}:{regime.value}:p{penalty}")
    by_key = {}
    periods = []
    for row in combos:
        if row["period_hours"] not in periods:
            periods.append(row["period_hours"])
        by_key[(row["mode"], row["regime"], row["penalty_usd"],
                row["period_hours"])] = row["avg_usd_per_vm_hour"]
    lines = [d.join(header)]
    for n in periods:
        cells = [str(n)]
        for mode, regime, penalty in columns:
            cells.append(by_key.get((mode, regime, penalty, n), ""))
        lines.append(d.join(cells))
    return lines


def cmd_validate(args) -> int:
    periods = [int(p) for p in args.period] if args.period else None
    cap = args.oracle_cap
    if periods:
        over = [p for p in periods if p > cap]
        if over:
            from .errors import HorizonTooLargeError
            raise HorizonTooLargeError(
                f"requested periods {over} exceed the oracle cap of {cap}; "
                "raise --oracle-cap deliberately for year-scale runs",
                periods=over, cap=cap)
    cases = []
    if args.structured:
        kwargs = {"periods": periods} if periods else {}
        cases += structured_suite(args.structured, args.seed, **kwargs)
    if args.random:
        cases += random_suite(args.random, args.seed,
                              max_n=min(cap, args.random_max_n))
    if not cases:
        raise CloudfolioError("nothing to validate: set --structured/--random")
    results = validate_greedy(cases, cap=cap)
    mismatches = [r for r in results if r.mismatch]

    d = args.delimiter
    lines = [d.join(("case_id", "n", "greedy_cost", "dp_cost", "rel_gap",
                     "seed"))]
    for r in results:
        lines.append(d.join((r.case_id, str(r.n), usd(r.greedy_total),
                             usd(r.dp_total), f"{float(r.rel_gap):.12f}",
                             str(r.seed))))
    out = Path(args.out)
    _write(out / "validation_report.csv", lines)
    _write_json(out / "validation_summary.json", {
        "schema_version": SCHEMA_VERSION,
        "command": "validate",
        "cases": len(results),
        "mismatches": [r.case_id for r in mismatches],
        "seed": args.seed,
        "oracle_cap": cap,
    })
    print(f"validated {len(results)} cases: {len(mismatches)} mismatches")
    for r in mismatches[:20]:
        print(f"  gap {float(r.rel_gap):.3e} at {r.case_id} "
              f"(greedy {usd(r.greedy_total)} vs exact {usd(r.dp_total)}, "
              f"seed {r.seed})")
    return 0  # mismatches are findings, not failures


def cmd_report(args) -> int:
    src = Path(args.source) / "run_summary.json"
    if not src.is_file():
        raise CloudfolioError(f"no run_summary.json under {args.source}")
    summary = json.loads(src.read_text())
    d = args.delimiter
    combos = summary["combos"]
    modes = []
    regimes = []
    penalties = []
    for row in combos:
        if row["mode"] not in modes:
            modes.append(row["mode"])
        if row["regime"] not in regimes:
            regimes.append(row["regime"])
        if row["penalty_usd"] not in penalties:
            penalties.append(row["penalty_usd"])

    class _M:
        def __init__(self, value):
            self.value = value
    lines = _matrix_lines(combos, d, [Regime(r) for r in regimes],
                          penalties, [_M(m) for m in modes])
    out = Path(args.out) if args.out else Path(args.source)
    _write(out / "avg_cost_matrix.csv", lines)
    for line in lines:
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cloudfolio",
                     description="cloud portfolio cost optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("map", parents=[], help="map traces to instance types")
    _add_common(p_map)
    p_map.set_defaults(func=cmd_map)

    p_opt = sub.add_parser("optimize", help="plan portfolios and emit reports")
    _add_common(p_opt)
    p_opt.add_argument("--mode", default="max-utilization",
                       choices=["requested", "max-utilization", "both"])
    p_opt.add_argument("--regime", default="all",
                       choices=["all"] + sorted(REGIME_FLAGS))
    p_opt.add_argument("--penalty", action="append",
                       help="penalty USD per interruption (repeatable)")
    p_opt.add_argument("--period", action="append",
                       help="planning period hours (repeatable)")
    p_opt.add_argument("--seed", type=int, default=0)
    p_opt.add_argument("--no-plans", action="store_true",
                       help="skip per-combination plan/timeline files")
    p_opt.set_defaults(func=cmd_optimize)

    p_val = sub.add_parser("validate", help="greedy vs exact oracle")
    p_val.add_argument("--out", required=True)
    p_val.add_argument("--structured", type=int, default=200,
                       help="number of market-ordered synthetic catalogs")
    p_val.add_argument("--random", type=int, default=0,
                       help="number of adversarial random cases")
    p_val.add_argument("--seed", type=int, default=42)
    p_val.add_argument("--period", action="append",
                       help="override suite planning periods (repeatable)")
    p_val.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    p_val.add_argument("--random-max-n", type=int, default=200)
    p_val.add_argument("--delimiter", default=";")
    p_val.set_defaults(func=cmd_validate)

    p_rep = sub.add_parser("report", help="re-emit tables from a previous run")
    p_rep.add_argument("--source", required=True,
                       help="output directory of a previous optimize run")
    p_rep.add_argument("--out", default=None)
    p_rep.add_argument("--delimiter", default=";")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CloudfolioError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
