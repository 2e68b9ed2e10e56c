"""Dev scratch: generate the bundled sample catalog and sanity-check it."""
from fractions import Fraction
from decimal import Decimal

# family -> (clock MHz per vCPU, SM factor, bucket)
FAMILIES = {
    "t3":  (2500, "0.31", "<5%"),
    "t2":  (2400, "0.33", "<5%"),
    "m3":  (2500, "0.38", "15-20%"),
    "m4":  (2400, "0.32", "5-10%"),
    "m5":  (3100, "0.30", "5-10%"),
    "m5d": (3100, "0.30", "5-10%"),
    "c3":  (2800, "0.38", ">20%"),
    "c4":  (2900, "0.34", "10-15%"),
    "c5":  (3400, "0.30", "10-15%"),
    "c5d": (3400, "0.31", "15-20%"),
    "r3":  (2500, "0.37", "15-20%"),
    "r4":  (2300, "0.33", "5-10%"),
    "r5":  (3100, "0.29", "<5%"),
    "r5d": (3100, "0.30", "5-10%"),
    "i3":  (2300, "0.35", "10-15%"),
    "x1e": (2300, "0.36", "<5%"),
    "d2":  (2400, "0.38", ">20%"),
}

# (family, size, vcpu, memory GiB, ODM USD/h)
TYPES = [
    ("t3", "nano", 2, "0.5", "0.0066"), ("t3", "micro", 2, "1", "0.0132"),
    ("t3", "small", 2, "2", "0.0264"), ("t3", "medium", 2, "4", "0.0528"),
    ("t3", "large", 2, "8", "0.1056"), ("t3", "xlarge", 4, "16", "0.2112"),
    ("t3", "2xlarge", 8, "32", "0.4224"),
    ("t2", "nano", 1, "0.5", "0.0067"), ("t2", "micro", 1, "1", "0.0134"),
    ("t2", "small", 1, "2", "0.0268"), ("t2", "medium", 2, "4", "0.0536"),
    ("t2", "large", 2, "8", "0.1072"), ("t2", "xlarge", 4, "16", "0.2144"),
    ("t2", "2xlarge", 8, "32", "0.4288"),
    ("m3", "medium", 1, "3.75", "0.079"), ("m3", "large", 2, "7.5", "0.158"),
    ("m3", "xlarge", 4, "15", "0.316"), ("m3", "2xlarge", 8, "30", "0.632"),
    ("m4", "large", 2, "8", "0.12"), ("m4", "xlarge", 4, "16", "0.24"),
    ("m4", "2xlarge", 8, "32", "0.48"), ("m4", "10xlarge", 40, "160", "2.40"),
    ("m4", "16xlarge", 64, "256", "3.84"),
    ("m5", "large", 2, "8", "0.115"), ("m5", "xlarge", 4, "16", "0.23"),
    ("m5", "2xlarge", 8, "32", "0.46"),
    ("c3", "large", 2, "3.75", "0.129"), ("c3", "xlarge", 4, "7.5", "0.258"),
    ("c3", "2xlarge", 8, "15", "0.516"), ("c4", "large", 2, "3.75", "0.114"), ("c4", "xlarge", 4, "7.5", "0.227"),
    ("c4", "2xlarge", 8, "15", "0.454"), ("c4", "4xlarge", 16, "30", "0.909"),
    ("c4", "8xlarge", 36, "60", "1.817"),
    ("c5", "large", 2, "4", "0.097"), ("c5", "xlarge", 4, "8", "0.194"),
    ("c5", "2xlarge", 8, "16", "0.388"), ("c5", "4xlarge", 16, "32", "0.776"),
    ("c5", "9xlarge", 36, "72", "1.746"), ("c5", "18xlarge", 72, "144", "3.492"),
    ("c5d", "large", 2, "4", "0.11"), ("c5d", "xlarge", 4, "8", "0.22"),
    ("c5d", "2xlarge", 8, "16", "0.44"), ("c5d", "4xlarge", 16, "32", "0.88"),
    ("c5d", "9xlarge", 36, "72", "1.98"),
    ("r3", "large", 2, "15.25", "0.20"), ("r3", "xlarge", 4, "30.5", "0.40"),
    ("r3", "2xlarge", 8, "61", "0.80"), ("r3", "4xlarge", 16, "122", "1.60"),
    ("r4", "large", 2, "15.25", "0.16"), ("r4", "xlarge", 4, "30.5", "0.32"),
    ("r4", "2xlarge", 8, "61", "0.64"), ("r4", "4xlarge", 16, "122", "1.28"),
    ("r4", "8xlarge", 32, "244", "2.56"), ("r4", "16xlarge", 64, "488", "5.12"),
    ("r5", "large", 2, "16", "0.152"), ("r5", "xlarge", 4, "32", "0.304"),
    ("r5", "4xlarge", 16, "128", "1.216"), ("r5", "12xlarge", 48, "384", "3.648"),
    ("r5", "24xlarge", 96, "768", "7.296"),
    ("r5d", "large", 2, "16", "0.1748"), ("r5d", "xlarge", 4, "32", "0.3496"),
    ("r5d", "4xlarge", 16, "128", "1.3984"), ("r5d", "12xlarge", 48, "384", "4.1952"),
    ("i3", "large", 2, "15.25", "0.172"), ("i3", "xlarge", 4, "30.5", "0.344"),
    ("i3", "2xlarge", 8, "61", "0.688"), ("i3", "4xlarge", 16, "122", "1.376"),
    ("i3", "8xlarge", 32, "244", "2.752"), ("i3", "16xlarge", 64, "488", "5.504"),
    ("x1e", "xlarge", 4, "122", "0.834"), ("x1e", "2xlarge", 8, "244", "1.668"),
    ("x1e", "4xlarge", 16, "488", "3.336"), ("x1e", "8xlarge", 32, "976", "6.672"),
    ("x1e", "16xlarge", 64, "1952", "13.344"), ("x1e", "32xlarge", 128, "3904", "26.688"),
    ("d2", "xlarge", 4, "30.5", "0.69"), ("d2", "2xlarge", 8, "61", "1.38"),
    ("d2", "4xlarge", 16, "122", "2.76"), ("d2", "8xlarge", 36, "244", "5.52"),
]

H1_FACTOR = Fraction("0.50")
H6_FACTOR = Fraction("0.65")
Y1 = {"no-prepaid": Fraction("0.66"), "partly-prepaid": Fraction("0.63"),
      "prepaid": Fraction("0.61")}
Y3 = {"no-prepaid": Fraction("0.48"), "partly-prepaid": Fraction("0.45"),
      "prepaid": Fraction("0.43")}


def fmt(x: Fraction) -> str:
    micro = x * 10**6
    assert micro.denominator == 1, x
    return str(Decimal(micro.numerator) / 10**6)


def main():
    assert len(TYPES) == 80, len(TYPES)
    lines = [
        "# Sample marketspace catalog: ~80 Linux instance types shaped after",
        "# Amazon's Frankfurt zone. Prices are PLAUSIBLE PLACEHOLDERS for",
        "# demonstrations and tests, not a historical price snapshot. Types",
        "# missing marketspace coverage or published interruption data are",
        "# not listed.",
        "",
        "[instance_types]",
        "# name  vcpu  clock_mhz_per_vcpu  memory_gib  interruption_bucket",
    ]
    for fam, size, vcpu, mem, _ in TYPES:
        clock, _, bucket = FAMILIES[fam]
        lines.append(f"{fam}.{size}  {vcpu}  {clock}  {mem}  {bucket}")
    lines += ["", "[prices]",
              "# instance_type  marketspace  variant  unit  amount_usd"]
    for fam, size, vcpu, mem, odm in TYPES:
        name = f"{fam}.{size}"
        p = Fraction(odm)
        _, smf, _ = FAMILIES[fam]
        rows = [
            ("SM", "default", "per_hour", p * Fraction(smf)),
            ("ODM", "default", "per_hour", p),
            ("1HSM", "default", "per_hour", p * H1_FACTOR),
            ("6HSM", "default", "per_hour", p * H6_FACTOR),
        ]
        for variant, f in Y1.items():
            rows.append(("1YRM", variant, "per_term", p * f * 8760))
        for variant, f in Y3.items():
            rows.append(("3YRM", variant, "per_term", p * f * 26280))
        for ms, variant, unit, amount in rows:
            lines.append(f"{name}  {ms}  {variant}  {unit}  {fmt(amount)}")
    text = "\n".join(lines) + "\n"
    out = "src/cloudfolio/data/frankfurt_sample.catalog"
    with open(out, "w") as f:
        f.write(text)
    print(f"wrote {out}: {len(TYPES)} types, {len(TYPES) * 10} price entries")

    # sanity checks against the goldens the tests rely on
    from cloudfolio import load_catalog, match_instance, CostModel
    from cloudfolio.catalog import Marketspace, effective_hourly_cost
    from cloudfolio.trace import VmRequirement, RequirementMode

    cat = load_catalog(out)
    assert len(cat) == 80
    m = match_instance(VmRequirement("x", 11704.0, 64.0,
                                     RequirementMode.REQUESTED), cat)
    print("golden (11704, 64) ->", m.instance_type)
    assert m.instance_type == "r5.4xlarge", m
    z = match_instance(VmRequirement("z", 0.0, 0.0, RequirementMode.REQUESTED), cat)
    print("golden (0, 0) ->", z.instance_type)
    assert z.instance_type == "t3.nano", z

    model0 = CostModel(penalty_usd=0)
    for itype in cat.instance_types:
        sm = effective_hourly_cost(itype, Marketspace.SM, model0, cat)
        for ms in (Marketspace.ODM, Marketspace.H1SM, Marketspace.H6SM):
            assert sm < effective_hourly_cost(itype, ms, model0, cat), itype.name
        f1 = min(e.amount_usd for e in cat.entries(itype, Marketspace.YR1M))
        f3 = min(e.amount_usd for e in cat.entries(itype, Marketspace.YR3M))
        assert sm * 8760 < f1, itype.name          # spot beats amortized fees
        assert f3 >= 2 * f1, itype.name            # 3y term >= two 1y terms
        assert f3 < 3 * f1, itype.name             # but cheaper per hour
    print("price-ordering invariants hold for all 80 types")


if __name__ == "__main__":
    main()
