from fractions import Fraction

import pytest

from cloudfolio import CostModel, load_catalog, sample_catalog_path
from cloudfolio.catalog import Marketspace, PricingMode
from cloudfolio.optimizer import Plan
from cloudfolio.oracle import single_instance_catalog

TABLE4_HEADER = (
    "Timestamp [ms];CPU cores;CPU capacity provisioned [MHZ];"
    "CPU usage [MHZ];CPU usage [%];Memory capacity provisioned [KB];"
    "Memory usage [KB];Disk read throughput [KB/s];"
    "Disk write throughput [KB/s];Network received throughput [KB/s];"
    "Network transmitted throughput [KB/s]"
)
TABLE4_ROWS = (
    "1376314846;4;11704.00;10912.03;93.23;67108864;6129274.4;0.133;0.2;1;2",
    "1376315146;4;11704.00;10890.57;93.05;67108864;6755624.0;1.33;0.2;1;2",
)


@pytest.fixture(scope="session")
def sample_catalog():
    return load_catalog(sample_catalog_path())


@pytest.fixture
def zero_penalty():
    return CostModel(penalty_usd=0)


@pytest.fixture
def eq7_catalog():
    """n=10 lookahead scenario: cheap 6-hour spot, 1-year fee 11.5, rest dear."""
    return single_instance_catalog(
        {Marketspace.SM: 10, Marketspace.ODM: 10, Marketspace.H1SM: 10,
         Marketspace.H6SM: 1},
        {Marketspace.YR1M: Fraction(23, 2), Marketspace.YR3M: 100000},
    )


@pytest.fixture
def table4_trace(tmp_path):
    path = tmp_path / "vm01.csv"
    path.write_text(TABLE4_HEADER + "\n" + "\n".join(TABLE4_ROWS) + "\n")
    return path


def assert_plan_valid(plan: Plan):
    """Structural invariants every plan must satisfy."""
    ivs = plan.intervals
    assert ivs, "plan has no intervals"
    assert ivs[0].start == 1
    assert not ivs[0].entered_by_migration
    assert ivs[-1].end == plan.n
    for prev, cur in zip(ivs, ivs[1:]):
        if cur.entered_by_migration:
            assert cur.start == prev.end
            if cur.marketspace is prev.marketspace:
                # same-marketspace overlap adjacency is the 6-hour extension
                assert cur.marketspace is Marketspace.H6SM
        else:
            # seamless renewal: same reservation marketspace, contiguous
            assert cur.start == prev.end + 1
            assert cur.marketspace is prev.marketspace
            assert cur.marketspace.pricing_mode is PricingMode.PER_TERM_FEE
    for iv in ivs:
        period = iv.marketspace.contract_period_hours
        if period is not None:
            assert iv.decision_count <= period
        assert iv.cost_usd >= 0
    decisions = sum(iv.decision_count for iv in ivs)
    assert decisions == plan.n + plan.migrations
