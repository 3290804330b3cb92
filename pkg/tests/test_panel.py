import numpy as np
import pandas as pd
import pytest

from foldmenu.dgp import DgpConfig, generate_panel
from foldmenu.panel import Panel, PanelSchemaError


@pytest.fixture
def panel():
    return generate_panel(DgpConfig(seed=2, n_markets=9))


def test_csv_round_trip_is_lossless(panel, tmp_path):
    path = tmp_path / "panel.csv"
    panel.to_csv(path)
    back = Panel.from_csv(path)
    np.testing.assert_array_equal(back.shares, panel.shares)
    np.testing.assert_array_equal(back.prices, panel.prices)
    np.testing.assert_array_equal(back.margins, panel.margins)
    np.testing.assert_array_equal(back.cpi, panel.cpi)
    assert back.market_ids == panel.market_ids


def test_missing_column_reported(panel, tmp_path):
    df = panel.to_frame().drop(columns=["real_margin"])
    with pytest.raises(PanelSchemaError, match="real_margin"):
        Panel.from_frame(df)


def test_missing_values_reported_with_rows(panel):
    df = panel.to_frame()
    df.loc[3, "observed_share"] = np.nan
    with pytest.raises(PanelSchemaError, match="rows \\[5\\]"):
        Panel.from_frame(df)


def test_nonconsecutive_tiers_rejected(panel):
    df = panel.to_frame()
    df["tier"] = df["tier"].replace({2: 7})
    with pytest.raises(PanelSchemaError, match="consecutive"):
        Panel.from_frame(df)


def test_row_order_does_not_matter(panel):
    df = panel.to_frame().sample(frac=1.0, random_state=0)
    back = Panel.from_frame(df)
    # market order follows first appearance in the shuffled file
    idx = [back.market_ids.index(m) for m in panel.market_ids]
    np.testing.assert_allclose(back.shares[idx], panel.shares)


def test_duplicated_market_tier_rows_rejected(panel):
    df = panel.to_frame()
    df.loc[1, "tier"] = 1  # market m000 now has tier 1 twice and no tier 2
    with pytest.raises(PanelSchemaError, match="one row per tier"):
        Panel.from_frame(df)


def test_share_bounds_enforced(panel):
    shares = panel.shares.copy()
    shares[0, 0] = 0.0
    with pytest.raises(PanelSchemaError, match="strictly in"):
        Panel(
            market_ids=panel.market_ids,
            shares=shares,
            prices=panel.prices,
            margins=panel.margins,
            income_log_mean=panel.income_log_mean,
            income_log_sd=panel.income_log_sd,
            cpi=panel.cpi,
        )


def test_outside_share_must_be_positive(panel):
    shares = panel.shares.copy()
    shares[1] = 0.21  # five tiers at 0.21 leave nothing outside
    with pytest.raises(PanelSchemaError, match="outside"):
        Panel(
            market_ids=panel.market_ids,
            shares=shares,
            prices=panel.prices,
            margins=panel.margins,
            income_log_mean=panel.income_log_mean,
            income_log_sd=panel.income_log_sd,
            cpi=panel.cpi,
        )


def test_group_and_size_columns_round_trip(panel, tmp_path):
    panel.groups = [f"g{i % 3}" for i in range(panel.n_markets)]
    panel.market_size = np.linspace(1.0, 2.0, panel.n_markets)
    path = tmp_path / "panel.csv"
    panel.to_csv(path)
    back = Panel.from_csv(path)
    assert back.groups == panel.groups
    np.testing.assert_array_equal(back.market_size, panel.market_size)


def test_subset_with_replacement(panel):
    idx = [0, 0, 3, 5]
    sub = panel.subset(idx)
    assert sub.n_markets == 4
    np.testing.assert_array_equal(sub.shares[0], sub.shares[1])
    assert sub.market_ids[0] == sub.market_ids[1] == panel.market_ids[0]


def test_strict_margin_check(panel):
    margins = panel.margins.copy()
    margins[0, 1] = margins[0, 0]
    p = Panel(
        market_ids=panel.market_ids,
        shares=panel.shares,
        prices=panel.prices,
        margins=margins,
        income_log_mean=panel.income_log_mean,
        income_log_sd=panel.income_log_sd,
        cpi=panel.cpi,
    )
    with pytest.raises(PanelSchemaError, match="strictly descending"):
        p.require_strict_margins()
