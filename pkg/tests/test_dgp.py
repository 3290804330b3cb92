import numpy as np
import pytest
from scipy.special import ndtr

from foldmenu.dgp import (
    DgpConfig,
    TaxParams,
    allocation_price,
    fit_lognormal_from_quintiles,
    generate_panel,
    simulated_quintile_means,
    wholesale_margin,
)

# Wholesale prices and post-2009 rate schedule per tier (top to bottom):
# allocation-wholesale margin rates, 17% VAT, 5% wholesale ad valorem.
TIER_TAX_ROWS = [
    # (P_w, a, b, expected margin 2011-14)
    (21.8, 0.315, 0.15, 3.75),
    (11.6, 0.25, 0.15, 1.59),
    (8.3, 0.25, 0.15, 1.14),
    (4.5, 0.20, 0.10, 0.48),
    (2.3, 0.15, 0.10, 0.17),
]


def analytic_lognormal_quintile_means(mu, sigma):
    """E[X | quintile] for lognormal X: 5 e^{mu+sigma^2/2} (Phi(z_k - sigma)
    - Phi(z_{k-1} - sigma)) with z_k the standard-normal quintile bounds."""
    z = np.array([-np.inf, *[float(q) for q in _z_bounds()], np.inf])
    scale = 5 * np.exp(mu + sigma**2 / 2)
    return scale * (ndtr(z[1:] - sigma) - ndtr(z[:-1] - sigma))


def _z_bounds():
    from scipy.special import ndtri

    return ndtri([0.2, 0.4, 0.6, 0.8])


def test_zero_shock_scale_gives_exact_xi():
    cfg = DgpConfig(seed=5, n_markets=12, shock_scale=0.0)
    panel = generate_panel(cfg)
    np.testing.assert_array_equal(
        panel.true_gamma, np.tile(np.asarray(cfg.xi), (12, 1))
    )


def test_cpi_bounds_and_deflation():
    panel = generate_panel(DgpConfig(seed=1, n_markets=50))
    assert np.all(panel.cpi >= 1.0) and np.all(panel.cpi <= 1.2)
    np.testing.assert_allclose(
        panel.prices * panel.cpi[:, None],
        np.tile((3.6, 2.4, 1.6, 1.2, 1.0), (50, 1)),
        rtol=1e-12,
    )
    # tier price ratios are CPI-invariant
    ratios = panel.prices / panel.prices[:, :1]
    np.testing.assert_allclose(ratios, np.tile(ratios[0], (50, 1)), rtol=1e-12)


def test_generation_is_bit_reproducible(tmp_path):
    a = generate_panel(DgpConfig(seed=9, n_markets=20))
    b = generate_panel(DgpConfig(seed=9, n_markets=20))
    np.testing.assert_array_equal(a.shares, b.shares)
    np.testing.assert_array_equal(a.true_gamma, b.true_gamma)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_share_statistics_in_reference_band():
    panel = generate_panel(DgpConfig(seed=0))
    assert abs(panel.shares.mean() - 0.137) < 0.015
    assert abs(panel.shares.std() - 0.11) < 0.02
    assert panel.shares.min() < 0.02 and panel.shares.max() > 0.35


def test_dgp_config_validation():
    with pytest.raises(ValueError, match="equal length"):
        DgpConfig(xi=(1.0, 0.5), nominal_prices=(1.0,), nominal_margins=(1.0, 0.5))
    with pytest.raises(ValueError):
        DgpConfig(theta_true=0.0)


def test_quintile_fit_round_trip():
    observed = analytic_lognormal_quintile_means(1.0, 0.5)
    a, b = fit_lognormal_from_quintiles(observed, n_sim=10_000, seed=3)
    assert a == pytest.approx(1.0, abs=0.05)
    assert b == pytest.approx(0.5, abs=0.05)


def test_quintile_fit_scale_property():
    observed = analytic_lognormal_quintile_means(0.8, 0.4)
    a1, b1 = fit_lognormal_from_quintiles(observed, n_sim=10_000, seed=4)
    k = 2.5
    a2, b2 = fit_lognormal_from_quintiles(k * observed, n_sim=10_000, seed=4)
    assert a2 - a1 == pytest.approx(np.log(k), abs=0.02)
    assert b2 == pytest.approx(b1, abs=0.02)


def test_quintile_fit_rejects_degenerate_input():
    with pytest.raises(ValueError, match="degenerate"):
        fit_lognormal_from_quintiles([2.0, 2.0, 2.0, 2.0, 2.0])
    with pytest.raises(ValueError, match="increasing"):
        fit_lognormal_from_quintiles([1.0, 2.0, 1.5, 3.0, 4.0])
    with pytest.raises(ValueError, match="positive"):
        fit_lognormal_from_quintiles([-1.0, 1.0, 2.0, 3.0, 4.0])


def test_simulated_quintile_means_monotone():
    z = np.sort(np.random.default_rng(0).standard_normal(10_000))
    means = simulated_quintile_means(0.5, 0.6, z)
    assert np.all(np.diff(means) > 0)


@pytest.mark.parametrize("p_w,a,b,expected", TIER_TAX_ROWS)
def test_wholesale_margin_reference_values(p_w, a, b, expected):
    tax = TaxParams(
        wholesale_price=p_w,
        allocation_wholesale_margin_rate=a,
        wholesale_retail_margin_rate=b,
        vat_rate=0.17,
        advalorem_wholesale_rate=0.05,
        specific_wholesale_tax=0.0,
    )
    assert wholesale_margin(tax) == pytest.approx(expected, abs=0.01)
    # the 2015-16 schedule subtracts the new 0.10 specific tax
    later = TaxParams(
        wholesale_price=p_w,
        allocation_wholesale_margin_rate=a,
        wholesale_retail_margin_rate=b,
        vat_rate=0.17,
        advalorem_wholesale_rate=0.05,
        specific_wholesale_tax=0.10,
    )
    assert wholesale_margin(later) == pytest.approx(expected - 0.10, abs=0.01)


def test_wholesale_margin_zero_when_tax_equals_margin_rate():
    tax = TaxParams(
        wholesale_price=10.0,
        allocation_wholesale_margin_rate=0.25,
        wholesale_retail_margin_rate=0.1,
        vat_rate=0.17,
        advalorem_wholesale_rate=0.25,
    )
    assert wholesale_margin(tax) == pytest.approx(0.0, abs=1e-12)
    assert allocation_price(tax) == pytest.approx(10.0 / (1.25 * 1.17))


def test_tax_params_validation():
    with pytest.raises(ValueError):
        TaxParams(0.0, 0.2, 0.1, 0.17, 0.05)
    with pytest.raises(ValueError):
        TaxParams(1.0, 1.2, 0.1, 0.17, 0.05)
    with pytest.raises(ValueError):
        TaxParams(1.0, 0.2, 0.1, 0.17, 0.05, specific_wholesale_tax=-0.1)
