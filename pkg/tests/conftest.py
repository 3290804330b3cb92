import numpy as np
import pytest

from foldmenu.choice import ConsumerTaste, Product, ProductLine
from foldmenu.dgp import DgpConfig, generate_panel
from foldmenu.estimation import EstimationConfig, estimate
from foldmenu.shares import DrawSet


def random_line(rng, j, strict=True):
    """A line with descending margins and positive prices."""
    margins = np.sort(rng.uniform(0.2, 3.0, j))[::-1]
    if strict:
        margins += np.linspace(0.2, 0.0, j)  # enforce strict gaps
    prices = np.sort(rng.uniform(0.5, 4.0, j))[::-1]
    return ProductLine(
        [Product(f"p{k}", margins[k], prices[k]) for k in range(j)]
    )


def random_taste(rng, j):
    return ConsumerTaste(rng.normal(0.5, 1.0), rng.normal(1.0, 0.8, j))


@pytest.fixture(scope="session")
def small_panel():
    """A quick 40-market panel for estimation-dependent tests."""
    return generate_panel(DgpConfig(seed=7, n_markets=40))


@pytest.fixture(scope="session")
def small_result(small_panel):
    """One fitted foldable model shared by the analysis tests."""
    cfg = EstimationConfig(seed=11, theta_bracket=(1.4, 4.0), grid_points=4)
    return estimate(small_panel, cfg)


@pytest.fixture(scope="session")
def shared_draws():
    return DrawSet.from_seed(42, 2000)
