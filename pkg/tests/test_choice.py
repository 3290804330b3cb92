import numpy as np
import pytest

from foldmenu.choice import (
    Assortment,
    ConsumerTaste,
    Product,
    ProductLine,
    choice_probabilities,
    expected_profit,
)

from _oracles import gumbel_choice_frequencies, random_strict_line, random_taste


@pytest.fixture
def two_tier_line():
    return ProductLine([Product("I", 2.5, 3.6), Product("II", 1.8, 2.4)])


def test_single_product_zero_delta_splits_evenly():
    line = ProductLine([Product("only", 1.0, 1.0)])
    taste = ConsumerTaste(0.0, [0.0])
    probs = choice_probabilities(taste, line, Assortment([1]))
    assert probs[0] == pytest.approx(0.5, abs=1e-15)
    assert probs[1] == pytest.approx(0.5, abs=1e-15)


def test_dimension_mismatch_rejected(two_tier_line):
    with pytest.raises(ValueError, match="products"):
        choice_probabilities(
            ConsumerTaste(1.0, []), two_tier_line, Assortment([1, 2])
        )


def test_probabilities_match_extreme_value_simulation(two_tier_line):
    # Frozen from the closed form at alpha=2, gamma=(2, 1.5), p=(3.6, 2.4):
    # delta = (-5.2, -3.3).
    taste = ConsumerTaste(2.0, [2.0, 1.5])
    probs = choice_probabilities(taste, two_tier_line, Assortment.full(2))
    expected = np.array([0.95932488059, 0.00529217758, 0.03538294183])
    np.testing.assert_allclose(probs, expected, atol=1e-10)
    # 1e7 raw utility draws: sampling error ~1.6e-4, gate at 1e-3.
    delta = taste.gamma - taste.alpha * two_tier_line.prices
    freq = gumbel_choice_frequencies(delta, 10_000_000, seed=3)
    np.testing.assert_allclose(freq, probs, atol=1e-3)


def test_probabilities_zero_outside_assortment(two_tier_line):
    taste = ConsumerTaste(0.5, [1.0, 0.5])
    probs = choice_probabilities(taste, two_tier_line, Assortment([1]))
    assert probs[2] == 0.0
    assert probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_overflow_guard_handles_huge_utilities():
    line = ProductLine([Product("a", 2.0, 1.0), Product("b", 1.0, 1.0)])
    taste = ConsumerTaste(0.0, [800.0, -800.0])
    probs = choice_probabilities(taste, line, Assortment.full(2))
    assert np.all(np.isfinite(probs))
    assert probs[1] == pytest.approx(1.0)


def test_empty_assortment_probabilities_and_profit(two_tier_line):
    taste = ConsumerTaste(1.0, [1.0, 1.0])
    probs = choice_probabilities(taste, two_tier_line, Assortment([]))
    assert probs[0] == 1.0
    assert expected_profit(taste, two_tier_line, Assortment([])) == 0.0


def test_single_product_unit_margin_profit_half():
    line = ProductLine([Product("only", 1.0, 2.0)])
    taste = ConsumerTaste(0.0, [0.0])
    assert expected_profit(taste, line, Assortment([1])) == pytest.approx(0.5)


def test_profit_bounded_by_max_margin_in_assortment():
    rng = np.random.default_rng(11)
    for _ in range(300):
        j = int(rng.integers(1, 9))
        line = random_strict_line(rng, j)
        taste = random_taste(rng, j)
        size = int(rng.integers(1, j + 1))
        members = 1 + rng.choice(j, size=size, replace=False)
        a = Assortment(members.tolist())
        profit = expected_profit(taste, line, a)
        assert 0.0 <= profit <= line.margins[a.indices()].max() + 1e-12


def test_probabilities_sum_to_one_over_random_assortments():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        j = int(rng.integers(1, 11))
        line = random_strict_line(rng, j)
        taste = random_taste(rng, j)
        size = int(rng.integers(1, j + 1))
        members = 1 + rng.choice(j, size=size, replace=False)
        probs = choice_probabilities(taste, line, Assortment(members.tolist()))
        assert np.all(probs >= 0.0) and np.all(probs <= 1.0)
        assert abs(probs.sum() - 1.0) < 1e-12


def test_adding_higher_margin_product_never_hurts():
    # pi_m >= current expected profit makes the addition weakly profitable.
    rng = np.random.default_rng(23)
    for _ in range(300):
        j = int(rng.integers(2, 9))
        line = random_strict_line(rng, j)
        taste = random_taste(rng, j)
        size = int(rng.integers(1, j))
        members = set((1 + rng.choice(j, size=size, replace=False)).tolist())
        outside_members = sorted(set(range(1, j + 1)) - members)
        m = outside_members[int(rng.integers(len(outside_members)))]
        base = expected_profit(taste, line, Assortment(members))
        if line.margins[m - 1] >= base:
            grown = expected_profit(taste, line, Assortment(members | {m}))
            assert grown >= base - 1e-12


def test_product_validation():
    with pytest.raises(ValueError):
        Product("bad", -0.1, 1.0)
    with pytest.raises(ValueError):
        Product("bad", 1.0, 0.0)
    with pytest.raises(ValueError, match="descending"):
        ProductLine([Product("a", 1.0, 1.0), Product("b", 2.0, 1.0)])
