"""Shared brute-force oracles used by the unit and acceptance suites."""

import numpy as np

from foldmenu.assortment import brute_force_best, optimal_foldable
from foldmenu.choice import ConsumerTaste, Product, ProductLine, expected_profit


def random_strict_line(rng, j):
    margins = np.sort(rng.uniform(0.2, 3.0, j))[::-1] + np.linspace(0.2, 0.0, j)
    prices = np.sort(rng.uniform(0.5, 4.0, j))[::-1]
    return ProductLine([Product(f"p{k}", margins[k], prices[k]) for k in range(j)])


def random_taste(rng, j):
    return ConsumerTaste(rng.normal(0.5, 1.0), rng.normal(1.0, 0.8, j))


def foldable_matches_brute_force(n_instances, seed=0, j_max=8, tol=1e-12):
    """Worst |foldable optimum - exhaustive optimum| over random instances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        j = int(rng.integers(2, j_max + 1))
        line = random_strict_line(rng, j)
        taste = random_taste(rng, j)
        depth = optimal_foldable(taste, line)
        fold_profit = expected_profit(taste, line, depth.as_assortment())
        _, best_profit = brute_force_best(taste, line)
        worst = max(worst, abs(fold_profit - best_profit))
        assert fold_profit <= best_profit + tol
    return worst


def gumbel_choice_frequencies(delta, n_draws, seed=0, chunk=1_000_000):
    """Monte Carlo logit probabilities from raw extreme-value utility draws.

    Simulates u_j = delta_j + eps_j with i.i.d. Gumbel eps (outside option has
    delta 0) and counts argmax frequencies; the analytic logit formula must
    match within sampling error.
    """
    delta = np.asarray(delta, dtype=float)
    rng = np.random.default_rng(seed)
    counts = np.zeros(delta.size + 1, dtype=np.int64)
    remaining = n_draws
    full = np.concatenate([[0.0], delta])
    while remaining > 0:
        m = min(chunk, remaining)
        eps = rng.gumbel(size=(m, full.size))
        counts += np.bincount(
            np.argmax(full[None, :] + eps, axis=1), minlength=full.size
        )
        remaining -= m
    return counts / n_draws
