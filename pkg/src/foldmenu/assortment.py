"""Profit-maximizing assortments on a margin-ranked product line.

The seller's optimum always lies in the nested family {1}, {1,2}, ...,
{1,...,J} (the foldable menu), so the search is linear in J. With strictly
descending margins the switch points between consecutive depths are J-1
price-sensitivity cutoffs, each the unique root of a monotone indifference
condition; consumers are then assigned a depth by bracketing their alpha
between cutoffs. A brute-force subset enumerator is kept as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .choice import Assortment, ConsumerTaste, FoldableAssortment, ProductLine

ALPHA_TOL = 1e-12
MAX_BISECT_ITER = 200
_MAX_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class CutoffVector:
    """Price-sensitivity thresholds partitioning consumers across menu depths.

    ``values`` has length J+1: values[0] = -inf and values[J] = +inf are
    sentinels, and values[j] for 1 <= j <= J-1 is the alpha at which the
    seller is indifferent between offering depth j and depth j+1. The depth-j
    region is the half-open interval (values[j-1], values[j]].
    """

    values: np.ndarray

    def __init__(self, values):
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size < 2 or v[0] != -np.inf or v[-1] != np.inf:
            raise ValueError("cutoff vector needs -inf/+inf sentinels at the ends")
        object.__setattr__(self, "values", v)

    @property
    def n_products(self) -> int:
        return self.values.size - 1

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]


def _profit_by_depth(taste: ConsumerTaste, line: ProductLine) -> np.ndarray:
    """Expected profit at every foldable depth 1..J in one pass."""
    delta = taste.gamma - taste.alpha * line.prices
    shift = max(0.0, float(np.max(delta)))
    w = np.exp(delta - shift)
    denom = np.exp(-shift) + np.cumsum(w)
    return np.cumsum(line.margins * w) / denom


def optimal_foldable(taste: ConsumerTaste, line: ProductLine) -> FoldableAssortment:
    """Most profitable foldable depth; exact ties go to the smaller menu."""
    if line.size == 0:
        raise ValueError("product line is empty")
    if taste.gamma.shape != (line.size,):
        raise ValueError("taste/gamma dimension does not match the line")
    profits = _profit_by_depth(taste, line)
    return FoldableAssortment(int(np.argmax(profits)) + 1)


def brute_force_best(
    taste: ConsumerTaste, line: ProductLine, max_products: int = 20
) -> tuple[Assortment, float]:
    """Exhaustive argmax over all non-empty subsets (test oracle).

    Guarded at 20 products: the enumeration is 2^J - 1 evaluations.
    """
    j = line.size
    if j == 0:
        raise ValueError("product line is empty")
    if j > max_products:
        raise ValueError(f"brute force refuses J={j} > {max_products} products")
    delta = taste.gamma - taste.alpha * line.prices
    shift = max(0.0, float(np.max(delta)))
    w = np.exp(delta - shift)
    out = np.exp(-shift)
    best_profit = -np.inf
    best: tuple[int, ...] = ()
    for r in range(1, j + 1):
        for subset in combinations(range(j), r):
            idx = list(subset)
            ws = w[idx]
            profit = float(np.dot(line.margins[idx], ws) / (out + ws.sum()))
            if profit > best_profit:
                best_profit = profit
                best = subset
    return Assortment(i + 1 for i in best), best_profit


def _validate_cutoff_inputs(margins: np.ndarray, prices: np.ndarray) -> None:
    if np.any(np.diff(margins, axis=-1) >= 0):
        raise ValueError("cutoffs require strictly descending unit margins")
    if np.any(margins <= 0):
        raise ValueError("cutoffs require strictly positive unit margins")
    if np.any(prices <= 0):
        raise ValueError("cutoffs require strictly positive prices")


def _indifference_gap(
    alpha: np.ndarray,
    gamma: np.ndarray,
    prices: np.ndarray,
    coef_log: np.ndarray,
    log_margin: np.ndarray,
) -> np.ndarray:
    """Signed gap of the depth-switch condition, in log space.

    For the cutoff between depths j-1 and j the condition is
    pi_j = sum_{j'<j} (pi_j' - pi_j) exp(gamma_j' - alpha p_j'); the gap
    returned is logsumexp(...) - log(pi_j), strictly decreasing in alpha, so
    the root is the unique sign change. ``coef_log`` holds
    log(pi_j' - pi_j) with -inf padding for j' >= j.

    Shapes: alpha (..., R), gamma/prices (..., J), coef_log (..., R, J),
    log_margin (..., R); R is the number of roots solved jointly.
    """
    expo = coef_log + gamma[..., None, :] - alpha[..., None] * prices[..., None, :]
    m = np.max(expo, axis=-1)
    lse = m + np.log(np.sum(np.exp(expo - m[..., None]), axis=-1))
    return lse - log_margin


def solve_cutoff_array(
    gamma: np.ndarray, prices: np.ndarray, margins: np.ndarray
) -> np.ndarray:
    """Cutoffs for a whole batch of markets, bisected in lockstep.

    gamma/prices/margins are (T, J); the result is (T, J+1) including the
    -inf/+inf sentinels. Bisection brackets expand geometrically from [-1, 1]
    (the gap function is monotone, so a sign change always exists) and stop at
    width 1e-12 on alpha.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    margins = np.atleast_2d(np.asarray(margins, dtype=float))
    _validate_cutoff_inputs(margins, prices)
    t, j = gamma.shape
    if j == 1:
        return np.hstack(
            [np.full((t, 1), -np.inf), np.full((t, 1), np.inf)]
        )
    r = j - 1  # roots per market: switch between depths k+1 and k+2 for k=0..J-2
    # coef_log[t, k, j'] = log(pi_j' - pi_{k+2}) for j' <= k, -inf padding above.
    coef_log = np.full((t, r, j), -np.inf)
    for k in range(r):
        coef_log[:, k, : k + 1] = np.log(
            margins[:, : k + 1] - margins[:, k + 1 : k + 2]
        )
    log_margin = np.log(margins[:, 1:])

    def gap(alpha):
        return _indifference_gap(alpha, gamma, prices, coef_log, log_margin)

    lo = np.full((t, r), -1.0)
    hi = np.full((t, r), 1.0)
    g_lo = gap(lo)
    g_hi = gap(hi)
    # Expand until the gap is positive at lo and negative at hi.
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        need_lo = g_lo < 0
        need_hi = g_hi > 0
        if not need_lo.any() and not need_hi.any():
            break
        hi = np.where(need_lo, lo, hi)
        lo = np.where(need_lo, 2.0 * lo, lo)
        lo = np.where(need_hi, hi, lo)
        hi = np.where(need_hi, 2.0 * hi, hi)
        g_lo = gap(lo)
        g_hi = gap(hi)
    else:
        raise RuntimeError("cutoff bracket expansion did not find a sign change")
    for _ in range(MAX_BISECT_ITER):
        if np.all(hi - lo <= ALPHA_TOL):
            break
        mid = 0.5 * (lo + hi)
        pos = gap(mid) > 0  # gap decreasing: positive means the root is right of mid
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    roots = 0.5 * (lo + hi)
    out = np.empty((t, j + 1))
    out[:, 0] = -np.inf
    out[:, 1:j] = roots
    out[:, j] = np.inf
    return out


def solve_cutoffs(gamma, line: ProductLine) -> CutoffVector:
    """Price-sensitivity cutoffs for one consumer-utility vector.

    Requires strictly descending, strictly positive margins; the returned
    interior values are strictly increasing and each satisfies the
    indifference condition to ~1e-10 in profit units.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (line.size,):
        raise ValueError("gamma dimension does not match the line")
    values = solve_cutoff_array(
        gamma[None, :], line.prices[None, :], line.margins[None, :]
    )[0]
    return CutoffVector(values)


def assortment_for_alpha(alpha: float, cuts: CutoffVector) -> FoldableAssortment:
    """Menu depth assigned to a consumer: depth j iff alpha in (c_{j-1,j}, c_{j,j+1}].

    Intervals are half-open on the left and closed on the right; the infinite
    sentinels make the partition total, so every real alpha gets a depth.
    """
    idx = int(np.searchsorted(cuts.values, alpha, side="left"))
    depth = min(max(idx, 1), cuts.n_products)
    return FoldableAssortment(depth)
