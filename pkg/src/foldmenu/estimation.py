"""Share inversion, GMM objective, and the price-sensitivity search.

The pipeline: for a candidate theta, invert observed market shares to mean
utilities gamma by the contraction gamma + ln(s_obs) - ln(s_pred); regress
the stacked gamma on tier (or tier-by-group) dummies; form the single moment
(residuals dot real prices) and minimize its square over theta by a grid
bracket plus golden section. The misspecified full-availability baseline runs
the same pipeline with the standard-logit share simulator. Bootstrap standard
errors resample whole markets with replacement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .optimize import golden_section, grid_bracket
from .panel import Panel
from .shares import (
    N_DRAWS_DEFAULT,
    N_STANDARD_DRAWS_DEFAULT,
    DrawSet,
    StandardLogitKernel,
    panel_foldable_shares,
)

FOLDABLE = "foldable"
STANDARD = "standard"

# A diverging inversion walks gamma off to +/-inf; any real panel's fixed
# point satisfies |gamma| << 100 (shares above 1e-40), so crossing this bound
# is an early, unambiguous failure signal.
GAMMA_DIVERGENCE_BOUND = 150.0


class ContractionError(RuntimeError):
    """The share inversion did not reach its fixed point.

    For the menu-endogenous model this happens when theta is so small that the
    simulated availability of the lowest-margin tiers caps their predicted
    shares below the observed ones.
    """

    def __init__(self, theta: float, market_ids: list[str]):
        self.theta = float(theta)
        self.market_ids = list(market_ids)
        shown = ", ".join(self.market_ids[:8])
        more = "" if len(self.market_ids) <= 8 else f" (+{len(self.market_ids) - 8} more)"
        super().__init__(
            f"share inversion failed at theta={theta:.6g} in markets [{shown}]{more}"
        )


class BracketError(RuntimeError):
    """No point of the theta bracket produced a usable objective value."""


@dataclass
class EstimationConfig:
    contraction_tol: float = 1e-6
    max_contraction_iter: int = 500
    theta_bracket: tuple[float, float] = (0.2, 10.0)
    theta_tol: float = 1e-3
    grid_points: int = 6
    dummy_structure: str = "tier"  # "tier" or "tier_by_group"
    bootstrap_reps: int = 20
    seed: int = 0
    n_draws: int = N_DRAWS_DEFAULT
    n_standard_draws: int = N_STANDARD_DRAWS_DEFAULT

    def __post_init__(self):
        lo, hi = self.theta_bracket
        if not 0 < lo < hi:
            raise ValueError("theta_bracket must satisfy 0 < lo < hi")
        if self.contraction_tol <= 0:
            raise ValueError("contraction_tol must be > 0")
        if self.dummy_structure not in ("tier", "tier_by_group"):
            raise ValueError("dummy_structure must be 'tier' or 'tier_by_group'")


@dataclass
class EstimationResult:
    model: str
    theta_hat: float
    xi_hat: np.ndarray  # (J,) tier coefficients (group means under tier_by_group)
    delta_xi_hat: np.ndarray  # (T, J) residual demand shocks
    gamma_hat: np.ndarray  # (T, J) inverted mean utilities at theta_hat
    objective_value: float
    contraction_iterations: int
    converged: bool
    at_bracket_edge: bool
    xi_by_group: dict[str, np.ndarray] | None = None
    bootstrap_se: dict | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "theta_hat": self.theta_hat,
            "xi_hat": np.asarray(self.xi_hat).tolist(),
            "objective_value": self.objective_value,
            "contraction_iterations": self.contraction_iterations,
            "converged": self.converged,
            "at_bracket_edge": self.at_bracket_edge,
            "metadata": self.metadata,
        }
        if self.xi_by_group is not None:
            out["xi_by_group"] = {
                g: np.asarray(v).tolist() for g, v in self.xi_by_group.items()
            }
        if self.bootstrap_se is not None:
            out["bootstrap_se"] = {
                k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.bootstrap_se.items()
            }
        return out

    def gamma_frame(self, panel: Panel) -> pd.DataFrame:
        t, j = self.gamma_hat.shape
        return pd.DataFrame(
            {
                "market_id": np.repeat(panel.market_ids, j),
                "tier": np.tile(np.arange(1, j + 1), t),
                "gamma_hat": self.gamma_hat.ravel(),
                "delta_xi_hat": self.delta_xi_hat.ravel(),
            }
        )


def _share_function(panel, theta, model, draws, standard_draws):
    """Per-iteration predicted inside shares for an active market subset."""
    if model == FOLDABLE:

        def fn(gamma, idx):
            inside, _, _ = panel_foldable_shares(
                gamma,
                panel.prices[idx],
                panel.margins[idx],
                theta,
                panel.income_log_mean[idx],
                panel.income_log_sd[idx],
                draws.uniforms,
            )
            return inside

    elif model == STANDARD:
        kernel = StandardLogitKernel(
            panel.prices,
            theta,
            panel.income_log_mean,
            panel.income_log_sd,
            standard_draws,
        )

        def fn(gamma, idx):
            return kernel.shares(gamma, idx)[0]

    else:
        raise ValueError(f"unknown model {model!r}")
    return fn


def invert_shares(
    panel: Panel,
    theta: float,
    draws: DrawSet | None = None,
    *,
    model: str = FOLDABLE,
    tol: float = 1e-6,
    max_iter: int = 1000,
    gamma0: np.ndarray | None = None,
    standard_draws: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Invert observed shares to mean utilities, market by market.

    Iterates gamma <- gamma + ln(s_obs) - ln(s_pred) from the logit start
    ln(s_obs) - ln(s_outside) until the sup-norm step falls below tol in every
    market. Markets converge independently; finished ones drop out of the
    update. Raises ContractionError naming the failing markets if any market
    exhausts max_iter or its predicted shares degenerate.
    """
    if draws is None and model == FOLDABLE:
        raise ValueError("foldable inversion needs a DrawSet")
    if standard_draws is None and model == STANDARD:
        raise ValueError("standard-logit inversion needs normal draws")
    share_fn = _share_function(panel, theta, model, draws, standard_draws)
    ln_obs = np.log(panel.shares)
    cold_start = ln_obs - np.log(panel.outside_shares)[:, None]
    if gamma0 is None:
        gamma = cold_start.copy()
        # Markets that break from the cold start have genuinely failed.
        resettable = np.zeros(panel.n_markets, dtype=bool)
    else:
        gamma = np.array(gamma0, dtype=float, copy=True)
        # A warm start from a distant theta can overshoot into a degenerate
        # state; such markets get one restart from the cold init, which makes
        # the warm start a pure accelerator with cold-start failure semantics.
        resettable = np.ones(panel.n_markets, dtype=bool)
    active = np.arange(panel.n_markets)
    failed: list[int] = []
    iterations = 0

    def resolve_trouble(trouble: np.ndarray) -> np.ndarray:
        """Reset warm-started offenders to the cold init, fail the rest.

        Returns the keep-mask over the current active set (resets stay in)."""
        idx = active[trouble]
        do_reset = resettable[idx]
        reset_idx = idx[do_reset]
        gamma[reset_idx] = cold_start[reset_idx]
        resettable[reset_idx] = False
        failed.extend(idx[~do_reset].tolist())
        keep = ~trouble
        keep[trouble] = do_reset
        return keep

    while active.size:
        if iterations >= max_iter:
            failed.extend(active.tolist())
            break
        pred = share_fn(gamma[active], active)
        trouble = ~np.all(np.isfinite(pred) & (pred > 0), axis=1)
        if trouble.any():
            active = active[resolve_trouble(trouble)]
            iterations += 1
            continue
        step = ln_obs[active] - np.log(pred)
        gamma[active] += step
        trouble = np.max(np.abs(gamma[active]), axis=1) > GAMMA_DIVERGENCE_BOUND
        if trouble.any():
            active = active[resolve_trouble(trouble)]
        else:
            done = np.max(np.abs(step), axis=1) < tol
            active = active[~done]
        iterations += 1
    if failed:
        raise ContractionError(theta, [panel.market_ids[i] for i in sorted(failed)])
    return gamma, iterations


def _xi_and_residuals(gamma: np.ndarray, panel: Panel, structure: str):
    """Least-squares tier dummies: coefficients are cell means by construction."""
    if structure == "tier":
        xi = gamma.mean(axis=0)
        return xi, None, gamma - xi[None, :]
    if panel.groups is None:
        raise ValueError("tier_by_group dummies need a 'group' column in the panel")
    labels = np.asarray(panel.groups)
    resid = np.empty_like(gamma)
    xi_by_group: dict[str, np.ndarray] = {}
    for g in dict.fromkeys(panel.groups):
        mask = labels == g
        xi_g = gamma[mask].mean(axis=0)
        xi_by_group[g] = xi_g
        resid[mask] = gamma[mask] - xi_g[None, :]
    xi = np.mean(np.stack(list(xi_by_group.values())), axis=0)
    return xi, xi_by_group, resid


def _objective_pieces(
    theta, panel, cfg, draws, model, standard_draws, gamma0=None
):
    gamma, iters = invert_shares(
        panel,
        theta,
        draws,
        model=model,
        tol=cfg.contraction_tol,
        max_iter=cfg.max_contraction_iter,
        gamma0=gamma0,
        standard_draws=standard_draws,
    )
    xi, xi_by_group, resid = _xi_and_residuals(gamma, panel, cfg.dummy_structure)
    moment = float(np.sum(resid * panel.prices))
    return moment**2, gamma, xi, xi_by_group, resid, iters


def gmm_objective(
    theta: float,
    panel: Panel,
    cfg: EstimationConfig,
    draws: DrawSet | None = None,
    *,
    model: str = FOLDABLE,
    standard_draws: np.ndarray | None = None,
) -> float:
    """Squared single moment (demand-shock residuals dot real prices) at theta.

    A pure, cold-started function of theta given the draws; propagates
    ContractionError with the failing markets when the inversion breaks down.
    """
    value, *_ = _objective_pieces(theta, panel, cfg, draws, model, standard_draws)
    return value


def _derived_seeds(seed: int) -> tuple[int, int, np.random.SeedSequence]:
    ss = np.random.SeedSequence(seed)
    k_draws, k_std, k_boot = ss.spawn(3)
    return (
        int(k_draws.generate_state(1)[0]),
        int(k_std.generate_state(1)[0]),
        k_boot,
    )


def _prepare_draws(cfg, model, draws, standard_draws):
    draws_seed, std_seed, _ = _derived_seeds(cfg.seed)
    if draws is None and model == FOLDABLE:
        draws = DrawSet.from_seed(draws_seed, cfg.n_draws)
    if standard_draws is None and model == STANDARD:
        standard_draws = np.random.default_rng(std_seed).standard_normal(
            cfg.n_standard_draws
        )
    return draws, standard_draws


def estimate(
    panel: Panel,
    cfg: EstimationConfig | None = None,
    draws: DrawSet | None = None,
    *,
    model: str = FOLDABLE,
    standard_draws: np.ndarray | None = None,
) -> EstimationResult:
    """Full estimation: bracket the GMM objective on a grid, refine by golden
    section, and rebuild all artifacts at the minimizer.

    The grid pass tolerates contraction failures (those theta values simply
    lose); if every grid point fails, the bracket lies entirely in the
    failure region and a BracketError is raised. Successive search points
    warm-start the inversion from the previous gamma; the fixed point is
    unique, so this only saves iterations. The reported result is recomputed
    cold at theta_hat.
    """
    cfg = cfg or EstimationConfig()
    if model == FOLDABLE:
        panel.require_strict_margins()
    draws, standard_draws = _prepare_draws(cfg, model, draws, standard_draws)

    state: dict[str, np.ndarray | None] = {"gamma": None}
    n_failures = 0

    def objective(theta: float) -> float:
        nonlocal n_failures
        try:
            value, gamma, *_ = _objective_pieces(
                theta, panel, cfg, draws, model, standard_draws,
                gamma0=state["gamma"],
            )
        except ContractionError:
            n_failures += 1
            return np.inf
        state["gamma"] = gamma
        return value

    lo, hi = cfg.theta_bracket
    try:
        left, right, grid_values = grid_bracket(objective, lo, hi, cfg.grid_points)
    except RuntimeError as exc:
        raise BracketError(
            f"theta bracket [{lo}, {hi}] lies entirely in the "
            f"contraction-failure region"
        ) from exc
    theta_hat, _ = golden_section(objective, left, right, xtol=cfg.theta_tol)

    value, gamma, xi, xi_by_group, resid, iters = _objective_pieces(
        theta_hat, panel, cfg, draws, model, standard_draws
    )
    edge_tol = 2.0 * cfg.theta_tol
    at_edge = theta_hat - lo < edge_tol or hi - theta_hat < edge_tol
    metadata = {
        "dummy_structure": cfg.dummy_structure,
        "moment_weighting": "equal weight per market x tier observation",
        "draw_sharing": "one uniform DrawSet shared across markets and intervals",
        "n_draws": cfg.n_draws if model == FOLDABLE else cfg.n_standard_draws,
        "draws_seed": draws.seed if model == FOLDABLE and draws is not None else None,
        "theta_bracket": list(cfg.theta_bracket),
        "grid_values": grid_values,
        "n_search_failures": n_failures,
        "seed": cfg.seed,
    }
    return EstimationResult(
        model=model,
        theta_hat=float(theta_hat),
        xi_hat=xi,
        delta_xi_hat=resid,
        gamma_hat=gamma,
        objective_value=float(value),
        contraction_iterations=int(iters),
        converged=True,
        at_bracket_edge=bool(at_edge),
        xi_by_group=xi_by_group,
        metadata=metadata,
    )


def estimate_standard_logit(
    panel: Panel,
    cfg: EstimationConfig | None = None,
    standard_draws: np.ndarray | None = None,
) -> EstimationResult:
    """The full-availability baseline estimator (same moment, logit shares)."""
    return estimate(panel, cfg, model=STANDARD, standard_draws=standard_draws)


def bootstrap_se(
    panel: Panel,
    cfg: EstimationConfig | None = None,
    *,
    model: str = FOLDABLE,
    reps: int | None = None,
    draws: DrawSet | None = None,
    standard_draws: np.ndarray | None = None,
) -> dict:
    """Market-level bootstrap standard errors for theta and xi.

    Resamples whole markets with replacement (respecting within-market
    dependence), re-runs the full estimation per replicate with the same
    draws, and reports the sample SD across converged replicates. Failing
    replicates are excluded and counted.
    """
    cfg = cfg or EstimationConfig()
    reps = cfg.bootstrap_reps if reps is None else reps
    if reps <= 0:
        raise ValueError("bootstrap needs at least one replication")
    draws, standard_draws = _prepare_draws(cfg, model, draws, standard_draws)
    _, _, k_boot = _derived_seeds(cfg.seed)
    rng = np.random.default_rng(k_boot)
    thetas: list[float] = []
    xis: list[np.ndarray] = []
    n_failed = 0
    for _ in range(reps):
        idx = rng.integers(0, panel.n_markets, size=panel.n_markets)
        sub = panel.subset(idx)
        try:
            res = estimate(
                sub, cfg, draws=draws, model=model, standard_draws=standard_draws
            )
        except (ContractionError, BracketError):
            n_failed += 1
            continue
        thetas.append(res.theta_hat)
        xis.append(res.xi_hat)
    if not thetas:
        raise RuntimeError(f"all {reps} bootstrap replications failed")
    ddof = 1 if len(thetas) > 1 else 0
    return {
        "theta_se": float(np.std(thetas, ddof=ddof)),
        "xi_se": np.std(np.stack(xis), axis=0, ddof=ddof),
        "reps_requested": reps,
        "reps_converged": len(thetas),
        "reps_failed": n_failed,
        "theta_reps": thetas,
    }
