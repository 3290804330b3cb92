"""Command-line entry point: simulate, estimate, analyze, compete.

Each subcommand reads a JSON config (flags override config values), writes
its outputs plus the fully resolved config and seed into the output
directory, and is deterministic given (config, seed). Exit codes: 0 success,
1 input error, 2 numerical failure (with a diagnostics file when possible).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import analysis, charts
from .choice import Product, ProductLine
from .competition import (
    FirmProfile,
    RandomCoefSpec,
    equilibrium_profits,
    find_equilibrium,
    foldable_loss_random_coef,
    is_nash,
    loss_sweep,
)
from .dgp import DgpConfig, generate_panel
from .estimation import (
    FOLDABLE,
    STANDARD,
    BracketError,
    ContractionError,
    EstimationConfig,
    bootstrap_se,
    estimate,
)
from .panel import Panel, PanelSchemaError
from .reports import (
    load_estimation_result,
    save_estimation_result,
    write_tidy_csv,
)


class InputError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {p}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from exc


def _write_run_config(outdir: Path, command: str, resolved: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "run_config.json", "w") as fh:
        json.dump({"command": command, **resolved}, fh, indent=2, default=str)


def _apply_threads(threads: int | None) -> None:
    if threads is None:
        return
    if threads < 1:
        raise InputError("--threads must be >= 1")
    try:
        import numba

        numba.set_num_threads(threads)
    except ImportError:
        pass


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    dgp_section = dict(config.get("dgp", {}))
    if args.seed is not None:
        dgp_section["seed"] = args.seed
    if args.markets is not None:
        dgp_section["n_markets"] = args.markets
    for key in ("xi", "nominal_prices", "nominal_margins"):
        if key in dgp_section:
            dgp_section[key] = tuple(dgp_section[key])
    try:
        cfg = DgpConfig(**dgp_section)
    except TypeError as exc:
        raise InputError(f"bad dgp config: {exc}") from exc
    panel = generate_panel(cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    panel.to_csv(outdir / "panel.csv")
    with open(outdir / "truth.json", "w") as fh:
        json.dump(panel.truth_dict(), fh, indent=2)
    _write_run_config(outdir, "simulate", {"dgp": dgp_section, "seed": cfg.seed})
    print(f"wrote {panel.n_markets}-market panel to {outdir / 'panel.csv'}")
    return 0


def _estimation_config(config: dict, args) -> EstimationConfig:
    section = dict(config.get("estimation", {}))
    if args.seed is not None:
        section["seed"] = args.seed
    if "theta_bracket" in section:
        section["theta_bracket"] = tuple(section["theta_bracket"])
    try:
        return EstimationConfig(**section)
    except TypeError as exc:
        raise InputError(f"bad estimation config: {exc}") from exc


def cmd_estimate(args) -> int:
    config = _load_config(args.config)
    cfg = _estimation_config(config, args)
    panel = Panel.from_csv(args.panel)
    if panel.groups is not None and "dummy_structure" not in config.get(
        "estimation", {}
    ):
        # ingested panels with region labels get region-specific fixed
        # utilities unless the config says otherwise
        cfg.dummy_structure = "tier_by_group"
    model = FOLDABLE if args.model == "foldable" else STANDARD
    result = estimate(panel, cfg, model=model)
    if args.bootstrap:
        result.bootstrap_se = bootstrap_se(
            panel, cfg, model=model, reps=args.bootstrap
        )
    outdir = Path(args.out)
    save_estimation_result(result, panel, outdir)
    _write_run_config(
        outdir,
        "estimate",
        {
            "panel": str(args.panel),
            "model": args.model,
            "bootstrap": args.bootstrap,
            "estimation": cfg.__dict__,
            "seed": cfg.seed,
        },
    )
    xi = ", ".join(f"{v:.3f}" for v in result.xi_hat)
    print(
        f"{args.model}: theta_hat={result.theta_hat:.4f} xi_hat=[{xi}] "
        f"objective={result.objective_value:.3g}"
    )
    if result.at_bracket_edge:
        print("warning: theta_hat sits at the bracket edge", file=sys.stderr)
    if result.bootstrap_se:
        print(f"bootstrap theta SE: {result.bootstrap_se['theta_se']:.4f}")
    return 0


def _parse_rates(raw: str) -> list[float]:
    try:
        rates = [float(r) / 100.0 for r in raw.split(",") if r.strip() != ""]
    except ValueError as exc:
        raise InputError(f"bad --tax list {raw!r}") from exc
    if any(not 0 <= r < 1 for r in rates):
        raise InputError("tax rates must lie in [0, 100) percent")
    return rates


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    section = dict(config.get("analysis", {}))
    panel = Panel.from_csv(args.panel)
    result = load_estimation_result(args.result, panel)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    unit_taxes = section.get("unit_taxes")
    if unit_taxes is not None:
        unit_taxes = np.asarray(unit_taxes, dtype=float)
    wrote = []

    if args.elasticities:
        if result.model == FOLDABLE:
            parts = analysis.decompose_elasticities(result, panel)
            frames = [
                parts["adjusted"].to_frame(),
                parts["fixed_assortment"].to_frame(),
            ]
            adj = parts["adjusted"]
            extra = adj.to_frame().copy()
            extra["mode"] = "adjustment"
            extra["pct_change"] = parts["adjustment"].ravel()
            closure = adj.to_frame().copy()
            closure["mode"] = "closure"
            closure["pct_change"] = parts["closure"].ravel()
            frames += [extra, closure]
            table = pd.concat(frames, ignore_index=True)
            matrices = {
                "adjusted": parts["adjusted"],
                "fixed_assortment": parts["fixed_assortment"],
            }
        else:
            mat = analysis.elasticities(result, panel, analysis.STANDARD_LOGIT)
            table = mat.to_frame()
            matrices = {"standard_logit": mat}
        wrote.append(write_tidy_csv(table, outdir / "elasticities.csv"))
        if args.charts:
            charts.elasticity_chart(matrices, outdir / "elasticities.png")

    if args.uniform_price is not None:
        rep = analysis.uniform_price_change(result, panel, args.uniform_price)
        wrote.append(write_tidy_csv(rep.to_frame(), outdir / "uniform_price.csv"))
        if args.charts:
            charts.uniform_change_chart([rep], outdir / "uniform_price.png")

    if args.tax:
        frames = []
        for rate in _parse_rates(args.tax):
            rep = analysis.tax_counterfactual(
                result, panel, rate, unit_taxes=unit_taxes
            )
            frame = rep.to_frame()
            frame.insert(0, "rate_pct", round(rate * 100, 10))
            frames.append(frame)
            for note in rep.notes:
                print(f"note: {note}", file=sys.stderr)
        wrote.append(
            write_tidy_csv(pd.concat(frames, ignore_index=True), outdir / "tax.csv")
        )

    if args.full_availability:
        rep = analysis.full_availability(result, panel)
        wrote.append(
            write_tidy_csv(rep.to_frame(), outdir / "full_availability.csv")
        )

    if args.assortment_dist:
        dist = analysis.assortment_distribution(result, panel)
        wrote.append(write_tidy_csv(dist, outdir / "assortment_distribution.csv"))
        if args.charts:
            charts.assortment_income_chart(dist, outdir / "assortment_distribution.png")

    if not wrote:
        raise InputError(
            "nothing to do: pass --elasticities, --uniform-price, --tax, "
            "--full-availability, or --assortment-dist"
        )
    _write_run_config(
        outdir,
        "analyze",
        {
            "panel": str(args.panel),
            "result": str(args.result),
            "analysis": section,
            "flags": {
                "elasticities": args.elasticities,
                "uniform_price": args.uniform_price,
                "tax": args.tax,
                "full_availability": args.full_availability,
                "assortment_dist": args.assortment_dist,
            },
        },
    )
    for path in wrote:
        print(f"wrote {path}")
    return 0


def _load_scenario(config: dict) -> tuple[list[FirmProfile], dict[str, float]]:
    firm_specs = config.get("firms")
    if not firm_specs:
        raise InputError("compete config needs a non-empty 'firms' list")
    firms = []
    deltas: dict[str, float] = {}
    for spec in firm_specs:
        products = []
        for p in spec.get("products", []):
            products.append(
                Product(
                    id=str(p["id"]),
                    unit_margin=float(p["margin"]),
                    retail_price=float(p.get("price", 1.0)),
                )
            )
            if p["id"] in deltas:
                raise InputError(f"product {p['id']!r} appears twice in the scenario")
            deltas[str(p["id"])] = float(p["delta"])
        try:
            firms.append(FirmProfile(str(spec["id"]), ProductLine(products)))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad firm spec: {exc}") from exc
    return firms, deltas


def cmd_compete(args) -> int:
    config = _load_config(args.config)
    firms, deltas = _load_scenario(config)
    try:
        point = find_equilibrium(firms, deltas)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    check_subsets = all(f.owned.size <= 12 for f in firms)
    verification = is_nash(point, firms, deltas, all_subsets=check_subsets)
    profits = equilibrium_profits(firms, deltas, point)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "equilibrium_depths": {
            f.firm_id: point.depths[n] for n, f in enumerate(firms)
        },
        "per_firm_profit": profits,
        "nash_verified": verification.is_nash,
        "all_subset_deviations_checked": check_subsets,
        "deviations": verification.deviations,
    }
    if args.random_coef:
        try:
            a_str, n_str = args.random_coef.split(",")
            spec = RandomCoefSpec(
                n_draws=int(n_str),
                taste_dispersion=float(a_str),
                seed=config.get("random_coef", {}).get("seed", 0),
            )
        except ValueError as exc:
            raise InputError(f"bad --random-coef {args.random_coef!r}") from exc
        losses = foldable_loss_random_coef(firms, deltas, spec)
        payload["random_coef"] = {
            "taste_dispersion": spec.taste_dispersion,
            "n_draws": spec.n_draws,
            "per_firm_loss": {
                f.firm_id: float(losses[n]) for n, f in enumerate(firms)
            },
        }
    with open(outdir / "equilibrium.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    if args.loss_sweep:
        rc_cfg = config.get("random_coef", {})
        rows = loss_sweep(
            firms,
            deltas,
            dispersions=rc_cfg.get("dispersions", (0.0, 0.5, 1.0, 2.0, 5.0)),
            draw_counts=rc_cfg.get("draw_counts", (1000, 2000)),
            seed=rc_cfg.get("seed", 0),
        )
        write_tidy_csv(pd.DataFrame(rows), outdir / "loss_sweep.csv")
        if args.charts:
            charts.loss_sweep_chart(rows, outdir / "loss_sweep.png")
    _write_run_config(outdir, "compete", {"config": str(args.config)})
    depths = ", ".join(f"{f.firm_id}:{point.depths[n]}" for n, f in enumerate(firms))
    print(f"equilibrium depths: {depths} (nash={verification.is_nash})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foldmenu",
        description="Demand estimation under price rigidity and endogenous menus",
    )
    parser.add_argument("--threads", type=int, default=None, help="cap worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic market panel")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--markets", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit the demand model to a panel CSV")
    p.add_argument("--panel", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=["foldable", "standard"], default="foldable")
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("analyze", help="post-estimation elasticities and counterfactuals")
    p.add_argument("--panel", required=True)
    p.add_argument("--result", required=True, help="result.json or its directory")
    p.add_argument("--out", required=True)
    p.add_argument("--elasticities", action="store_true")
    p.add_argument("--uniform-price", type=float, default=None, metavar="PCT")
    p.add_argument("--tax", default=None, metavar="PCTS", help="e.g. 5,10,15,20")
    p.add_argument("--full-availability", action="store_true")
    p.add_argument("--assortment-dist", action="store_true")
    p.add_argument("--charts", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compete", help="solve an assortment-competition scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--random-coef", default=None, metavar="A,N")
    p.add_argument("--loss-sweep", action="store_true")
    p.add_argument("--charts", action="store_true")
    p.set_defaults(func=cmd_compete)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads(args.threads)
        return args.func(args)
    except (InputError, PanelSchemaError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (ContractionError, BracketError, RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        out = getattr(args, "out", None)
        if out:
            outdir = Path(out)
            outdir.mkdir(parents=True, exist_ok=True)
            with open(outdir / "diagnostics.json", "w") as fh:
                json.dump(
                    {
                        "error": type(exc).__name__,
                        "message": str(exc),
                        "command": args.command,
                    },
                    fh,
                    indent=2,
                )
        return 2


if __name__ == "__main__":
    sys.exit(main())
