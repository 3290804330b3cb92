import json

import numpy as np
import pandas as pd
import pytest

from foldmenu.cli import main
from foldmenu.panel import Panel


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = main(
        ["simulate", "--out", str(out), "--seed", "4", "--markets", "40"]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def est_dir(tmp_path_factory, sim_dir):
    out = tmp_path_factory.mktemp("est")
    cfg = {"estimation": {"theta_bracket": [1.4, 3.5], "grid_points": 4}}
    cfg_path = out / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main(
        [
            "estimate",
            "--panel", str(sim_dir / "panel.csv"),
            "--out", str(out),
            "--config", str(cfg_path),
            "--seed", "8",
        ]
    )
    assert code == 0
    return out


def test_default_simulation_has_186_markets(tmp_path):
    out = tmp_path / "sim186"
    assert main(["simulate", "--out", str(out), "--seed", "0"]) == 0
    panel = Panel.from_csv(out / "panel.csv")
    assert panel.n_markets == 186
    truth = json.loads((out / "truth.json").read_text())
    assert truth["theta"] == 2.0
    assert (out / "run_config.json").exists()


def test_simulation_repeat_is_byte_identical(tmp_path, sim_dir):
    out = tmp_path / "again"
    assert main(["simulate", "--out", str(out), "--seed", "4", "--markets", "40"]) == 0
    assert (out / "panel.csv").read_bytes() == (sim_dir / "panel.csv").read_bytes()
    assert (out / "truth.json").read_bytes() == (sim_dir / "truth.json").read_bytes()


def test_estimate_recovers_truth_from_files(sim_dir, est_dir):
    result = json.loads((est_dir / "result.json").read_text())
    truth = json.loads((sim_dir / "truth.json").read_text())
    assert abs(result["theta_hat"] - truth["theta"]) < 0.6
    assert result["model"] == "foldable"
    assert (est_dir / "gamma.csv").exists()


def test_estimate_standard_model_underestimates(sim_dir, est_dir, tmp_path):
    out = tmp_path / "std"
    code = main(
        [
            "estimate",
            "--panel", str(sim_dir / "panel.csv"),
            "--out", str(out),
            "--model", "standard",
            "--seed", "8",
        ]
    )
    assert code == 0
    std = json.loads((out / "result.json").read_text())
    fold = json.loads((est_dir / "result.json").read_text())
    assert std["theta_hat"] < fold["theta_hat"]


def test_estimate_missing_column_is_input_error(tmp_path, sim_dir):
    broken = pd.read_csv(sim_dir / "panel.csv").drop(columns=["cpi"])
    path = tmp_path / "broken.csv"
    broken.to_csv(path, index=False)
    code = main(["estimate", "--panel", str(path), "--out", str(tmp_path / "x")])
    assert code == 1


def test_estimate_infeasible_bracket_is_numerical_error(tmp_path, sim_dir):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"estimation": {"theta_bracket": [0.01, 0.05]}}))
    out = tmp_path / "fail"
    code = main(
        [
            "estimate",
            "--panel", str(sim_dir / "panel.csv"),
            "--out", str(out),
            "--config", str(cfg),
        ]
    )
    assert code == 2
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["error"] == "BracketError"


def test_analyze_outputs(sim_dir, est_dir, tmp_path):
    out = tmp_path / "ana"
    cfg = tmp_path / "acfg.json"
    cfg.write_text(json.dumps({"analysis": {"unit_taxes": [12.0, 6.5, 4.4, 2.2, 1.1]}}))
    code = main(
        [
            "analyze",
            "--panel", str(sim_dir / "panel.csv"),
            "--result", str(est_dir),
            "--out", str(out),
            "--elasticities",
            "--uniform-price", "1.0",
            "--tax", "0,5,10,15,20",
            "--full-availability",
            "--assortment-dist",
            "--config", str(cfg),
        ]
    )
    assert code == 0
    elas = pd.read_csv(out / "elasticities.csv")
    assert set(elas["mode"]) == {"adjusted", "fixed_assortment", "adjustment", "closure"}
    assert np.all(elas[elas["mode"] == "closure"]["pct_change"] == 0.0)
    tax = pd.read_csv(out / "tax.csv")
    assert sorted(tax["rate_pct"].unique()) == [0.0, 5.0, 10.0, 15.0, 20.0]
    zero = tax[tax["rate_pct"] == 0.0]
    assert np.all(zero["value"] == 0.0)
    # four positive rates x (5 tiers + total) for sales and revenue
    per_tier = tax[(tax["rate_pct"] == 10.0) & (tax["metric"] == "sales_pct")]
    assert len(per_tier) == 5
    assert (out / "full_availability.csv").exists()
    dist = pd.read_csv(out / "assortment_distribution.csv")
    sums = dist.groupby("market_id")["mass"].sum()
    assert np.allclose(sums, 1.0, atol=1e-12)


def test_analyze_charts_written(sim_dir, est_dir, tmp_path):
    out = tmp_path / "charts"
    code = main(
        [
            "analyze",
            "--panel", str(sim_dir / "panel.csv"),
            "--result", str(est_dir),
            "--out", str(out),
            "--elasticities",
            "--uniform-price", "1.0",
            "--assortment-dist",
            "--charts",
        ]
    )
    assert code == 0
    for name in ("elasticities.png", "uniform_price.png", "assortment_distribution.png"):
        assert (out / name).stat().st_size > 0


def test_analyze_requires_result(tmp_path, sim_dir):
    code = main(
        [
            "analyze",
            "--panel", str(sim_dir / "panel.csv"),
            "--result", str(tmp_path / "nope"),
            "--out", str(tmp_path / "o"),
            "--elasticities",
        ]
    )
    assert code == 1


def test_analyze_without_flags_is_input_error(sim_dir, est_dir, tmp_path):
    code = main(
        [
            "analyze",
            "--panel", str(sim_dir / "panel.csv"),
            "--result", str(est_dir),
            "--out", str(tmp_path / "o2"),
        ]
    )
    assert code == 1


@pytest.fixture()
def scenario(tmp_path):
    cfg = {
        "firms": [
            {
                "id": "A",
                "products": [
                    {"id": "a1", "margin": 2.0, "price": 3.0, "delta": 1.0},
                    {"id": "a2", "margin": 1.5, "price": 2.0, "delta": 0.8},
                ],
            },
            {
                "id": "B",
                "products": [
                    {"id": "b1", "margin": 1.8, "price": 2.5, "delta": 0.9},
                ],
            },
        ],
        "random_coef": {"dispersions": [0.0, 0.5, 1.0], "draw_counts": [200]},
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(cfg))
    return path


def test_compete_monopoly_output(tmp_path):
    cfg = {
        "firms": [
            {
                "id": "Solo",
                "products": [
                    {"id": "s1", "margin": 2.0, "price": 3.0, "delta": 1.0},
                    {"id": "s2", "margin": 1.0, "price": 2.0, "delta": 0.5},
                ],
            }
        ]
    }
    path = tmp_path / "solo.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "comp"
    assert main(["compete", "--config", str(path), "--out", str(out)]) == 0
    payload = json.loads((out / "equilibrium.json").read_text())
    assert payload["nash_verified"] is True
    assert "Solo" in payload["equilibrium_depths"]


def test_compete_with_sweep(scenario, tmp_path):
    out = tmp_path / "comp2"
    code = main(
        [
            "compete",
            "--config", str(scenario),
            "--out", str(out),
            "--random-coef", "0.5,200",
            "--loss-sweep",
        ]
    )
    assert code == 0
    payload = json.loads((out / "equilibrium.json").read_text())
    assert payload["nash_verified"] is True
    assert set(payload["random_coef"]["per_firm_loss"]) == {"A", "B"}
    sweep = pd.read_csv(out / "loss_sweep.csv")
    zero = sweep[sweep["taste_dispersion"] == 0.0]
    assert np.all(zero["mean_loss"] == 0.0)
    assert {"taste_dispersion", "n_draws", "mean_loss", "max_loss"} <= set(
        sweep.columns
    )


def test_estimate_uses_group_dummies_when_panel_has_groups(tmp_path, sim_dir):
    panel = Panel.from_csv(sim_dir / "panel.csv")
    panel.groups = [f"prov{i % 5}" for i in range(panel.n_markets)]
    path = tmp_path / "grouped.csv"
    panel.to_csv(path)
    out = tmp_path / "gest"
    cfg = tmp_path / "gcfg.json"
    cfg.write_text(json.dumps({"estimation": {"theta_bracket": [1.4, 3.5], "grid_points": 3, "theta_tol": 5e-3}}))
    code = main(
        ["estimate", "--panel", str(path), "--out", str(out), "--config", str(cfg)]
    )
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["metadata"]["dummy_structure"] == "tier_by_group"
    assert set(result["xi_by_group"]) == {f"prov{i}" for i in range(5)}


def test_compete_overlapping_ownership_is_input_error(tmp_path):
    cfg = {
        "firms": [
            {"id": "A", "products": [{"id": "x", "margin": 1.0, "delta": 0.5}]},
            {"id": "B", "products": [{"id": "x", "margin": 0.9, "delta": 0.4}]},
        ]
    }
    path = tmp_path / "dup.json"
    path.write_text(json.dumps(cfg))
    code = main(["compete", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 1


def test_threads_flag_validated():
    assert main(["--threads", "0", "simulate", "--out", "/tmp/nowhere"]) == 1
