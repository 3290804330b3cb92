"""Optional static charts for analysis and competition outputs."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd


def _axes(n_rows=1, n_cols=1, width=5.0, height=3.6):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(n_rows, n_cols, figsize=(width * n_cols, height * n_rows))
    return fig, axes


def elasticity_chart(matrices: dict, path) -> Path:
    """Grouped bars of sales responses per price-raising tier, one panel per mode."""
    fig, axes = _axes(1, len(matrices))
    if len(matrices) == 1:
        axes = [axes]
    for ax, (label, mat) in zip(axes, matrices.items()):
        j = mat.entries.shape[0]
        x = np.arange(j)
        width = 0.8 / j
        for k in range(j):
            ax.bar(x + k * width, mat.entries[:, k], width, label=f"tier {k + 1}")
        ax.set_xticks(x + 0.4 - width / 2)
        ax.set_xticklabels([f"p{a + 1}+{mat.pct:g}%" for a in range(j)])
        ax.set_ylabel("% change in sales")
        ax.set_title(label)
        ax.axhline(0, color="black", lw=0.6)
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return Path(path)


def uniform_change_chart(reports: list, path) -> Path:
    """Per-tier sales changes for all-price moves, one bar group per scenario."""
    fig, ax = _axes()
    n = len(reports)
    j = len(reports[0].tier_sales_pct)
    x = np.arange(j)
    width = 0.8 / n
    for i, rep in enumerate(reports):
        ax.bar(x + i * width, rep.tier_sales_pct, width, label=rep.scenario)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels([f"tier {k + 1}" for k in range(j)])
    ax.set_ylabel("% change in sales")
    ax.axhline(0, color="black", lw=0.6)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return Path(path)


def assortment_income_chart(dist: pd.DataFrame, path) -> Path:
    """Menu-depth mass against market income, one line per depth."""
    fig, ax = _axes()
    for depth, sub in dist.groupby("menu_depth"):
        sub = sub.sort_values("income_log_mean")
        ax.plot(
            sub["income_log_mean"],
            100.0 * sub["mass"],
            marker=".",
            ms=3,
            lw=0.8,
            label=f"depth {depth}",
        )
    ax.set_xlabel("market log real income (mean)")
    ax.set_ylabel("% of consumers")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return Path(path)


def loss_sweep_chart(rows: list[dict], path) -> Path:
    """Foldable-menu profit loss against taste dispersion, one line per draw count."""
    fig, ax = _axes()
    frame = pd.DataFrame(rows)
    for n, sub in frame.groupby("n_draws"):
        sub = sub.sort_values("taste_dispersion")
        ax.plot(
            sub["taste_dispersion"],
            100.0 * sub["mean_loss"],
            marker="o",
            label=f"{n} draws",
        )
    ax.set_xlabel("taste dispersion")
    ax.set_ylabel("% profit loss from foldable restriction")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return Path(path)
