"""Figure rendering for sweep tables and correlation studies.

Figures are written as PNG files next to the delimited output.  matplotlib
is imported lazily with the Agg backend so headless runs and non-plotting
code paths never pay for it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .evaluation import CellResult, PairRecord


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _group_key(r: CellResult):
    return (r.variant, r.alpha, r.sigma2)


def _slug(variant, alpha, sigma2) -> str:
    alpha_part = "" if alpha is None else f"_alpha{alpha:g}"
    return f"{variant.value}{alpha_part}_sigma2_{sigma2:g}"


def render_sweep_figures(rows: list[CellResult], out_dir: str | Path) -> list[Path]:
    """Accuracy and estimated-count plots, one pair per (variant, alpha, sigma2).

    Accuracy panels show the exact and covered fractions against the
    interference weight with one curve per sample size; count panels show
    the mean number of detected resources.
    """
    plt = _plt()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    groups = sorted({_group_key(r) for r in rows}, key=str)
    for variant, alpha, sigma2 in groups:
        cells = [r for r in rows if _group_key(r) == (variant, alpha, sigma2)]
        t_values = sorted({r.t for r in cells})
        slug = _slug(variant, alpha, sigma2)

        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for t in t_values:
            pts = sorted((r.w_s, r) for r in cells if r.t == t)
            ws = [p[0] for p in pts]
            ax.plot(ws, [p[1].exact_fraction for p in pts], marker="o", label=f"exact, T={t}")
            ax.plot(
                ws,
                [p[1].covered_fraction for p in pts],
                marker="s",
                linestyle="--",
                label=f"covered, T={t}",
            )
        ax.set_xlabel("interference weight $w_S$")
        ax.set_ylabel("fraction of resources")
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7, ncol=2)
        ax.set_title(f"detection accuracy ({slug})", fontsize=10)
        fig.tight_layout()
        path = out_dir / f"accuracy_{slug}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for t in t_values:
            pts = sorted((r.w_s, r.estimated_count) for r in cells if r.t == t)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"T={t}")
        ax.set_xlabel("interference weight $w_S$")
        ax.set_ylabel("mean detected resource count")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        ax.set_title(f"estimated number of shared resources ({slug})", fontsize=10)
        fig.tight_layout()
        path = out_dir / f"estimated_count_{slug}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_corr_figures(records: list[PairRecord], out_dir: str | Path) -> list[Path]:
    """Histograms and jittered scatter plots of pairwise PCC vs SRCC.

    Sharing and non-sharing pairs are drawn separately; scatter points are
    placed at a fixed-seed uniform y jitter and colored by the stage-1
    outcome of the corresponding graph.
    """
    plt = _plt()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    srcc = np.array([r.srcc for r in records])
    pcc = np.array([r.pcc for r in records])
    sharing = np.array([r.sharing for r in records])

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharey=True)
    for ax, vals, name in ((axes[0], pcc, "PCC"), (axes[1], srcc, "SRCC")):
        bins = np.linspace(min(-0.3, vals.min()), max(0.6, vals.max()), 60)
        ax.hist(vals[~sharing], bins=bins, alpha=0.6, label="non-sharing")
        ax.hist(vals[sharing], bins=bins, alpha=0.6, label="sharing")
        ax.set_xlabel(name)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    axes[0].set_ylabel("pair count")
    fig.suptitle("pairwise correlation coefficients", fontsize=10)
    fig.tight_layout()
    path = out_dir / "corr_histograms.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    jitter = np.random.default_rng(0).uniform(size=len(records))
    colors = {"correct": "tab:blue", "missed": "tab:red", "false_positive": "tab:orange"}
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharey=True)
    for ax, vals, outcomes, name in (
        (axes[0], pcc, [r.pcc_outcome for r in records], "PCC"),
        (axes[1], srcc, [r.srcc_outcome for r in records], "SRCC"),
    ):
        outcomes = np.array(outcomes)
        for label, color in colors.items():
            for share, marker in ((False, "."), (True, "x")):
                mask = (outcomes == label) & (sharing == share)
                if not mask.any():
                    continue
                tag = ("sharing" if share else "non-sharing") + (
                    "" if label == "correct" else f" ({label.replace('_', ' ')})"
                )
                ax.scatter(vals[mask], jitter[mask], s=12, marker=marker, c=color, label=tag)
        ax.set_xlabel(name)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=6)
    axes[0].set_ylabel("uniform jitter")
    fig.suptitle("stage-1 outcomes by coefficient", fontsize=10)
    fig.tight_layout()
    path = out_dir / "corr_scatter.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
