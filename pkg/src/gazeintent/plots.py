"""Figure rendering for evaluation reports.

Every report path that writes delimited output can also drop a figure
next to it; these helpers keep the styling in one place. Rendering is
headless (Agg) and the output format follows the file extension
(.svg / .png / .pdf).
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import AccuracyCurve  # noqa: E402

_COLORS = {"pick": "tab:red", "place": "tab:blue", "baseline": "black"}


def plot_accuracy_curves(
    curves: list[tuple[str, AccuracyCurve]],
    out_path,
    chance: float | None = None,
    title: str | None = None,
) -> None:
    """Accuracy vs. anticipation offset, one line per labeled curve."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, curve in curves:
        color = _COLORS.get(label.split()[0].lower())
        ax.plot(curve.t_prior, curve.accuracy, label=label, color=color)
    if chance is not None:
        ax.axhline(chance, linestyle="--", color="black", linewidth=1,
                   label=f"chance ({chance:.2f})")
    ax.set_xlabel("anticipation offset before action (s)")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.invert_xaxis()  # action time sits at the right edge
    if title:
        ax.set_title(title)
    ax.legend(loc="lower left", fontsize=9)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def plot_simulation_report(reports: dict[str, dict], out_path) -> None:
    """Bar chart of match rate and corrective moves per behavior mode."""
    modes = list(reports)
    match = [reports[m]["match_rate"] for m in modes]
    corrective = [reports[m]["corrective_moves"] for m in modes]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.5, 3.2))
    ax1.bar(modes, match, color="tab:blue")
    ax1.set_ylabel("commit = executed target rate")
    ax1.set_ylim(0, 1)
    ax2.bar(modes, corrective, color="tab:red")
    ax2.set_ylabel("corrective moves")
    for ax in (ax1, ax2):
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
