"""Figures for capacity sweeps, written next to the CSV output."""
from __future__ import annotations

from itertools import groupby

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "mbat",
}


def _save(fig, path):
    # no timestamps, so reruns give identical files
    fmt = str(path).rsplit(".", 1)[-1].lower()
    metadata = {"Date": None} if fmt in ("svg", "pdf") else {"Software": None}
    fig.savefig(path, metadata=metadata)
    plt.close(fig)


def _groups(rows):
    key = lambda r: (int(r["S"]), int(r["N"]))  # noqa: E731
    return [(k, sorted(g, key=lambda r: int(r["D"]))) for k, g in groupby(sorted(rows, key=key), key=key)]


def plot_simulation(rows, path, title=None):
    """Top-S recall and error-free fraction against D, one panel per (S, N)."""
    groups = _groups(rows)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(groups), figsize=(4.2 * len(groups), 3.2), squeeze=False)
        for ax, ((S, N), cells) in zip(axes[0], groups):
            D = [int(r["D"]) for r in cells]
            ax.plot(D, [float(r["fracBundledInTopS"]) for r in cells], "o-", ms=3, label=f"bundled in top {S}")
            ax.plot(D, [float(r["fracErrorFreeTrials"]) for r in cells], "s-", ms=3, label="error-free trials")
            ax.plot(D, [float(r["linearizedP"]) for r in cells], "--", color="0.4", lw=1, label="1 - NS T(Z)")
            ax.set_xlabel("dimension D")
            ax.set_ylabel("fraction")
            ax.set_ylim(-0.02, 1.02)
            ax.set_title(title or f"S={S}, N={N:,}, {cells[0]['trials']} trials")
            ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_analytic(rows, path):
    """Linearized and exact error-free probability against D."""
    groups = _groups(rows)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(groups), figsize=(4.2 * len(groups), 3.2), squeeze=False)
        for ax, ((S, N), cells) in zip(axes[0], groups):
            D = [int(r["D"]) for r in cells]
            ax.plot(D, [float(r["linearizedP"]) for r in cells], "-", label="1 - NS T(Z)")
            ax.plot(D, [float(r["exactP"]) for r in cells], "--", label="(1 - T(Z))^NS")
            ax.set_xlabel("dimension D")
            ax.set_ylabel("P(error-free)")
            ax.set_ylim(-0.02, 1.02)
            ax.set_title(f"S={S}, N={N:,}")
            ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        _save(fig, path)
