"""Static figures for Monte Carlo reports.

All functions take plain arrays, draw onto a fresh figure with the Agg
backend and save it to ``path``; nothing is shown interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_null_distribution(support, pmf, pdf, path, title=None):
    """Bars for the pmf of the integer statistic, line for the limit density."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar(support, pmf, width=0.8, color="0.75", edgecolor="0.4", label="simulated pmf")
        if pdf is not None:
            ax.plot(support, pdf, color="C3", lw=1.8, label="limit pdf")
        ax.set_xlabel(r"$2\Delta\sqrt{k}\,D$")
        ax.set_ylabel("probability")
        ax.set_xlim(left=-0.5)
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_pp(p_values, path, title=None):
    """PP-plot of p-values against the uniform distribution."""
    p = np.sort(np.asarray(p_values, dtype=float))
    expected = np.arange(1, len(p) + 1) / (len(p) + 1)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.plot([0, 1], [0, 1], color="0.6", lw=1, ls="--")
        ax.plot(expected, p, color="C0", lw=1.5)
        ax.set_xlabel("uniform quantile")
        ax.set_ylabel("sorted p-value")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_aspect("equal")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_power(thetas, rates, ses, alpha, path, title=None):
    """Rejection rate against the distortion parameter, with 2-SE bars."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.errorbar(thetas, rates, yerr=2 * np.asarray(ses), marker="o", color="C0",
                    capsize=3, lw=1.5)
        ax.axhline(alpha, color="0.6", ls="--", lw=1)
        ax.set_xlabel(r"$\theta$")
        ax.set_ylabel(f"rejection rate at level {alpha:g}")
        ax.set_ylim(0, 1.02)
        if title:
            ax.set_title(title)
        return _save(fig, path)
