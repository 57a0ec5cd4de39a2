"""Figures written next to the JSON/CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
    # keep files byte-stable across runs
    "svg.hashsalt": "paracone",
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {".png": {"Software": None},
            ".pdf": {"Creator": None, "Producer": None, "CreationDate": None},
            ".svg": {"Date": None}}.get(path.suffix.lower(), {})
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def plot_trace(trace, path, monotone_slack=None, title=None):
    """Raw and corrected quotients against t (log scale), one panel per component.

    With ``monotone_slack`` given, a last panel shows the pairwise monotonicity
    slack per t.
    """
    m = trace.raw.shape[1]
    panels = m + (monotone_slack is not None)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(panels, 1, figsize=(5.0, 1.9 * panels), sharex=True, squeeze=False)
        t = trace.t_values
        for c in range(m):
            ax = axes[c, 0]
            ax.plot(t, trace.raw[:, c], "o-", ms=2.5, lw=1, label="raw quotient")
            ax.plot(t, trace.corrected[:, c], "s--", ms=2.5, lw=1, label="corrected quotient")
            ax.set_ylabel(f"component {c + 1}")
            ax.axvline(trace.delta, color="0.6", lw=0.8, ls=":")
            ax.legend(loc="best", frameon=False)
        if monotone_slack is not None:
            ax = axes[-1, 0]
            s = np.asarray(monotone_slack, dtype=float)
            ax.plot(t, s, "^-", ms=2.5, lw=1, color="tab:green")
            ax.axhline(0.0, color="0.3", lw=0.6)
            ax.set_ylabel("min pair slack")
        axes[-1, 0].set_xscale("log")
        axes[-1, 0].set_xlabel("t")
        axes[0, 0].set_title(title or f"{trace.mapping}: quotients at x0={trace.x0.tolist()}")
        return _save(fig, path)


def plot_min_C_refinement(levels, values, path, title=None):
    """Estimated minimal constant against grid refinement level."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 2.6))
        ax.plot(levels, values, "o-", ms=3, lw=1)
        ax.set_xlabel("refinement level")
        ax.set_ylabel("estimated minimal C")
        if title:
            ax.set_title(title)
        return _save(fig, path)
