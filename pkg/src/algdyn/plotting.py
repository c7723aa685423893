"""Report figures. Rendering is headless and byte-stable for fixed input."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
    "svg.hashsalt": "algdyn",
}

_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_growth(indices: Sequence[int], values: Sequence[float], path, oracle: float | None = None,
                oracle_label: str = "oracle", title: str = "") -> Path:
    """``log|Fix| / index`` against index, with the limit as a reference line."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(indices, values, "o-", ms=3, lw=1, label="log count / index")
        if oracle is not None:
            ax.axhline(oracle, color="k", ls="--", lw=0.8, label=oracle_label)
        ax.set_xlabel("quotient index")
        ax.set_ylabel("log count / index")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_marginal(labels: Sequence[str], probs: Sequence[float], path, title: str = "",
                  other: Sequence[float] | None = None, other_label: str = "") -> Path:
    """Bar chart of window-tuple frequencies, optionally against a second law."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.3 * len(labels)), 3.8))
        xs = range(len(labels))
        width = 0.4 if other is not None else 0.8
        ax.bar([x - width / 2 if other is not None else x for x in xs], probs, width=width, label="sample")
        if other is not None:
            ax.bar([x + width / 2 for x in xs], other, width=width, label=other_label)
            ax.legend()
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=90, fontsize=6)
        ax.set_ylabel("frequency")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_microcount(epsilons: Sequence[float], rates: Sequence[float], path,
                    bounds: Sequence[float | None] | None = None, fix_rate: float | None = None,
                    title: str = "") -> Path:
    """Per-index log model counts against epsilon."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(epsilons, rates, "o-", ms=3, lw=1, label="log count / N")
        if bounds is not None:
            pts = [(e, b) for e, b in zip(epsilons, bounds) if b is not None]
            if pts:
                ax.plot(*zip(*pts), "s--", ms=3, lw=0.8, label="upper bound / N")
        if fix_rate is not None:
            ax.axhline(fix_rate, color="k", ls=":", lw=0.8, label="log |Fix| / N")
        ax.set_xscale("log")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("per-index log count")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)
