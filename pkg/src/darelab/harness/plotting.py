"""Figures written next to CSV output (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import RunRecord, SlopeFit  # noqa: E402


def plot_sweep(fits: Iterable[SlopeFit], path: Path, axis: str = "n") -> Path:
    """Log-log plot of mean L-term bits per protocol with the fitted lines."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for f in fits:
        xs = np.asarray(f.ns, dtype=float)
        (dots,) = ax.loglog(xs, f.means, "o", label=f"{f.protocol} (slope {f.slope:.2f})")
        grid = np.geomspace(xs.min(), xs.max(), 50)
        fitted = np.exp(f.intercept) * grid**f.slope
        ax.loglog(grid, fitted, "--", linewidth=1, color=dots.get_color())
    ax.set_xlabel(axis)
    ax.set_ylabel("L-proportional bits after GST")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_bits_by_kind(records: Iterable[RunRecord], path: Path) -> Path:
    """Stacked bar of post-GST bits per message kind, one bar per run."""
    records = list(records)
    kinds: list[str] = []
    rows = []
    for r in records:
        parts = dict(
            (k, int(v)) for k, v in (item.split(":") for item in r.bits_by_kind.split(";") if item)
        )
        rows.append(parts)
        kinds.extend(k for k in parts if k not in kinds)
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(records) + 3), 4.5))
    bottom = np.zeros(len(records))
    labels = [f"{r.protocol}\nn={r.n} s={r.seed}" for r in records]
    for k in sorted(kinds):
        vals = np.array([row.get(k, 0) for row in rows], dtype=float)
        ax.bar(labels, vals, bottom=bottom, label=k)
        bottom += vals
    ax.set_ylabel("bits sent after GST")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
