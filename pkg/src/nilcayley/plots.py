"""Figure rendering for comparison and scaling reports.

Figures are rendered straight to files with the Agg backend so report
commands work headless; the numeric tables stay the primary output and the
figures sit alongside them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import CompareReport, FiltrationScalingRow


def render_cdf_comparison(
    report: CompareReport,
    path: Path,
    label_a: str = "A",
    label_b: str = "B",
) -> Path:
    """Step plot of both empirical CDFs with the KS distance in the title."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 5))
    for dist, label, color in (
        (report.dist_a, label_a, "tab:blue"),
        (report.dist_b, label_b, "tab:orange"),
    ):
        n = dist.count
        ax.step(
            dist.values,
            [(i + 1) / n for i in range(n)],
            where="post",
            label=f"{label} (n={n})",
            color=color,
        )
    ax.set_xlabel("rescaled diameter")
    ax.set_ylabel("empirical CDF")
    ax.set_title(f"KS distance = {report.ks:.4f}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_filtration_scaling(
    rows: Sequence[FiltrationScalingRow],
    slopes: Dict[int, float],
    path: Path,
) -> Path:
    """Log-log plot of mean layer diameters against q, one line per layer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    layers = sorted({r.i for r in rows})
    fig, ax = plt.subplots(figsize=(7, 5))
    for i in layers:
        pts = sorted((r.q, r.mean_diam) for r in rows if r.i == i)
        qs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if all(y == 0 for y in ys):
            continue
        slope = slopes.get(i)
        label = f"layer {i}" + (f" (slope {slope:.3f})" if slope is not None else "")
        ax.plot(qs, ys, marker="o", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("q")
    ax.set_ylabel("mean layer diameter")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
