"""Rendered reports: matplotlib figures and delimited summaries.

Evaluation runs write a JSON report plus, next to it, a histogram CSV
and two PNG figures (selected-score histogram, solver convergence
trace).  Rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import MetricsReport

__all__ = ["write_histogram_csv", "render_histogram", "render_trace"]


def write_histogram_csv(path: str, report: MetricsReport) -> None:
    """Bin table ``bin_lo,bin_hi,count`` for the selected-score histogram."""
    from .fileio import atomic_write_text

    edges = report.histogram_edges
    lines = ["bin_lo,bin_hi,count"]
    for i, count in enumerate(report.histogram_counts.tolist()):
        lines.append(f"{edges[i]!r},{edges[i + 1]!r},{count}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def render_histogram(path: str, report: MetricsReport) -> None:
    """Bar chart of the selected samples' raw-score distribution."""
    edges = report.histogram_edges
    counts = report.histogram_counts
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(
        edges[:-1],
        counts,
        width=np.diff(edges),
        align="edge",
        color="#4878cf",
        edgecolor="white",
    )
    ax.set_xlabel("raw score")
    ax.set_ylabel("selected samples")
    ax.set_title("Score distribution of the selection")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_trace(path: str, trace: np.ndarray) -> None:
    """Convergence plot: per-iteration L1 change of the iterate."""
    trace = np.asarray(trace, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if trace.size:
        ax.plot(np.arange(1, trace.size + 1), trace, marker="o", ms=3, lw=1.2)
        positive = trace > 0
        if positive.any() and trace[positive].min() < trace.max() / 100:
            ax.set_yscale("log")
    else:
        ax.text(0.5, 0.5, "no iterations recorded", ha="center", va="center")
    ax.set_xlabel("iteration")
    ax.set_ylabel(r"L1 change of iterate")
    ax.set_title("Solver convergence")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
