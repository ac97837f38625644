"""Figure rendering for the numeric report paths.

Figures are written straight to files with the Agg backend; nothing here
opens a window.  These are companions to the CSV outputs, not part of the
machine-readable report contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_embedding_sample", "plot_simulation"]


def plot_embedding_sample(sample, out_path: str):
    """Two-panel figure for a realization run: the first two ambient
    components of r over the sampled points, and the per-node worst Gram
    residual on a log scale."""
    E = sample.problem
    G = E.ambient.mat
    eta_f = E.potential.eta.to_float()
    mu_f = eta_f / float(E.c)
    m = sample.points.shape[0]
    res = np.empty(m)
    for k in range(m):
        R, Nn = sample.R[k], sample.Nn[k]
        res[k] = max(
            np.abs(R.T @ G @ R - eta_f).max(),
            np.abs(R.T @ G @ Nn).max(),
            np.abs(Nn.T @ G @ Nn - mu_f).max(),
        )

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    sc = ax1.scatter(sample.r[:, 0], sample.r[:, 1], c=np.arange(m), s=12, cmap="viridis")
    ax1.set_xlabel("r[0]")
    ax1.set_ylabel("r[1]")
    ax1.set_title("position vector, first two ambient components")
    fig.colorbar(sc, ax=ax1, label="visit order")
    ax2.semilogy(np.maximum(res, 1e-17), ".", markersize=3)
    ax2.set_xlabel("node (visit order)")
    ax2.set_ylabel("worst Gram residual")
    ax2.set_title("frame orthonormality drift")
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def plot_simulation(trajectory, grid, drifts_over_time, out_path: str):
    """Initial and final field profiles plus conserved-functional drift.

    drifts_over_time: list of (label, times, values) with values relative to
    the initial functional.
    """
    first, last = trajectory[0], trajectory[-1]
    x = grid.nodes()
    n = first.values.shape[1]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for i in range(n):
        (line,) = ax1.plot(x, last.values[:, i], label=f"u{i + 1}(t={last.time:g})")
        ax1.plot(x, first.values[:, i], linestyle="dashed", color=line.get_color(), alpha=0.5)
    ax1.set_xlabel("x")
    ax1.set_ylabel("fields")
    ax1.set_title("profiles, dashed = initial")
    ax1.legend(fontsize=8)

    for label, times, vals in drifts_over_time:
        ax2.semilogy(times, np.maximum(np.abs(vals), 1e-18), label=label)
    ax2.set_xlabel("t")
    ax2.set_ylabel("|H(t) - H(0)|")
    ax2.set_title("conserved functional drift")
    if drifts_over_time:
        ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
