"""Matplotlib figure rendering for simulation and projection reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_state_trajectory(trace, lc=None, path=None):
    """State components vs. time plus, for n >= 2, the (x1, x2) phase plot
    with limit-cycle points marked."""
    n = trace.x.shape[1]
    ncols = 2 if n >= 2 else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5.0 * ncols, 3.6))
    axes = np.atleast_1d(axes)
    ax = axes[0]
    for i in range(n):
        ax.plot(trace.x[:, i], lw=0.9, label=f"x{i + 1}")
    ax.set_xlabel("k")
    ax.set_ylabel("state")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    if n >= 2:
        ax = axes[1]
        ax.plot(trace.x[:, 0], trace.x[:, 1], lw=0.7, color="C0")
        if lc is not None:
            pts = np.stack(lc.rho)
            ax.plot(pts[:, 0], pts[:, 1], "rx", ms=9, mew=2, label="limit cycle")
            ax.legend(loc="best", fontsize=8)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return fig


def plot_lyapunov(trace, path=None):
    """Lyapunov value vs. time, log scale on the time axis, level 1 marked."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    k = np.arange(trace.V.shape[0])
    ax.semilogx(np.maximum(k, 1), trace.V, lw=0.9)
    ax.axhline(1.0, color="r", ls="--", lw=0.8, label="V = 1")
    ax.set_xlabel("k (log scale)")
    ax.set_ylabel("V")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return fig


def plot_ellipsoids(ellipsoids, lc=None, trace=None, path=None, dims=(0, 1)):
    """Attractor ellipsoids projected onto two state coordinates."""
    i0, i1 = dims
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    if ellipsoids and ellipsoids[0].center.shape[0] == 1:
        # scalar state: intervals stacked by cycle index
        for idx, e in enumerate(ellipsoids):
            pts = e.boundary_points()
            ax.plot(pts[:, 0], [idx + 1] * len(pts), "|-", ms=14, label=f"E{idx + 1}")
            ax.plot(e.center[0], idx + 1, "rx", ms=9, mew=2)
        ax.set_xlabel("x1")
        ax.set_ylabel("cycle index")
        ax.legend(loc="best", fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        if path is not None:
            fig.savefig(path, dpi=150)
            plt.close(fig)
        return fig
    for idx, e in enumerate(ellipsoids):
        pts = e.boundary_points(512)
        ax.plot(pts[:, i0], pts[:, i1], ".", ms=1.5, label=f"E{idx + 1}")
        ax.plot(e.center[i0], e.center[i1], "rx", ms=9, mew=2)
    if trace is not None:
        ax.plot(trace.x[:, i0], trace.x[:, i1], lw=0.5, color="0.4", alpha=0.7)
    ax.set_xlabel(f"x{i0 + 1}")
    ax.set_ylabel(f"x{i1 + 1}")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return fig
