"""Figure rendering for the report commands (file output only, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .rateengine import RegionResult  # noqa: E402


def plot_region(region: RegionResult, path: str,
                thresholds: dict[float, float] | None = None) -> str:
    """OT rate versus channel loss, one curve per storage rate."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, nu in enumerate(region.nus):
        ax.plot(region.mus, region.rates[i], marker=".", label=f"nu = {nu:g}")
        if thresholds and float(nu) in thresholds:
            ax.axvline(thresholds[float(nu)], linestyle=":", color=f"C{i}", alpha=0.6)
    ax.set_xlabel("channel loss")
    ax.set_ylabel("OT rate (bits / pulse)")
    ax.set_ylim(bottom=0.0)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_bounds(deltas: np.ndarray, curves: dict[str, np.ndarray], path: str) -> str:
    """Min-entropy rate bounds versus bin width."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, vals in curves.items():
        ax.plot(deltas, vals, marker=".", label=label)
    ax.set_xlabel("bin width (natural units)")
    ax.set_ylabel("min-entropy rate (bits / symbol)")
    ax.set_ylim(bottom=0.0)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_decode_iters(iters: list[int], n_failed: int, path: str) -> str:
    """Histogram of belief-propagation sweeps, failures called out in the title."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if iters:
        bins = np.arange(min(iters), max(iters) + 2) - 0.5
        ax.hist(iters, bins=bins, rwidth=0.85)
    ax.set_xlabel("decoder sweeps to convergence")
    ax.set_ylabel("frames")
    ax.set_title(f"{len(iters)} converged, {n_failed} failed")
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_run_outcomes(outcomes: list[tuple[int, bool]], path: str) -> str:
    """Per-run view of protocol sessions: choice bit and string agreement."""
    fig, ax = plt.subplots(figsize=(6.0, 2.8))
    if outcomes:
        xs = np.arange(len(outcomes))
        ts = np.array([t for t, _ in outcomes])
        ok = np.array([m for _, m in outcomes])
        ax.scatter(xs[ok], ts[ok], marker="o", color="C2", label="s_t matched")
        if np.any(~ok):
            ax.scatter(xs[~ok], ts[~ok], marker="x", color="C3", label="mismatch")
    ax.set_xlabel("run")
    ax.set_ylabel("choice bit t")
    ax.set_yticks([0, 1])
    ax.set_ylim(-0.5, 1.5)
    ax.legend(loc="center right")
    ax.grid(alpha=0.3, axis="x")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
