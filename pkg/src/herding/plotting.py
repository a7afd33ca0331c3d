"""Static figures for runs and sweeps, written to files with the Agg backend."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import Classification  # noqa: E402
from .simulator import RunLog  # noqa: E402

CLASS_COLORS = {
    Classification.SUCCESS.value: "#b7e4a1",
    Classification.COALITION_LOSS.value: "#f6e58d",
    Classification.FAILURE.value: "#f4a6a6",
}


def plot_trajectories(log: RunLog, path, stride: int = 5) -> None:
    """Herd and herder paths with start and end markers, plus the reference path."""
    fig, ax = plt.subplots(figsize=(7, 6))
    ks = slice(None, None, stride)
    exp = log.exponential
    for j in range(log.m):
        color = "tab:orange" if exp[j] else "0.55"
        ax.plot(log.evaders[ks, j, 0], log.evaders[ks, j, 1], color=color, lw=0.4, alpha=0.6)
    for i in range(log.n):
        ax.plot(log.herders[ks, i, 0], log.herders[ks, i, 1], color="tab:blue", lw=0.8)
    ax.plot(log.ref_position[:, 0], log.ref_position[:, 1], "r--", lw=1.2, label="reference")
    ax.scatter(*log.evaders[0].T, s=6, c="tab:green", label="evaders, start")
    ax.scatter(*log.evaders[-1].T, s=6, c="k", label="evaders, end")
    ax.scatter(*log.herders[0].T, marker="s", s=20, facecolors="none", edgecolors="tab:blue", label="herders, start")
    ax.scatter(*log.herders[-1].T, marker="s", s=20, c="tab:blue", label="herders, end")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_timeseries(log: RunLog, path, window=None) -> None:
    """Centroid error, herd spread and ||h|| against time (log scale)."""
    c = log.centroids
    err = np.hypot(*(c - log.ref_position).T)
    dev = log.evaders - c[:, None, :]
    spread = np.mean(np.sum(dev**2, axis=2), axis=1)
    fig, axes = plt.subplots(3, 1, figsize=(7, 7), sharex=True)
    for ax, y, label in zip(axes, (err, spread, log.h_norm), ("|x_c - x*| [m]", "mean sq. dev. [m^2]", "||h|| [m/s]")):
        ax.semilogy(log.t, np.maximum(y, 1e-12), lw=0.8)
        ax.set_ylabel(label)
        if window is not None:
            ax.axvspan(*window, color="0.9", zorder=0)
    axes[-1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_run(log: RunLog, out_dir, window=None, stride: int = 5) -> list[str]:
    paths = [os.path.join(out_dir, "trajectories.png"), os.path.join(out_dir, "timeseries.png")]
    plot_trajectories(log, paths[0], stride)
    plot_timeseries(log, paths[1], window)
    return paths


_SEVERITY = [Classification.SUCCESS.value, Classification.COALITION_LOSS.value, Classification.FAILURE.value]


def _fmt(v) -> str:
    return "nan" if v is None or not np.isfinite(v) else f"{v:.2e}"


def plot_sweep_grid(rows: list[dict], path) -> None:
    """One colored table per model mix: rows m, columns n.

    A cell takes the color of its worst seed and shows the median
    ``l_mu | l_sigma`` over seeds with the count of Success seeds.
    """
    mixes = sorted({r["mix"] for r in rows})
    fig, axes = plt.subplots(1, len(mixes), figsize=(4.5 * len(mixes), 4), squeeze=False)
    for ax, mix in zip(axes[0], mixes):
        sub = [r for r in rows if r["mix"] == mix]
        ms = sorted({r["m"] for r in sub})
        ns = sorted({r["n"] for r in sub})
        ax.set_xlim(0, len(ns))
        ax.set_ylim(len(ms), 0)
        for m in ms:
            for n in ns:
                cell = [r for r in sub if r["m"] == m and r["n"] == n]
                if not cell:
                    continue
                worst = max(cell, key=lambda r: _SEVERITY.index(r["classification"])
                            if r["classification"] in _SEVERITY else len(_SEVERITY))["classification"]
                x, y = ns.index(n), ms.index(m)
                ax.add_patch(plt.Rectangle((x, y), 1, 1, facecolor=CLASS_COLORS.get(worst, "0.8"), edgecolor="w"))
                med = lambda key: float(np.median([np.nan if r[key] is None else r[key] for r in cell]))
                ok = sum(r["classification"] == Classification.SUCCESS.value for r in cell)
                ax.text(x + 0.5, y + 0.5, f"{_fmt(med('l_mu'))} | {_fmt(med('l_sigma'))}\n{ok}/{len(cell)} ok",
                        ha="center", va="center", fontsize=6)
        ax.set_xticks(np.arange(len(ns)) + 0.5, [f"n={n}" for n in ns])
        ax.set_yticks(np.arange(len(ms)) + 0.5, [f"m={m}" for m in ms])
        ax.set_title(mix, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
