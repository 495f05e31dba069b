"""Matplotlib figures written to files (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .align import AlignmentTrace  # noqa: E402
from .batch import BatchReport  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_success_rates(report: BatchReport, path) -> Path:
    """Bar chart of docking success rate per controller with 95% Wilson error bars."""
    names = [r.controller for r in report.rows]
    rates = np.array([r.rate for r in report.rows])
    err = np.array([[r.rate - r.ci_low for r in report.rows], [r.ci_high - r.rate for r in report.rows]])
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar(names, rates, yerr=err, capsize=4, color="#4c72b0")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("docking success rate")
    n = report.rows[0].n_trials if report.rows else 0
    ax.set_title(f"{report.rows[0].terrain if report.rows else ''}, n = {n} per controller")
    return _save(fig, path)


def plot_gz(t: Sequence[float], gz: Sequence[float], docking: Sequence[int], path, title: str = "") -> Path:
    """Platform ``g_z`` over time, with the docking-flag interval shaded."""
    t, gz, docking = np.asarray(t), np.asarray(gz), np.asarray(docking)
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t, gz, lw=1.5)
    on = docking > 0
    if on.any():
        ax.fill_between(t, -1.02, np.max(gz) + 0.01, where=on, color="0.85", step="post", label="D = 1")
        ax.legend(loc="lower right")
    ax.axhline(-1.0, color="k", lw=0.7, ls="--")
    ax.set_xlabel("t (s)")
    ax.set_ylabel("g_z")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_alignment(trace: AlignmentTrace, path) -> Path:
    return plot_gz(trace.t, trace.g[:, 2], trace.docking, path,
                   title=f"incline {trace.incline:.2f} rad")


def plot_trajectory(steps: Sequence[tuple], d_s: float, path) -> Path:
    """Top-down UAV/tag paths and the horizontal offset ``r(t)`` against ``d_s``."""
    arr = np.array([(s[0], s[3], s[4], s[6], s[7], s[10]) for s in steps], dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.5))
    if len(arr):
        ax1.plot(arr[:, 3], arr[:, 4], label="tag")
        ax1.plot(arr[:, 1], arr[:, 2], label="UAV")
        ax1.set_aspect("equal", adjustable="datalim")
        ax2.plot(arr[:, 0], arr[:, 5])
    ax1.set_xlabel("x (m)")
    ax1.set_ylabel("y (m)")
    ax1.legend()
    ax2.axhline(d_s, color="r", ls="--", label="d_s")
    ax2.set_xlabel("t (s)")
    ax2.set_ylabel("horizontal offset r (m)")
    ax2.legend()
    return _save(fig, path)
