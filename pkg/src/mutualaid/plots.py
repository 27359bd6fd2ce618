"""Figure rendering for simulation and sweep reports.

The CSV/JSON files are the machine contract; these plots are a convenience
rendered next to them. Matplotlib runs with the Agg backend so the CLI works
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulation import MetricsReport
from .sweep import SweepRow


def plot_run_series(report: MetricsReport, path: str) -> None:
    """Time series of open requests, cumulative satisfaction and latency."""
    steps = [row[0] for row in report.series]
    open_requests = [row[1] for row in report.series]
    sat = [(row[5] / row[6]) if row[6] else None for row in report.series]
    lat = [(row[4] / row[2]) if row[2] else None for row in report.series]

    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    axes[0].plot(steps, open_requests, color="tab:red")
    axes[0].set_ylabel("open requests")
    axes[1].plot(steps, sat, color="tab:green")
    axes[1].set_ylabel("satisfaction (cum.)")
    axes[1].set_ylim(-0.02, 1.02)
    axes[2].plot(steps, lat, color="tab:blue")
    axes[2].set_ylabel("mean latency (cum.)")
    axes[2].set_xlabel("step")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep_rows(rows: list[SweepRow], axis_name: str, path: str) -> None:
    """Satisfaction and latency (mean +/- sd) against the swept axis."""
    xs = [r.axis_value for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.errorbar(xs, [r.satisfaction_mean for r in rows],
                 yerr=[r.satisfaction_sd for r in rows],
                 marker="o", capsize=3, color="tab:green")
    ax1.set_xlabel(axis_name)
    ax1.set_ylabel("satisfaction rate")
    ax1.set_ylim(-0.02, 1.02)
    ax2.errorbar(xs, [r.latency_mean for r in rows],
                 yerr=[r.latency_sd for r in rows],
                 marker="o", capsize=3, color="tab:blue")
    ax2.set_xlabel(axis_name)
    ax2.set_ylabel("mean latency (steps)")
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
