"""Report figures rendered next to the delimited outputs.

All functions write PNG files and never open interactive windows.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .controller import SwashConfig
from .harness import BenchResult
from .metrics import MetricsReport, TelemetryLog


def plot_tracking(log: TelemetryLog, out_path: Path, title: str = "") -> Path:
    """Top-down reference-vs-actual path plus position error over time."""
    fig, (ax_xy, ax_err) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax_xy.plot(log.reference[:, 1], log.reference[:, 0], "k--", lw=1, label="reference")
    ax_xy.plot(log.position[:, 1], log.position[:, 0], "C0", lw=1, label="actual")
    ax_xy.set_xlabel("y east [m]")
    ax_xy.set_ylabel("x north [m]")
    ax_xy.set_aspect("equal", adjustable="datalim")
    ax_xy.legend(loc="best", fontsize=8)
    ax_xy.set_title(title or "trajectory")

    ax_err.plot(log.time, log.position_error, "C3", lw=0.8)
    lo, hi = log.window
    ax_err.axvspan(lo, hi, color="0.92", label="metrics window")
    ax_err.set_xlabel("t [s]")
    ax_err.set_ylabel("position error [m]")
    ax_err.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_controls(log: TelemetryLog, out_path: Path, title: str = "") -> Path:
    """Normalized cyclic deflections and rotor speeds over time."""
    fig, (ax_cyc, ax_rot) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for name in ("ele_up", "ail_up", "ele_dw", "ail_dw"):
        ax_cyc.plot(log.time, log.column(name), lw=0.8, label=name)
    ax_cyc.axhline(1.0, color="r", ls=":", lw=0.8)
    ax_cyc.axhline(-1.0, color="r", ls=":", lw=0.8)
    ax_cyc.set_ylabel("normalized cyclic [-]")
    ax_cyc.legend(loc="best", fontsize=8, ncol=4)
    ax_cyc.set_title(title or "actuators")

    for name in ("speed_up", "speed_dw"):
        ax_rot.plot(log.time, log.column(name), lw=0.8, label=name)
    ax_rot.set_ylabel("rotor speed [rad/s]")
    ax_rot.set_xlabel("t [s]")
    ax_rot.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_comparison(
    results: Sequence[tuple[SwashConfig, MetricsReport]], out_path: Path
) -> Path:
    """Bar chart of the headline metrics per swashplate configuration."""
    labels = [swash.value for swash, _ in results]
    keys = ["rmse_m", "mae_m", "avg_power_w"]
    fig, axes = plt.subplots(1, len(keys), figsize=(4 * len(keys), 3.6))
    for ax, key in zip(axes, keys):
        values = [float(metrics.as_dict()[key]) for _, metrics in results]
        ax.bar(labels, values, color=["C0", "C1", "C2"][: len(labels)])
        ax.set_title(key)
        ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_bench(result: BenchResult, out_path: Path) -> Path:
    """Max cyclic torque vs collective thrust per configuration."""
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for swash, torque in result.torque.items():
        slope, intercept, r2 = result.linear_fit(swash)
        ax.plot(
            result.thrust_levels,
            torque,
            "o-",
            label=f"{swash.value} (R$^2$={r2:.4f})",
        )
    ax.set_xlabel("collective thrust [N]")
    ax.set_ylabel("max cyclic torque [N m]")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
