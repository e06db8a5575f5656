"""Figure rendering for run outputs.

Matplotlib is only imported here, so the estimation core stays free of any
graphics dependency; the CLI pulls this module in lazily when plots are
requested.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import _cross, unreduce
from .motion import CameraPose, transform_line
from .simulate import ScenarioConfig, TrajectoryLog

_STATE_LABELS = (r"$\theta$ [rad]", r"$\phi$ [rad]", r"$\eta_1$ [1/m]", r"$\eta_2$ [1/m]")


def _line_endpoints(line, half_length=3.0):
    anchor = line.l * _cross(line.d, line.h)
    return anchor - half_length * line.d, anchor + half_length * line.d


def estimated_world_line(log: TrajectoryLog):
    """Final estimated line re-expressed in the world frame, or None when the
    log is empty or the estimate has no finite depth."""
    if len(log) == 0:
        return None
    try:
        est_cam = unreduce(_final_state(log))
        pose = CameraPose(log.cam_rotations[-1], log.cam_positions[-1])
        return transform_line(est_cam, pose.inverse())
    except Exception:
        return None


def _final_state(log: TrajectoryLog):
    from .geometry import ReducedLineState

    row = log.est_states[-1]
    return ReducedLineState(row[0], row[1], row[2], row[3])


def render_states(log: TrajectoryLog, path: Path) -> None:
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for i, ax in enumerate(axes.flat):
        ax.plot(log.t, log.true_states[:, i], label="true")
        ax.plot(log.t, log.est_states[:, i], "--", label="estimated")
        ax.set_ylabel(_STATE_LABELS[i])
        ax.grid(alpha=0.3)
    axes[1, 0].set_xlabel("t [s]")
    axes[1, 1].set_xlabel("t [s]")
    axes[0, 0].legend(loc="best", fontsize=8)
    fig.suptitle("True and estimated state")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_errors(log: TrajectoryLog, path: Path) -> None:
    err = np.abs(log.state_errors())
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = (r"$|\tilde\theta|$", r"$|\tilde\phi|$", r"$|\tilde\eta_1|$", r"$|\tilde\eta_2|$")
    for i, label in enumerate(labels):
        ax.semilogy(log.t, np.maximum(err[:, i], 1e-18), label=label)
    ax.semilogy(log.t, np.maximum(log.plucker_errs, 1e-18), "k", lw=1.8, label="line error")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("error")
    ax.grid(alpha=0.3, which="both")
    ax.legend(loc="best", fontsize=8)
    fig.suptitle("Estimation error")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_velocities(log: TrajectoryLog, path: Path) -> None:
    fig, (ax_nu, ax_om) = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
    for i, comp in enumerate("xyz"):
        ax_nu.plot(log.t, log.twists[:, i], label=rf"$\nu_{comp}$")
        ax_om.plot(log.t, log.twists[:, 3 + i], label=rf"$\omega_{comp}$")
    ax_nu.set_ylabel("linear [m/s]")
    ax_om.set_ylabel("angular [rad/s]")
    ax_om.set_xlabel("t [s]")
    for ax in (ax_nu, ax_om):
        ax.grid(alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    fig.suptitle("Commanded camera velocities")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_eigenvalues(log: TrajectoryLog, cfg: ScenarioConfig | None, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(log.t, log.eigen_sq[:, 0], label=r"$\sigma_1^2$")
    ax.plot(log.t, log.eigen_sq[:, 1], label=r"$\sigma_2^2$")
    if cfg is not None:
        des = cfg.control_gains.sigma_des_sq
        ax.axhline(des[0], color="C0", ls=":", lw=1, label="desired")
        ax.axhline(des[1], color="C1", ls=":", lw=1)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("coupling eigenvalues")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.suptitle("Excitation eigenvalues")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_world(log: TrajectoryLog, path: Path) -> None:
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    if log.line_world is not None:
        a, b = _line_endpoints(log.line_world)
        ax.plot(*zip(a, b), "g", lw=2, label="true line")
    est = estimated_world_line(log)
    if est is not None:
        a, b = _line_endpoints(est)
        ax.plot(*zip(a, b), "r--", lw=2, label="estimated line")
    if len(log):
        ax.plot(
            log.cam_positions[:, 0],
            log.cam_positions[:, 1],
            log.cam_positions[:, 2],
            "b",
            lw=1,
            label="camera path",
        )
        ax.scatter(*log.cam_positions[-1], color="b", s=25)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.legend(loc="best", fontsize=8)
    fig.suptitle("World view")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_run_figures(log: TrajectoryLog, cfg: ScenarioConfig | None, out_dir) -> list:
    """Render the standard run report panels; returns the written paths."""
    out = Path(out_dir)
    written = []
    if len(log) == 0:
        return written
    for name, renderer in (
        ("fig_states.png", lambda p: render_states(log, p)),
        ("fig_errors.png", lambda p: render_errors(log, p)),
        ("fig_velocities.png", lambda p: render_velocities(log, p)),
        ("fig_eigenvalues.png", lambda p: render_eigenvalues(log, cfg, p)),
        ("fig_world.png", lambda p: render_world(log, p)),
    ):
        target = out / name
        renderer(target)
        written.append(target)
    return written


def render_batch_histogram(final_errors, path) -> None:
    """Histogram of final line errors across a seed batch."""
    values = np.asarray([e for e in final_errors if e is not None and np.isfinite(e)])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if values.size:
        floor = max(values.min(), 1e-16)
        bins = np.logspace(np.log10(floor) - 0.1, np.log10(max(values.max(), floor)) + 0.1, 30)
        ax.hist(values, bins=bins, color="C0", alpha=0.8)
        ax.set_xscale("log")
    ax.set_xlabel("final line error")
    ax.set_ylabel("runs")
    ax.grid(alpha=0.3)
    fig.suptitle("Batch final error distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
