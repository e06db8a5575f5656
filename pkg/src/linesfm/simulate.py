"""Closed-loop scenario execution.

A world-fixed line (the world frame is the camera's starting pose) is
re-expressed analytically in the moving camera frame each step, measured as
spherical moment angles, fed to the observer, and used by the velocity
shaping controller. Everything is seeded, so identical configurations
produce bit-identical logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConstraintViolation,
    DegenerateLine,
    PoleSingularity,
    ScenarioExhausted,
)
from .geometry import (
    PHI_MAX,
    PluckerLine,
    ReducedLineState,
    SphericalMoment,
    line_from_point_direction,
    moment_to_spherical,
    spherical_frame,
    wrap_angle,
)
from .motion import CameraPose, CameraTwist, integrate_pose, interaction_matrix, transform_line
from .observer import ObserverGains, ObserverState, innovation, observer_step
from .control import (
    ControlGains,
    DofMask,
    apply_mask,
    compensating_omega,
    eigenvalues,
    ensure_excitation,
    linear_accel,
)

Z_OFFSET = 1.0            # cube front face distance from the camera [m]
MAX_SCENARIO_DRAWS = 1000
PHI_CLAMP = PHI_MAX - 1e-12

CONTROL_MODES = ("active", "in_plane")


def _default_observer_gains() -> ObserverGains:
    return ObserverGains(alpha=2000.0)


def _default_control_gains() -> ControlGains:
    return ControlGains(k1=1.0, k2=1.0, sigma_des_sq=(0.08, 0.18))


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative description of one closed-loop experiment.

    ``control_mode`` is "active" for the shaping controller or "in_plane" to
    translate inside the line's plane at |nu_init| with zero rotation, the
    configuration under which the unknowns are unobservable.
    """

    seed: int = 0
    cube_side: float = 4.0
    duration: float = 3.0
    dt: float = 1e-3
    observer_gains: ObserverGains = field(default_factory=_default_observer_gains)
    control_gains: ControlGains = field(default_factory=_default_control_gains)
    dof_mask: DofMask = field(default_factory=DofMask.full)
    eta_init_range: float = 0.5
    eta_init: tuple | None = None
    meas_noise_std: float = 0.0
    nu_init: tuple = (0.05, 0.05, 0.05)
    line_override: PluckerLine | None = None
    control_mode: str = "active"

    def __post_init__(self):
        if not (self.cube_side > 0.0 and self.duration > 0.0 and self.dt > 0.0):
            raise ConstraintViolation("cube_side, duration and dt must be positive")
        if self.eta_init_range < 0.0 or self.meas_noise_std < 0.0:
            raise ConstraintViolation("eta_init_range and meas_noise_std must be nonnegative")
        if self.control_mode not in CONTROL_MODES:
            raise ConstraintViolation(f"control_mode must be one of {CONTROL_MODES}")
        nu0 = tuple(float(v) for v in self.nu_init)
        if len(nu0) != 3 or not all(math.isfinite(v) for v in nu0):
            raise ConstraintViolation("nu_init must be three finite values")
        object.__setattr__(self, "nu_init", nu0)
        if self.eta_init is not None:
            eta0 = tuple(float(v) for v in self.eta_init)
            if len(eta0) != 2 or not all(math.isfinite(v) for v in eta0):
                raise ConstraintViolation("eta_init must be two finite values")
            object.__setattr__(self, "eta_init", eta0)


@dataclass(frozen=True)
class FailureRecord:
    """Why and when a run aborted before its configured duration."""

    kind: str
    time: float
    message: str


@dataclass(eq=False)
class TrajectoryLog:
    """Uniformly sampled closed-loop time series.

    Row k holds the state at t = k*dt together with the twist applied over
    the following interval. ``failure`` is set when the run aborted early;
    the arrays then stop at the last completed row.
    """

    t: np.ndarray
    true_states: np.ndarray       # (n, 4): theta, phi, eta1, eta2
    est_states: np.ndarray        # (n, 4)
    innovations: np.ndarray       # (n, 2)
    twists: np.ndarray            # (n, 6): nu, omega
    eigen_sq: np.ndarray          # (n, 2) ascending
    plucker_errs: np.ndarray      # (n,)
    cam_positions: np.ndarray     # (n, 3)
    cam_rotations: np.ndarray     # (n, 3, 3)
    line_world: PluckerLine | None
    failure: FailureRecord | None

    def __len__(self) -> int:
        return self.t.shape[0]

    def state_errors(self) -> np.ndarray:
        """(n, 4) true-minus-estimated state, azimuth difference wrapped."""
        err = self.true_states - self.est_states
        err[:, 0] = _wrap_array(err[:, 0])
        return err

    def state_error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.state_errors(), axis=1)


def _wrap_array(angles: np.ndarray) -> np.ndarray:
    return angles - 2.0 * np.pi * np.round(angles / (2.0 * np.pi))


def _fast_reduce(line: PluckerLine):
    """Scalar equivalent of geometry.reduce for the per-step logging path."""
    hx, hy, hz = float(line.h[0]), float(line.h[1]), float(line.h[2])
    phi = math.asin(min(1.0, max(-1.0, hz)))
    if abs(phi) >= PHI_MAX:
        raise PoleSingularity("moment is aligned with the vertical axis; re-seed the scenario")
    theta = math.atan2(hy, hx)
    f = spherical_frame(theta, phi)
    inv_l = 1.0 / line.l
    cx, cy, cz = float(line.d[0]) * inv_l, float(line.d[1]) * inv_l, float(line.d[2]) * inv_l
    residual = cx * f.h_s[0] + cy * f.h_s[1] + cz * f.h_s[2]
    if abs(residual) >= 1e-9:
        raise ConstraintViolation(
            f"moment-aligned component of d/l is {residual:.3e}, expected ~0"
        )
    eta1 = cx * f.h_p[0] + cy * f.h_p[1] + cz * f.h_p[2]
    eta2 = cx * f.h_c[0] + cy * f.h_c[1]
    return theta, phi, eta1, eta2


def _fast_estimate_error(line_true: PluckerLine, est: ReducedLineState) -> float:
    """Scalar equivalent of plucker_error(line_true, unreduce(est)); NaN when
    the estimate has no finite depth."""
    norm_eta = math.hypot(est.eta1, est.eta2)
    if norm_eta < 1e-12:
        return float("nan")
    f = spherical_frame(est.theta, est.phi)
    cx = est.eta1 * f.h_p[0] + est.eta2 * f.h_c[0]
    cy = est.eta1 * f.h_p[1] + est.eta2 * f.h_c[1]
    cz = est.eta1 * f.h_p[2]
    depth = 1.0 / math.sqrt(cx * cx + cy * cy + cz * cz)
    dx, dy, dz = cx * depth, cy * depth, cz * depth
    mx, my, mz = depth * f.h_s[0], depth * f.h_s[1], depth * f.h_s[2]
    tdx, tdy, tdz = float(line_true.d[0]), float(line_true.d[1]), float(line_true.d[2])
    if tdx * dx + tdy * dy + tdz * dz < 0.0:
        dx, dy, dz, mx, my, mz = -dx, -dy, -dz, -mx, -my, -mz
    tl = line_true.l
    tmx, tmy, tmz = tl * float(line_true.h[0]), tl * float(line_true.h[1]), tl * float(line_true.h[2])
    return math.sqrt(
        (tdx - dx) ** 2
        + (tdy - dy) ** 2
        + (tdz - dz) ** 2
        + (tmx - mx) ** 2
        + (tmy - my) ** 2
        + (tmz - mz) ** 2
    )


def generate_scenario(cfg: ScenarioConfig, rng: np.random.Generator | None = None):
    """Draw the true line and the initial estimate for a scenario.

    The line comes from a uniform point inside a cube in front of the camera
    and a uniform direction on the sphere, re-drawn while the construction is
    degenerate or the moment sits at the spherical pole. The estimated angles
    start at their true values (they are measured); the inverse-depth pair is
    uniform in +-eta_init_range unless pinned by ``eta_init``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if cfg.line_override is not None:
        line = cfg.line_override
        s = moment_to_spherical(line.h)
    else:
        half = 0.5 * cfg.cube_side
        lo = np.array([-half, -half, Z_OFFSET])
        hi = np.array([half, half, Z_OFFSET + cfg.cube_side])
        for _ in range(MAX_SCENARIO_DRAWS):
            point = rng.uniform(lo, hi)
            direction = rng.normal(size=3)
            if float(np.linalg.norm(direction)) < 1e-12:
                continue
            try:
                line = line_from_point_direction(point, direction)
                s = moment_to_spherical(line.h)
            except (DegenerateLine, PoleSingularity):
                continue
            break
        else:
            raise ScenarioExhausted(
                f"no valid line after {MAX_SCENARIO_DRAWS} draws (seed {cfg.seed})"
            )
    eta = rng.uniform(-cfg.eta_init_range, cfg.eta_init_range, size=2)
    if cfg.eta_init is not None:
        eta = np.asarray(cfg.eta_init, dtype=float)
    estimate = ReducedLineState(s.theta, s.phi, float(eta[0]), float(eta[1]))
    return line, estimate


def measure(line: PluckerLine, noise_std: float, rng: np.random.Generator):
    """Spherical angles of the true moment, optionally perturbed by
    independent zero-mean Gaussian noise; azimuth re-wrapped, elevation
    clamped to the admissible band."""
    s = moment_to_spherical(line.h)
    theta, phi = s.theta, s.phi
    if noise_std > 0.0:
        noise = rng.normal(0.0, noise_std, size=2)
        theta = wrap_angle(theta + float(noise[0]))
        phi = min(max(phi + float(noise[1]), -PHI_CLAMP), PHI_CLAMP)
    return theta, phi


def plucker_error(line_true: PluckerLine, line_est: PluckerLine) -> float:
    """Euclidean distance between stacked [d, l*h] vectors, with the
    estimate's sign flipped first when the directions oppose (the two signs
    describe the same line)."""
    d_est = line_est.d
    h_est = line_est.h
    if float(line_true.d @ d_est) < 0.0:
        d_est = -d_est
        h_est = -h_est
    dd = line_true.d - d_est
    mm = line_true.l * line_true.h - line_est.l * h_est
    return math.sqrt(float(dd @ dd) + float(mm @ mm))


def simulate(cfg: ScenarioConfig) -> TrajectoryLog:
    """Run one closed-loop scenario.

    Per step: analytic ground truth from the integrated pose, synthetic
    measurement, velocity commands from the current measurement and estimate
    (the controller only ever sees estimated inverse-depths), then one
    observer step and one pose step with the same held twist. A singularity
    aborts the run and is recorded with its timestamp instead of being
    clamped away.
    """
    rng = np.random.default_rng(cfg.seed)
    n_rows = int(round(cfg.duration / cfg.dt)) + 1
    t_arr = np.empty(n_rows)
    true_arr = np.empty((n_rows, 4))
    est_arr = np.empty((n_rows, 4))
    innov_arr = np.empty((n_rows, 2))
    twist_arr = np.empty((n_rows, 6))
    eig_arr = np.empty((n_rows, 2))
    perr_arr = np.empty(n_rows)
    pos_arr = np.empty((n_rows, 3))
    rot_arr = np.empty((n_rows, 3, 3))

    line_world: PluckerLine | None = None
    failure: FailureRecord | None = None
    rows = 0
    try:
        line_world, est0 = generate_scenario(cfg, rng)
        obs = ObserverState(est0)
        pose = CameraPose.identity()
        nu = np.asarray(cfg.nu_init, dtype=float)
        if cfg.control_mode == "active":
            nu = ensure_excitation(nu, line_world.h)
            nu = apply_mask(CameraTwist(nu, np.zeros(3)), cfg.dof_mask).nu
        in_plane_speed = float(np.linalg.norm(cfg.nu_init))
        zero_omega = np.zeros(3)

        for k in range(n_rows):
            line_cam = transform_line(line_world, pose)
            truth = _fast_reduce(line_cam)
            if cfg.meas_noise_std > 0.0:
                noise = rng.normal(0.0, cfg.meas_noise_std, size=2)
                theta_m = wrap_angle(truth[0] + float(noise[0]))
                phi_m = min(max(truth[1] + float(noise[1]), -PHI_CLAMP), PHI_CLAMP)
            else:
                theta_m, phi_m = truth[0], truth[1]
            est = obs.est
            inn = innovation((theta_m, phi_m), obs)
            s_m = SphericalMoment(theta_m, phi_m)
            if cfg.control_mode == "active":
                nu = nu + linear_accel(s_m, nu, cfg.control_gains) * cfg.dt
                omega = compensating_omega(
                    ReducedLineState(theta_m, phi_m, est.eta1, est.eta2), nu
                )
                twist = apply_mask(CameraTwist(nu, omega), cfg.dof_mask)
            else:
                f = spherical_frame(theta_m, phi_m)
                twist = apply_mask(
                    CameraTwist(in_plane_speed * np.array(f.h_p), zero_omega), cfg.dof_mask
                )
            nu = twist.nu
            eig = eigenvalues(interaction_matrix(s_m, twist.nu))

            t_arr[k] = k * cfg.dt
            true_arr[k] = truth
            est_arr[k] = (est.theta, est.phi, est.eta1, est.eta2)
            innov_arr[k] = (inn.d_theta_err, inn.d_phi_err)
            twist_arr[k, :3] = twist.nu
            twist_arr[k, 3:] = twist.omega
            eig_arr[k] = eig
            perr_arr[k] = _fast_estimate_error(line_cam, est)
            pos_arr[k] = pose.translation
            rot_arr[k] = pose.rotation
            rows = k + 1
            if k == n_rows - 1:
                break
            obs = observer_step(obs, (theta_m, phi_m), twist, cfg.observer_gains, cfg.dt)
            # commanded twists follow the apparent-motion convention (scene
            # relative to camera); the camera itself moves oppositely
            pose = integrate_pose(pose, twist.negated(), cfg.dt)
    except (PoleSingularity, DegenerateLine, ScenarioExhausted, ConstraintViolation) as exc:
        failure = FailureRecord(type(exc).__name__, rows * cfg.dt, str(exc))

    return TrajectoryLog(
        t=t_arr[:rows],
        true_states=true_arr[:rows],
        est_states=est_arr[:rows],
        innovations=innov_arr[:rows],
        twists=twist_arr[:rows],
        eigen_sq=eig_arr[:rows],
        plucker_errs=perr_arr[:rows],
        cam_positions=pos_arr[:rows],
        cam_rotations=rot_arr[:rows],
        line_world=line_world,
        failure=failure,
    )


@dataclass(frozen=True)
class RunSummary:
    """Outcome of one seeded run against a convergence threshold."""

    seed: int
    converged: bool
    time_to_converge: float | None
    final_plucker_error: float | None
    failure: FailureRecord | None


def summarize_run(log: TrajectoryLog, seed: int, threshold: float) -> RunSummary:
    """Reduce a log to its summary. ``time_to_converge`` is the time after
    which the line error stays below the threshold until the end."""
    err = log.plucker_errs
    final = None
    if err.size and math.isfinite(float(err[-1])):
        final = float(err[-1])
    if log.failure is not None or final is None:
        return RunSummary(seed, False, None, final, log.failure)
    if final >= threshold:
        return RunSummary(seed, False, None, final, None)
    above = np.flatnonzero(~(err < threshold))
    time_to = 0.0 if above.size == 0 else float(log.t[above[-1] + 1])
    return RunSummary(seed, True, time_to, final, None)


def _batch_worker(args):
    cfg, threshold = args
    return summarize_run(simulate(cfg), cfg.seed, threshold)


def batch_run(cfg: ScenarioConfig, seeds, threshold: float, workers: int = 1):
    """Summaries for a sequence of seeds, merged in seed order regardless of
    how many workers executed them."""
    jobs = [(replace(cfg, seed=int(s)), threshold) for s in seeds]
    if workers <= 1:
        return [_batch_worker(job) for job in jobs]
    import multiprocessing

    with multiprocessing.Pool(workers) as pool:
        return pool.map(_batch_worker, jobs)


def aggregate_summaries(summaries) -> dict:
    """Deterministic batch aggregate: convergence rate plus medians of the
    per-run convergence times and final errors."""
    count = len(summaries)
    converged = [s for s in summaries if s.converged]
    finals = [
        s.final_plucker_error
        for s in summaries
        if s.final_plucker_error is not None and math.isfinite(s.final_plucker_error)
    ]
    return {
        "count": count,
        "convergence_rate": (len(converged) / count) if count else 0.0,
        "median_time_to_converge": (
            float(np.median([s.time_to_converge for s in converged])) if converged else None
        ),
        "median_final_error": float(np.median(finals)) if finals else None,
        "failures": sum(1 for s in summaries if s.failure is not None),
    }
