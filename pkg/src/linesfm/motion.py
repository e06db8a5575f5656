"""Rigid camera motion and the induced apparent motion of observed lines.

Three equivalent formulations of the same flow live side by side: the full
(d, h, l) form, the scaled-direction form in (h, chi = d/l) where the
unknowns enter the measured dynamics linearly, and the minimal spherical
state used by the observer. Ground truth is propagated by composing exact
constant-twist pose updates with an analytic frame change, so the
differential forms can be validated against geometry instead of against
themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation, DegenerateLine
from .geometry import (
    _EYE3,
    PluckerLine,
    ReducedLineState,
    SphericalMoment,
    _cross,
    _vec3,
    spherical_frame,
    wrap_angle,
)

ROTATION_TOL = 1e-10


def skew(v) -> np.ndarray:
    """Skew-symmetric matrix such that skew(a) @ b == a x b."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def _det3(m) -> float:
    return (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


@dataclass(frozen=True)
class CameraTwist:
    """Camera velocity expressed in the camera frame: linear ``nu`` [m/s]
    and angular ``omega`` [rad/s]."""

    nu: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        nu = _vec3(self.nu, "nu")
        omega = _vec3(self.omega, "omega")
        nu.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "omega", omega)

    @staticmethod
    def zero() -> "CameraTwist":
        return CameraTwist(np.zeros(3), np.zeros(3))

    def negated(self) -> "CameraTwist":
        """Opposite twist.

        The apparent-motion models take the scene's twist relative to the
        camera (forward camera motion toward a line shows up as a negative
        linear velocity there), while pose integration takes the camera's own
        body twist. This bridges the two conventions.
        """
        return CameraTwist(-self.nu, -self.omega)


@dataclass(frozen=True)
class CameraPose:
    """Camera pose bookkeeping: ``rotation`` maps camera to world axes and
    ``translation`` is the camera origin in the world frame [m]."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        if rot.shape != (3, 3) or not np.all(np.isfinite(rot)):
            raise ConstraintViolation("rotation must be a finite 3x3 matrix")
        if float(np.abs(rot.T @ rot - _EYE3).max()) > ROTATION_TOL:
            raise ConstraintViolation("rotation is not orthonormal")
        if _det3(rot) < 0.0:
            raise ConstraintViolation("rotation must be proper (det +1)")
        t = _vec3(self.translation, "translation")
        rot.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "CameraPose":
        return CameraPose(np.eye(3), np.zeros(3))

    def inverse(self) -> "CameraPose":
        """Pose of the world frame expressed in camera coordinates."""
        rt = self.rotation.T
        return CameraPose(rt, -(rt @ self.translation))


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of a ReducedLineState: angle rates [rad/s] and
    inverse-depth rates [1/(m s)]."""

    d_theta: float
    d_phi: float
    d_eta1: float
    d_eta2: float


def plucker_dynamics(line: PluckerLine, twist: CameraTwist):
    """Apparent-motion rates (d_dot, h_dot, l_dot) of the full coordinates.

    The direction and moment rotate with the camera; the moment additionally
    tilts, and the depth slides, in proportion to the linear velocity's
    component along the moment.
    """
    nu, om = twist.nu, twist.omega
    dxh = _cross(line.d, line.h)
    d_dot = _cross(om, line.d)
    h_dot = _cross(om, line.h) - (float(nu @ line.h) / line.l) * dxh
    l_dot = float(nu @ dxh)
    return d_dot, h_dot, l_dot


def moment_coupling_matrix(h, nu) -> np.ndarray:
    """3x3 map from the scaled direction to the moment velocity.

    Its Gram matrix has rank at most 2 for every input, which is exactly why
    the six-coordinate form cannot be observed and the spherical reduction is
    needed.
    """
    hv = _vec3(h, "h")
    nv = _vec3(nu, "nu")
    return -float(nv @ hv) * skew(hv)


def reduced_dynamics(h, chi, twist: CameraTwist):
    """Rates (h_dot, chi_dot) of the moment and the scaled direction d/l."""
    hv = _vec3(h, "h")
    cv = _vec3(chi, "chi")
    if abs(float(hv @ cv)) >= 1e-9:
        raise ConstraintViolation("chi must be orthogonal to the moment")
    nu, om = twist.nu, twist.omega
    cxh = _cross(cv, hv)
    h_dot = _cross(om, hv) - float(nu @ hv) * cxh
    chi_dot = _cross(om, cv) - cv * float(nu @ cxh)
    return h_dot, chi_dot


def eta_rates(frame, eta1, eta2, nu, omega):
    """Rates of the two inverse-depth components for a fixed moment frame.

    ``nu`` and ``omega`` must be indexable 3-sequences; ``frame`` is a
    SphericalFrame. Kept scalar: this runs four times per observer step.
    """
    hs, hp, hc = frame.h_s, frame.h_p, frame.h_c
    n_s = nu[0] * hs[0] + nu[1] * hs[1] + nu[2] * hs[2]
    n_p = nu[0] * hp[0] + nu[1] * hp[1] + nu[2] * hp[2]
    n_c = nu[0] * hc[0] + nu[1] * hc[1]
    w_s = omega[0] * hs[0] + omega[1] * hs[1] + omega[2] * hs[2]
    w_p = omega[0] * hp[0] + omega[1] * hp[1] + omega[2] * hp[2]
    tan_p = frame.sin_p / frame.cos_p
    spin = w_p * tan_p + w_s
    d_eta1 = -spin * eta2 + (n_s * tan_p - n_p) * eta1 * eta2 + n_c * eta1 * eta1
    d_eta2 = spin * eta1 + n_c * eta1 * eta2 - n_s * tan_p * eta1 * eta1 - n_p * eta2 * eta2
    return d_eta1, d_eta2


def spherical_dynamics(state: ReducedLineState, twist: CameraTwist) -> StateDerivative:
    """Flow of the minimal four-parameter state."""
    f = spherical_frame(state.theta, state.phi)
    nu = (float(twist.nu[0]), float(twist.nu[1]), float(twist.nu[2]))
    om = (float(twist.omega[0]), float(twist.omega[1]), float(twist.omega[2]))
    n_s = nu[0] * f.h_s[0] + nu[1] * f.h_s[1] + nu[2] * f.h_s[2]
    w_p = om[0] * f.h_p[0] + om[1] * f.h_p[1] + om[2] * f.h_p[2]
    w_c = om[0] * f.h_c[0] + om[1] * f.h_c[1]
    d_theta = (-w_p + n_s * state.eta1) / f.cos_p
    d_phi = -w_c + n_s * state.eta2
    d_eta1, d_eta2 = eta_rates(f, state.eta1, state.eta2, nu, om)
    return StateDerivative(d_theta, d_phi, d_eta1, d_eta2)


def interaction_matrix(s: SphericalMoment, nu) -> np.ndarray:
    """2x2 diagonal coupling from (eta1, eta2) to the measured angle rates.

    Full rank exactly when the linear velocity leaves the plane spanned by
    the line and the origin; zero when it does not, which is the loss of
    excitation that stalls estimation.
    """
    f = spherical_frame(s.theta, s.phi)
    n_s = float(nu[0]) * f.h_s[0] + float(nu[1]) * f.h_s[1] + float(nu[2]) * f.h_s[2]
    return np.array([[n_s / f.cos_p, 0.0], [0.0, n_s]])


def transform_line(line: PluckerLine, pose: CameraPose) -> PluckerLine:
    """Re-express a world-frame line in the camera frame of ``pose``.

    Analytic, so it serves as drift-free ground truth for the differential
    formulations.
    """
    rot_t = pose.rotation.T
    d_cam = rot_t @ line.d
    d_cam = d_cam / math.sqrt(float(d_cam @ d_cam))
    m_cam = rot_t @ (line.l * line.h - _cross(pose.translation, line.d))
    depth = math.sqrt(float(m_cam @ m_cam))
    if depth < 1e-9:
        raise DegenerateLine("camera origin lies on the line")
    return PluckerLine(d_cam, m_cam / depth, depth)


def _nudged(state: ReducedLineState, k: StateDerivative, h: float) -> ReducedLineState:
    return ReducedLineState(
        state.theta + h * k.d_theta,
        state.phi + h * k.d_phi,
        state.eta1 + h * k.d_eta1,
        state.eta2 + h * k.d_eta2,
    )


def rk4_step(field, state: ReducedLineState, twist: CameraTwist, dt: float) -> ReducedLineState:
    """Classical fourth-order Runge-Kutta step of ``field(state, twist)``.

    Every stage state is validated, so leaving the elevation band raises
    PoleSingularity from inside the step. The azimuth of the result is
    wrapped back to (-pi, pi].
    """
    if dt <= 0.0:
        raise ConstraintViolation("dt must be positive")
    k1 = field(state, twist)
    k2 = field(_nudged(state, k1, 0.5 * dt), twist)
    k3 = field(_nudged(state, k2, 0.5 * dt), twist)
    k4 = field(_nudged(state, k3, dt), twist)
    sixth = dt / 6.0
    return ReducedLineState(
        wrap_angle(
            state.theta + sixth * (k1.d_theta + 2.0 * (k2.d_theta + k3.d_theta) + k4.d_theta)
        ),
        state.phi + sixth * (k1.d_phi + 2.0 * (k2.d_phi + k3.d_phi) + k4.d_phi),
        state.eta1 + sixth * (k1.d_eta1 + 2.0 * (k2.d_eta1 + k3.d_eta1) + k4.d_eta1),
        state.eta2 + sixth * (k1.d_eta2 + 2.0 * (k2.d_eta2 + k3.d_eta2) + k4.d_eta2),
    )


def _plucker_field(y: np.ndarray, nu, om) -> np.ndarray:
    d = y[:3]
    h = y[3:6]
    dxh = _cross(d, h)
    out = np.empty(7)
    out[:3] = _cross(om, d)
    out[3:6] = _cross(om, h) - (float(nu @ h) / y[6]) * dxh
    out[6] = float(nu @ dxh)
    return out


def plucker_step(coords, twist: CameraTwist, dt: float) -> np.ndarray:
    """One RK4 step of the raw stacked coordinates [d, h, l].

    No renormalization is applied: unit norms and orthogonality are
    invariants of the flow, and integrating without projection makes their
    numerical drift observable. Diagnostic integrator; the simulator itself
    never uses it for truth.
    """
    if dt <= 0.0:
        raise ConstraintViolation("dt must be positive")
    y = np.asarray(coords, dtype=float)
    if y.shape != (7,):
        raise ConstraintViolation("coords must be a 7-vector [d, h, l]")
    nu, om = twist.nu, twist.omega
    k1 = _plucker_field(y, nu, om)
    k2 = _plucker_field(y + 0.5 * dt * k1, nu, om)
    k3 = _plucker_field(y + 0.5 * dt * k2, nu, om)
    k4 = _plucker_field(y + dt * k3, nu, om)
    return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def line_as_coords(line: PluckerLine) -> np.ndarray:
    """Stacked raw coordinates [d, h, l] for plucker_step."""
    return np.concatenate((line.d, line.h, [line.l]))


def integrate_pose(pose: CameraPose, twist: CameraTwist, dt: float) -> CameraPose:
    """Advance a pose by one interval of constant body twist.

    Uses the closed-form screw motion: Rodrigues update for the rotation and
    the matching translation arc, exact for a twist held over the step.
    """
    if dt <= 0.0:
        raise ConstraintViolation("dt must be positive")
    rot_vec = twist.omega * dt
    angle = math.sqrt(float(rot_vec @ rot_vec))
    k = skew(rot_vec)
    kk = k @ k
    if angle < 1e-8:
        a = 1.0 - angle * angle / 6.0
        b = 0.5 - angle * angle / 24.0
        c = 1.0 / 6.0 - angle * angle / 120.0
    else:
        a = math.sin(angle) / angle
        b = (1.0 - math.cos(angle)) / (angle * angle)
        c = (angle - math.sin(angle)) / (angle * angle * angle)
    delta_rot = _EYE3 + a * k + b * kk
    arc = _EYE3 + b * k + c * kk
    return CameraPose(
        pose.rotation @ delta_rot,
        pose.translation + pose.rotation @ (arc @ (twist.nu * dt)),
    )
