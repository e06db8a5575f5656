"""Excitation-shaping velocity control.

The linear velocity is steered so that the eigenvalues of the coupling Gram
matrix track prescribed values, which sets the observer's convergence rate.
The angular velocity is chosen to freeze the measured moment angles so the
eigenvalue dynamics are not disturbed by their drift, and a degree-of-freedom
mask projects both commands onto what the platform can actually actuate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation
from .geometry import (
    ReducedLineState,
    SphericalMoment,
    _cross,
    _vec3,
    spherical_frame,
    spherical_to_moment,
)
from .motion import CameraPose, CameraTwist, interaction_matrix

PINV_RTOL = 1e-8        # singular values below PINV_RTOL * sigma_max are dropped
COMP_SIN_EPS = 1e-3     # |sin(phi)| below which the closed-form compensation is replaced
EXCITATION_FLOOR = 1e-4
BOOTSTRAP_SPEED = 0.1   # m/s injected along the moment when excitation starts degenerate

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class ControlGains:
    """Gains of the velocity shaping law.

    ``sigma_des_sq`` holds the two desired eigenvalues of the coupling Gram
    matrix, smallest first.
    """

    k1: float
    k2: float
    sigma_des_sq: np.ndarray

    def __post_init__(self):
        k1 = float(self.k1)
        k2 = float(self.k2)
        if not (k1 > 0.0 and k2 > 0.0):
            raise ConstraintViolation("k1 and k2 must be positive")
        des = np.asarray(self.sigma_des_sq, dtype=float)
        if des.shape != (2,) or not np.all(np.isfinite(des)):
            raise ConstraintViolation("sigma_des_sq must be two finite values")
        if des[0] < 0.0 or des[1] < des[0]:
            raise ConstraintViolation("sigma_des_sq must be nonnegative and nondecreasing")
        des.setflags(write=False)
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "sigma_des_sq", des)


@dataclass(frozen=True)
class DofMask:
    """Actuated twist axes of the platform, named in the platform frame."""

    linear_axes: frozenset
    angular_axes: frozenset

    def __post_init__(self):
        lin = frozenset(self.linear_axes)
        ang = frozenset(self.angular_axes)
        for axes in (lin, ang):
            if not axes <= _AXES.keys():
                raise ConstraintViolation(f"axes must be within x/y/z, got {sorted(axes)}")
        object.__setattr__(self, "linear_axes", lin)
        object.__setattr__(self, "angular_axes", ang)

    @classmethod
    def full(cls) -> "DofMask":
        return cls(frozenset("xyz"), frozenset("xyz"))

    @classmethod
    def planar(cls) -> "DofMask":
        """Omnidirectional ground platform: x/y translation plus yaw."""
        return cls(frozenset("xy"), frozenset("z"))


def eigenvalues(omega_s) -> np.ndarray:
    """Eigenvalues of omega_s @ omega_s.T, ascending and clamped at zero.

    Closed-form 2x2 symmetric eigensolve; for the diagonal coupling this is
    ((nu.h_s)^2, (nu.h_s)^2 / cos(phi)^2).
    """
    m = np.asarray(omega_s, dtype=float)
    if m.shape != (2, 2):
        raise ConstraintViolation("omega_s must be 2x2")
    g00 = m[0, 0] * m[0, 0] + m[0, 1] * m[0, 1]
    g11 = m[1, 0] * m[1, 0] + m[1, 1] * m[1, 1]
    g01 = m[0, 0] * m[1, 0] + m[0, 1] * m[1, 1]
    half_tr = 0.5 * (g00 + g11)
    disc = math.sqrt(max(0.25 * (g00 - g11) ** 2 + g01 * g01, 0.0))
    return np.array([max(half_tr - disc, 0.0), max(half_tr + disc, 0.0)])


def jacobian_nu(s: SphericalMoment, nu) -> np.ndarray:
    """Gradients of the two Gram eigenvalues with respect to the linear
    velocity, rows ordered to match eigenvalues().

    Both rows are multiples of the moment direction, so the matrix is
    structurally rank one: only the velocity component along the moment can
    move the eigenvalues.
    """
    h_s = spherical_to_moment(s)
    n_s = float(np.asarray(nu, dtype=float) @ h_s)
    cp = math.cos(s.phi)
    jac = np.empty((2, 3))
    jac[0] = (2.0 * n_s) * h_s
    jac[1] = jac[0] / (cp * cp)
    return jac


def thresholded_pinv(mat) -> np.ndarray:
    """SVD pseudo-inverse dropping singular values below PINV_RTOL times the
    largest one; a zero matrix maps to a zero matrix."""
    u, sv, vt = np.linalg.svd(np.asarray(mat, dtype=float), full_matrices=False)
    cutoff = PINV_RTOL * sv[0]
    inv = np.where(sv > cutoff, np.divide(1.0, sv, out=np.zeros_like(sv), where=sv > 0), 0.0)
    return (vt.T * inv) @ u.T


def linear_accel(s: SphericalMoment, nu, gains: ControlGains) -> np.ndarray:
    """Linear acceleration command [m/s^2].

    Tracks the desired Gram eigenvalues through the thresholded pseudo-inverse
    of their velocity Jacobian, plus a null-space term that grows the velocity
    components which cannot affect the eigenvalues. When the Jacobian is zero
    (excitation lost) the command reduces to pure growth k2 * nu, which
    restores excitation.
    """
    nu_v = _vec3(nu, "nu")
    f = spherical_frame(s.theta, s.phi)
    h_s = np.array(f.h_s)
    n_s = float(nu_v @ h_s)
    cp2 = f.cos_p * f.cos_p
    # the Jacobian is the rank-one matrix [g1; g2] h_s^T, so its thresholded
    # pseudo-inverse reduces to h_s [g1, g2] / (g1^2 + g2^2)
    g1 = 2.0 * n_s
    g2 = g1 / cp2
    gram = g1 * g1 + g2 * g2
    sig = eigenvalues(interaction_matrix(s, nu_v))
    err = gains.sigma_des_sq - sig
    if gram == 0.0:
        return gains.k2 * nu_v
    track = (g1 * float(err[0]) + g2 * float(err[1])) / gram
    return gains.k1 * track * h_s + gains.k2 * (nu_v - n_s * h_s)


def compensating_omega(state: ReducedLineState, nu) -> np.ndarray:
    """Angular velocity that zeroes both measured angle rates.

    Away from the equator the closed form divides by sin(phi); inside the
    COMP_SIN_EPS band the minimum-norm solution of the same two linear
    constraints is used instead, which is defined for every elevation and
    satisfies them exactly as well.
    """
    f = spherical_frame(state.theta, state.phi)
    nu_v = _vec3(nu, "nu")
    n_s = float(nu_v[0]) * f.h_s[0] + float(nu_v[1]) * f.h_s[1] + float(nu_v[2]) * f.h_s[2]
    e1, e2 = state.eta1, state.eta2
    if abs(f.sin_p) >= COMP_SIN_EPS:
        gain = n_s / f.sin_p
        return np.array(
            [
                gain * (e1 * f.cos_t - e2 * f.sin_t * f.sin_p),
                gain * (e1 * f.sin_t + e2 * f.cos_t * f.sin_p),
                0.0,
            ]
        )
    return np.array(
        [
            n_s * (e1 * f.h_p[0] + e2 * f.h_c[0]),
            n_s * (e1 * f.h_p[1] + e2 * f.h_c[1]),
            n_s * (e1 * f.h_p[2]),
        ]
    )


def apply_mask(twist: CameraTwist, mask: DofMask, extrinsics: CameraPose | None = None) -> CameraTwist:
    """Project a camera twist onto the platform's actuated axes.

    The twist is mapped into the platform frame through the fixed
    camera-to-platform extrinsics, non-actuated components are zeroed there,
    and the result is mapped back. ``extrinsics`` is the pose of the camera
    expressed in the platform frame; None means the frames coincide.
    """
    if extrinsics is None:
        nu = twist.nu.copy()
        om = twist.omega.copy()
        for axis, idx in _AXES.items():
            if axis not in mask.linear_axes:
                nu[idx] = 0.0
            if axis not in mask.angular_axes:
                om[idx] = 0.0
        return CameraTwist(nu, om)
    rot = extrinsics.rotation
    t = extrinsics.translation
    om_p = rot @ twist.omega
    nu_p = rot @ twist.nu + _cross(t, om_p)
    for axis, idx in _AXES.items():
        if axis not in mask.linear_axes:
            nu_p[idx] = 0.0
        if axis not in mask.angular_axes:
            om_p[idx] = 0.0
    return CameraTwist(rot.T @ (nu_p - _cross(t, om_p)), rot.T @ om_p)


def ensure_excitation(nu, moment, threshold: float = EXCITATION_FLOOR,
                      boost: float = BOOTSTRAP_SPEED) -> np.ndarray:
    """Inject a small velocity along the moment when the initial coupling is
    degenerate; otherwise return the velocity unchanged."""
    nu_v = _vec3(nu, "nu")
    h = _vec3(moment, "moment")
    if abs(float(nu_v @ h)) < threshold:
        return nu_v + boost * h
    return nu_v.copy()
