"""Nonlinear state observer for the spherical line representation.

The measured angles are pulled toward the measurement by a gain shaped from
the singular values of the velocity coupling, while the unmeasured
inverse-depth pair is corrected in proportion to the same coupling. Both
corrections vanish together with the coupling, so estimation only progresses
while the camera's linear velocity stays out of the line's plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConstraintViolation, PoleSingularity
from .geometry import (
    PHI_MAX,
    ReducedLineState,
    SphericalMoment,
    spherical_frame,
    wrap_angle,
)
from .motion import CameraTwist, interaction_matrix
from . import motion
from .control import eigenvalues


def gain_matrix(omega_s, alpha: float) -> np.ndarray:
    """Measured-state gain from the coupling's singular value decomposition.

    Each singular value sigma_i contributes 2*sqrt(alpha)*sigma_i on its own
    right singular direction, placing a critically damped double pole per
    channel and avoiding oscillatory transients. A zero coupling yields a
    zero gain: loss of excitation is surfaced, not papered over.
    """
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ConstraintViolation("alpha must be positive")
    m = np.asarray(omega_s, dtype=float)
    if m.shape != (2, 2):
        raise ConstraintViolation("omega_s must be 2x2")
    scale = 2.0 * math.sqrt(alpha)
    if m[0, 1] == 0.0 and m[1, 0] == 0.0:
        # diagonal input: the SVD reduces to magnitudes in place
        return np.array([[scale * abs(m[0, 0]), 0.0], [0.0, scale * abs(m[1, 1])]])
    _, sv, vt = np.linalg.svd(m)
    return (vt.T * (scale * sv)) @ vt


@dataclass(frozen=True)
class ObserverGains:
    """Observer tuning: unknown-state gain ``alpha`` and the rule that maps
    the 2x2 coupling to the measured-state gain."""

    alpha: float
    gain_rule: Callable = field(default=gain_matrix)

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and alpha > 0.0):
            raise ConstraintViolation("alpha must be positive")
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class ObserverState:
    """Current estimate. Unlike a true line state, (eta1, eta2) = (0, 0) is
    tolerated transiently while the estimate converges."""

    est: ReducedLineState


@dataclass(frozen=True)
class Innovation:
    """Measured-angle residuals: azimuth wrapped to (-pi, pi], elevation raw."""

    d_theta_err: float
    d_phi_err: float


def innovation(measured, obs: ObserverState) -> Innovation:
    """Residual between a measured angle pair and the current estimate."""
    theta, phi = measured
    return Innovation(
        wrap_angle(float(theta) - obs.est.theta),
        float(phi) - obs.est.phi,
    )


def excitation_level(omega_s) -> float:
    """Smallest eigenvalue of the coupling Gram matrix.

    Zero means the unknown components are currently unobservable; the
    observer's convergence rate scales with this number.
    """
    return float(eigenvalues(omega_s)[0])


def observer_step(
    obs: ObserverState,
    measured,
    twist: CameraTwist,
    gains: ObserverGains,
    dt: float,
) -> ObserverState:
    """Advance the estimate by one interval against a held measurement.

    All geometric quantities (basis vectors, coupling, gain) are evaluated at
    the measured angles; the estimated state only enters through the
    inverse-depth pair and the innovation. Integration uses the same RK4
    step as the plant models, so simulations are deterministic.
    """
    if dt <= 0.0:
        raise ConstraintViolation("dt must be positive")
    theta_m = float(measured[0])
    phi_m = float(measured[1])
    s_m = SphericalMoment(theta_m, phi_m)
    f = spherical_frame(s_m.theta, s_m.phi)
    nu = (float(twist.nu[0]), float(twist.nu[1]), float(twist.nu[2]))
    om = (float(twist.omega[0]), float(twist.omega[1]), float(twist.omega[2]))

    omega_s = interaction_matrix(s_m, twist.nu)
    gain = gains.gain_rule(omega_s, gains.alpha)
    o11, o22 = float(omega_s[0, 0]), float(omega_s[1, 1])
    g11, g12 = float(gain[0, 0]), float(gain[0, 1])
    g21, g22 = float(gain[1, 0]), float(gain[1, 1])
    alpha = gains.alpha

    w_p = om[0] * f.h_p[0] + om[1] * f.h_p[1] + om[2] * f.h_p[2]
    w_c = om[0] * f.h_c[0] + om[1] * f.h_c[1]
    drift_theta = -w_p / f.cos_p
    drift_phi = -w_c

    def rates(th, ph, e1, e2):
        # same admissibility rules a stage state would enforce
        if not (math.isfinite(ph) and math.isfinite(th) and math.isfinite(e1) and math.isfinite(e2)):
            raise ConstraintViolation("observer state left the finite range")
        if abs(ph) >= PHI_MAX:
            raise PoleSingularity(f"estimated phi={ph!r} left the admissible band")
        te = wrap_angle(theta_m - th)
        pe = phi_m - ph
        d_eta1, d_eta2 = motion.eta_rates(f, e1, e2, nu, om)
        return (
            drift_theta + o11 * e1 + g11 * te + g12 * pe,
            drift_phi + o22 * e2 + g21 * te + g22 * pe,
            d_eta1 + alpha * o11 * te,
            d_eta2 + alpha * o22 * pe,
        )

    # scalar RK4, arithmetic identical to motion.rk4_step stage by stage
    est = obs.est
    th, ph, e1, e2 = est.theta, est.phi, est.eta1, est.eta2
    half = 0.5 * dt
    k1 = rates(th, ph, e1, e2)
    k2 = rates(th + half * k1[0], ph + half * k1[1], e1 + half * k1[2], e2 + half * k1[3])
    k3 = rates(th + half * k2[0], ph + half * k2[1], e1 + half * k2[2], e2 + half * k2[3])
    k4 = rates(th + dt * k3[0], ph + dt * k3[1], e1 + dt * k3[2], e2 + dt * k3[3])
    sixth = dt / 6.0
    return ObserverState(
        ReducedLineState(
            wrap_angle(th + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])),
            ph + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            e1 + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
            e2 + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
        )
    )
