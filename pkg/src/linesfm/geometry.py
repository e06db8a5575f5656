"""Line geometry: binormalized Pluecker coordinates, spherical moment angles,
and the moment-aligned reduced state.

A 3D line seen from the camera origin is carried as (d, h, l): unit direction
``d``, unit moment ``h`` (the normal of the plane spanned by the line and the
origin) and depth ``l``, the distance from the origin to the line. Only the
moment is observable in a single image, so it gets a minimal two-angle
spherical parametrization, and the remaining unknowns are re-expressed in an
orthonormal frame aligned with the moment. In that frame the scaled direction
d/l has a structurally zero first coordinate, which removes the orthogonality
side constraint h.d = 0 from the state space altogether.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ConstraintViolation,
    DegenerateLine,
    InfiniteDepth,
    PoleSingularity,
)

POLE_EPS = 1e-6                      # exclusion half-band around |phi| = pi/2
PHI_MAX = math.pi / 2 - POLE_EPS     # largest admissible |phi|
UNIT_TOL = 1e-12                     # unit-norm / orthogonality tolerance at construction
DEGENERATE_TOL = 1e-9                # relative moment norm below which a line is degenerate
ETA_RESIDUAL_TOL = 1e-9              # admissible moment-aligned component of d/l


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]; angles already in range pass unchanged."""
    if -math.pi < angle <= math.pi:
        return angle
    rem = math.fmod(angle + math.pi, 2.0 * math.pi)
    if rem <= 0.0:
        rem += 2.0 * math.pi
    return rem - math.pi


_EYE3 = np.eye(3)
_EYE3.setflags(write=False)


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ConstraintViolation(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not (
        math.isfinite(arr[0]) and math.isfinite(arr[1]) and math.isfinite(arr[2])
    ):
        raise ConstraintViolation(f"{name} must be finite, got {arr}")
    return arr


def _cross(a, b) -> np.ndarray:
    # np.cross has noticeable overhead for single small vectors
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


@dataclass(frozen=True)
class PluckerLine:
    """A 3D line in binormalized coordinates.

    Attributes:
        d: unit direction vector.
        h: unit moment vector, normal to the plane through the line and the
           origin; orthogonal to ``d`` by construction.
        l: depth in meters, the distance from the origin to the line.
    """

    d: np.ndarray
    h: np.ndarray
    l: float

    def __post_init__(self):
        d = _vec3(self.d, "d")
        h = _vec3(self.h, "h")
        depth = float(self.l)
        for name, v in (("d", d), ("h", h)):
            if abs(math.sqrt(float(v @ v)) - 1.0) > UNIT_TOL:
                raise ConstraintViolation(f"{name} must have unit norm")
        if abs(float(d @ h)) > UNIT_TOL:
            raise ConstraintViolation("moment must be orthogonal to direction")
        if not (math.isfinite(depth) and depth > 0.0):
            raise ConstraintViolation(f"depth must be positive and finite, got {depth!r}")
        d.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "l", depth)

    def as_vector(self) -> np.ndarray:
        """Stacked 6-vector [d, l*h]."""
        return np.concatenate((self.d, self.l * self.h))


@dataclass(frozen=True)
class SphericalMoment:
    """Moment direction as azimuth ``theta`` in (-pi, pi] and elevation
    ``phi`` with |phi| < pi/2 - POLE_EPS."""

    theta: float
    phi: float

    def __post_init__(self):
        theta = float(self.theta)
        phi = float(self.phi)
        if not math.isfinite(theta):
            raise ConstraintViolation(f"theta must be finite, got {theta!r}")
        if not math.isfinite(phi) or abs(phi) >= PHI_MAX:
            raise PoleSingularity(
                f"phi={phi!r} leaves the admissible band |phi| < pi/2 - {POLE_EPS:g}"
            )
        object.__setattr__(self, "theta", wrap_angle(theta))
        object.__setattr__(self, "phi", phi)


@dataclass(frozen=True)
class ReducedLineState:
    """Minimal four-parameter line state.

    ``theta`` and ``phi`` locate the unit moment; ``eta1`` and ``eta2`` are
    the components of the inverse-depth-scaled direction d/l along the two
    frame vectors orthogonal to the moment (units 1/m).
    """

    theta: float
    phi: float
    eta1: float
    eta2: float

    def __post_init__(self):
        theta = float(self.theta)
        phi = float(self.phi)
        eta1 = float(self.eta1)
        eta2 = float(self.eta2)
        if not (math.isfinite(theta) and math.isfinite(eta1) and math.isfinite(eta2)):
            raise ConstraintViolation("state components must be finite")
        if not math.isfinite(phi) or abs(phi) >= PHI_MAX:
            raise PoleSingularity(
                f"phi={phi!r} leaves the admissible band |phi| < pi/2 - {POLE_EPS:g}"
            )
        # theta is stored as given; the integrators wrap it after full steps
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "eta1", eta1)
        object.__setattr__(self, "eta2", eta2)


@dataclass(frozen=True)
class LineBasis:
    """Orthonormal basis whose rows are the moment direction, its in-plane
    normal, and their cross product."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.shape != (3, 3):
            raise ConstraintViolation(f"basis must be 3x3, got {rows.shape}")
        if float(np.abs(rows @ rows.T - _EYE3).max()) > UNIT_TOL:
            raise ConstraintViolation("basis rows are not orthonormal")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)


class SphericalFrame(NamedTuple):
    """Shared trig of a moment direction: the three basis vectors as plain
    tuples plus the sines/cosines, kept scalar for use in hot loops."""

    h_s: tuple
    h_p: tuple
    h_c: tuple
    cos_t: float
    sin_t: float
    cos_p: float
    sin_p: float


def spherical_frame(theta: float, phi: float) -> SphericalFrame:
    """Basis vectors and trig values for moment angles (theta, phi)."""
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    return SphericalFrame(
        (ct * cp, st * cp, sp),
        (ct * sp, st * sp, -cp),
        (-st, ct, 0.0),
        ct,
        st,
        cp,
        sp,
    )


def line_from_point_direction(point, direction) -> PluckerLine:
    """Construct a line from any point on it and a direction vector.

    The result does not depend on which point of the line is supplied.

    Raises:
        DegenerateLine: if the line passes through the origin, where the
            moment is undefined and the depth is zero.
    """
    p = _vec3(point, "point")
    d = _vec3(direction, "direction")
    cross = _cross(p, d)
    norm_cross = float(np.linalg.norm(cross))
    norm_d = float(np.linalg.norm(d))
    if norm_cross <= DEGENERATE_TOL * float(np.linalg.norm(p)) * norm_d:
        raise DegenerateLine("line passes through the optical center")
    return PluckerLine(d / norm_d, cross / norm_cross, norm_cross / norm_d)


def moment_to_spherical(h) -> SphericalMoment:
    """Spherical angles of a unit moment vector.

    Raises:
        PoleSingularity: if the moment is within POLE_EPS of the vertical
            axis, where the azimuth is ill-defined. Callers should re-seed
            the scenario rather than continue.
    """
    hv = _vec3(h, "h")
    if abs(math.sqrt(float(hv @ hv)) - 1.0) > 1e-9:
        raise ConstraintViolation("moment must be a unit vector")
    z = min(1.0, max(-1.0, float(hv[2])))
    phi = math.asin(z)
    if abs(phi) >= PHI_MAX:
        raise PoleSingularity("moment is aligned with the vertical axis; re-seed the scenario")
    return SphericalMoment(math.atan2(float(hv[1]), float(hv[0])), phi)


def spherical_to_moment(s: SphericalMoment) -> np.ndarray:
    """Unit moment vector for the given spherical angles."""
    cp = math.cos(s.phi)
    return np.array([math.cos(s.theta) * cp, math.sin(s.theta) * cp, math.sin(s.phi)])


def perp_vector(s: SphericalMoment) -> np.ndarray:
    """Unit vector orthogonal to the moment, obtained by tilting it down to
    the equator's antipode: [cos(t)sin(p), sin(t)sin(p), -cos(p)]."""
    sp = math.sin(s.phi)
    return np.array([math.cos(s.theta) * sp, math.sin(s.theta) * sp, -math.cos(s.phi)])


def basis(s: SphericalMoment) -> LineBasis:
    """Orthonormal basis with rows (moment, in-plane normal, their cross)."""
    h_s = spherical_to_moment(s)
    h_p = perp_vector(s)
    return LineBasis(np.array([h_s, h_p, _cross(h_s, h_p)]))


def reduce(line: PluckerLine) -> ReducedLineState:
    """Map a line to its four-parameter state.

    The scaled direction chi = d/l is projected onto the moment-aligned
    basis; its component along the moment must vanish by orthogonality and
    is checked, then discarded.
    """
    s = moment_to_spherical(line.h)
    rows = basis(s).rows
    chi = line.d / line.l
    eta = rows @ chi
    if abs(float(eta[0])) >= ETA_RESIDUAL_TOL:
        raise ConstraintViolation(
            f"moment-aligned component of d/l is {float(eta[0]):.3e}, expected ~0"
        )
    return ReducedLineState(s.theta, s.phi, float(eta[1]), float(eta[2]))


def unreduce(state: ReducedLineState) -> PluckerLine:
    """Reconstruct the line from its four-parameter state.

    Raises:
        InfiniteDepth: if both inverse-depth components vanish.
    """
    if math.hypot(state.eta1, state.eta2) < 1e-12:
        raise InfiniteDepth("inverse-depth components are zero")
    s = SphericalMoment(state.theta, state.phi)
    rows = basis(s).rows
    chi = rows.T @ np.array([0.0, state.eta1, state.eta2])
    depth = 1.0 / math.sqrt(float(chi @ chi))
    return PluckerLine(chi * depth, spherical_to_moment(s), depth)
