"""Cross-representation self-check oracles.

Each oracle validates one implementation path against an independent route
to the same quantity (round trips, the chain rule through the
scaled-direction flow, finite differences, closed-form rotations). They run
fast enough to serve as a smoke suite behind the ``check`` CLI command.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import control, geometry, motion
from .geometry import (
    PluckerLine,
    ReducedLineState,
    SphericalMoment,
    line_from_point_direction,
    spherical_frame,
)
from .motion import CameraTwist

CHECK_SEED = 20240613


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    detail: str


def _random_unit(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_state(rng, eta_scale=2.0) -> ReducedLineState:
    return ReducedLineState(
        rng.uniform(-np.pi, np.pi),
        rng.uniform(-1.2, 1.2),
        rng.uniform(-eta_scale, eta_scale),
        rng.uniform(-eta_scale, eta_scale),
    )


def _random_twist(rng, scale=1.0) -> CameraTwist:
    return CameraTwist(rng.uniform(-scale, scale, 3), rng.uniform(-scale, scale, 3))


def _random_line(rng) -> PluckerLine:
    while True:
        p = rng.uniform(-3.0, 3.0, 3)
        d = _random_unit(rng)
        try:
            line = line_from_point_direction(p, d)
            geometry.moment_to_spherical(line.h)
        except (geometry.DegenerateLine, geometry.PoleSingularity):
            continue
        if line.l > 0.2:
            return line


def pushforward_rates(state: ReducedLineState, twist: CameraTwist):
    """Angle and inverse-depth rates obtained from the scaled-direction flow
    via the chain rule, bypassing the closed-form spherical expressions."""
    f = spherical_frame(state.theta, state.phi)
    h_s = np.array(f.h_s)
    h_p = np.array(f.h_p)
    h_c = np.array(f.h_c)
    chi = state.eta1 * h_p + state.eta2 * h_c
    h_dot, chi_dot = motion.reduced_dynamics(h_s, chi, twist)
    d_theta = float(h_c @ h_dot) / f.cos_p
    d_phi = -float(h_p @ h_dot)
    hp_dot = f.sin_p * d_theta * h_c + d_phi * h_s
    hc_dot = d_theta * (-f.cos_p * h_s - f.sin_p * h_p)
    d_eta1 = float(hp_dot @ chi) + float(h_p @ chi_dot)
    d_eta2 = float(hc_dot @ chi) + float(h_c @ chi_dot)
    return d_theta, d_phi, d_eta1, d_eta2


def check_point_shift_invariance(rng) -> OracleResult:
    worst = 0.0
    for _ in range(1000):
        line = _random_line(rng)
        p = line.l * motion._cross(line.d, line.h)
        shift = rng.uniform(-5.0, 5.0)
        other = line_from_point_direction(p + shift * line.d, line.d)
        worst = max(worst, float(np.abs(other.as_vector() - line.as_vector()).max()))
    return OracleResult("point-shift-invariance", worst < 1e-12, f"max dev {worst:.3e}")


def check_moment_round_trip(rng) -> OracleResult:
    worst = 0.0
    for _ in range(1000):
        h = _random_unit(rng)
        if abs(h[2]) > 0.99:
            continue
        back = geometry.spherical_to_moment(geometry.moment_to_spherical(h))
        worst = max(worst, float(np.abs(back - h).max()))
    return OracleResult("moment-round-trip", worst < 1e-12, f"max dev {worst:.3e}")


def check_reduce_round_trip(rng) -> OracleResult:
    worst = 0.0
    for _ in range(1000):
        line = _random_line(rng)
        back = geometry.unreduce(geometry.reduce(line))
        worst = max(worst, float(np.abs(back.as_vector() - line.as_vector()).max()))
    return OracleResult("reduce-round-trip", worst < 1e-10, f"max dev {worst:.3e}")


def check_basis_rotation(rng) -> OracleResult:
    worst_ortho = 0.0
    worst_det = 0.0
    worst_row = 0.0
    for _ in range(1000):
        s = SphericalMoment(rng.uniform(-np.pi, np.pi), rng.uniform(-1.5, 1.5))
        rows = geometry.basis(s).rows
        worst_ortho = max(worst_ortho, float(np.abs(rows @ rows.T - np.eye(3)).max()))
        worst_det = max(worst_det, abs(float(np.linalg.det(rows)) - 1.0))
        closed = np.array([-np.sin(s.theta), np.cos(s.theta), 0.0])
        worst_row = max(worst_row, float(np.abs(rows[2] - closed).max()))
    ok = worst_ortho < 1e-12 and worst_det < 1e-12 and worst_row < 1e-12
    return OracleResult(
        "basis-rotation",
        ok,
        f"ortho {worst_ortho:.3e}, det {worst_det:.3e}, third-row {worst_row:.3e}",
    )


def check_plucker_vs_chi_dynamics(rng) -> OracleResult:
    worst = 0.0
    for _ in range(1000):
        line = _random_line(rng)
        twist = _random_twist(rng)
        d_dot, h_dot, l_dot = motion.plucker_dynamics(line, twist)
        chi = line.d / line.l
        h_dot2, chi_dot2 = motion.reduced_dynamics(line.h, chi, twist)
        chi_dot = (d_dot * line.l - line.d * l_dot) / (line.l * line.l)
        worst = max(
            worst,
            float(np.abs(h_dot - h_dot2).max()),
            float(np.abs(chi_dot - chi_dot2).max()),
        )
    return OracleResult("plucker-vs-chi-dynamics", worst < 1e-10, f"max dev {worst:.3e}")


def check_spherical_chain_rule(rng) -> OracleResult:
    worst = 0.0
    for _ in range(1000):
        state = _random_state(rng)
        twist = _random_twist(rng)
        ref = np.array(pushforward_rates(state, twist))
        der = motion.spherical_dynamics(state, twist)
        got = np.array([der.d_theta, der.d_phi, der.d_eta1, der.d_eta2])
        worst = max(worst, float(np.abs(got - ref).max()))
    return OracleResult("spherical-chain-rule", worst < 1e-9, f"max dev {worst:.3e}")


def check_jacobian_finite_difference(rng) -> OracleResult:
    step = 1e-6
    worst = 0.0
    for _ in range(1000):
        s = SphericalMoment(rng.uniform(-np.pi, np.pi), rng.uniform(-1.4, 1.4))
        h_s = geometry.spherical_to_moment(s)
        nu = rng.uniform(-1.0, 1.0, 3)
        if abs(float(nu @ h_s)) < 1e-3:
            nu = nu + 0.5 * h_s
        jac = control.jacobian_nu(s, nu)
        fd = np.empty((2, 3))
        for i in range(3):
            delta = np.zeros(3)
            delta[i] = step
            hi = control.eigenvalues(motion.interaction_matrix(s, nu + delta))
            lo = control.eigenvalues(motion.interaction_matrix(s, nu - delta))
            fd[:, i] = (hi - lo) / (2.0 * step)
        rel = float(np.linalg.norm(fd - jac) / max(np.linalg.norm(jac), 1e-12))
        worst = max(worst, rel)
    return OracleResult(
        "jacobian-finite-difference", worst < 1e-6, f"max rel err {worst:.3e}"
    )


def check_compensation_zeroing(rng) -> OracleResult:
    worst = 0.0
    for i in range(1000):
        theta = rng.uniform(-np.pi, np.pi)
        # exercise both branches: generic elevation, then inside the sin(phi) band
        phi = rng.uniform(-1.4, 1.4) if i % 2 == 0 else rng.uniform(-9e-4, 9e-4)
        state = ReducedLineState(theta, phi, rng.uniform(-2, 2), rng.uniform(-2, 2))
        nu = rng.uniform(-1.0, 1.0, 3)
        omega = control.compensating_omega(state, nu)
        der = motion.spherical_dynamics(state, CameraTwist(nu, omega))
        worst = max(worst, abs(der.d_theta), abs(der.d_phi))
    return OracleResult("compensation-zeroing", worst < 1e-12, f"max angle rate {worst:.3e}")


def check_coupling_rank_deficiency(rng) -> OracleResult:
    ok = True
    detail = ""
    for _ in range(500):
        h = _random_unit(rng)
        nu = rng.uniform(-1.0, 1.0, 3)
        if abs(float(nu @ h)) < 1e-3:
            nu = nu + 0.5 * h
        coupling = motion.moment_coupling_matrix(h, nu)
        eig = np.linalg.eigvalsh(coupling @ coupling.T)
        scale = float(eig[-1])
        if not (eig[0] < 1e-12 * scale and eig[1] > 1e-6 * scale):
            ok = False
            detail = f"eigs {eig}"
            break
    return OracleResult("coupling-rank-deficiency", ok, detail or "always rank 2")


def check_rk4_order(rng) -> OracleResult:
    state = ReducedLineState(0.3, -0.4, 0.8, -0.5)
    twist = CameraTwist(np.array([0.4, -0.3, 0.2]), np.array([0.1, 0.2, -0.3]))

    def advance(x, dt, n):
        for _ in range(n):
            x = motion.rk4_step(motion.spherical_dynamics, x, twist, dt)
        return x

    def as_vec(x):
        return np.array([x.theta, x.phi, x.eta1, x.eta2])

    ref = as_vec(advance(state, 0.02 / 16, 16))
    err_coarse = float(np.linalg.norm(as_vec(advance(state, 0.02, 1)) - ref))
    err_fine = float(np.linalg.norm(as_vec(advance(state, 0.01, 2)) - ref))
    ratio = err_coarse / err_fine if err_fine > 0 else np.inf
    return OracleResult("rk4-order", ratio > 12.0, f"halving ratio {ratio:.1f} (16 ideal)")


_ORACLES = (
    check_point_shift_invariance,
    check_moment_round_trip,
    check_reduce_round_trip,
    check_basis_rotation,
    check_plucker_vs_chi_dynamics,
    check_spherical_chain_rule,
    check_jacobian_finite_difference,
    check_compensation_zeroing,
    check_coupling_rank_deficiency,
    check_rk4_order,
)


def run_all(seed: int = CHECK_SEED):
    """Run every oracle on its own deterministic stream."""
    results = []
    for oracle in _ORACLES:
        rng = np.random.default_rng(seed)
        results.append(oracle(rng))
    return results
