import math

import numpy as np
import pytest

from linesfm import (
    CameraPose,
    CameraTwist,
    ConstraintViolation,
    PluckerLine,
    ReducedLineState,
    SphericalMoment,
    integrate_pose,
    interaction_matrix,
    line_from_point_direction,
    moment_coupling_matrix,
    plucker_dynamics,
    plucker_step,
    reduce,
    reduced_dynamics,
    rk4_step,
    spherical_dynamics,
    transform_line,
    unreduce,
)
from linesfm.checks import pushforward_rates
from linesfm.motion import StateDerivative, line_as_coords

from test_geometry import random_line


def random_twist(rng, scale=1.0):
    return CameraTwist(rng.uniform(-scale, scale, 3), rng.uniform(-scale, scale, 3))


def test_plucker_dynamics_zero_twist():
    line = line_from_point_direction([0.0, 0.0, 2.0], [1.0, 0.0, 0.0])
    d_dot, h_dot, l_dot = plucker_dynamics(line, CameraTwist.zero())
    assert np.allclose(d_dot, 0) and np.allclose(h_dot, 0) and l_dot == 0.0


def test_plucker_dynamics_hand_case():
    line = PluckerLine(np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), 2.0)
    d_dot, h_dot, l_dot = plucker_dynamics(
        line, CameraTwist(np.array([0.0, 1.0, 0.0]), np.zeros(3))
    )
    assert np.allclose(d_dot, 0)
    assert np.allclose(h_dot, [0.0, 0.0, -0.5])
    assert l_dot == pytest.approx(0.0)


def test_plucker_dynamics_preserves_norms():
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(1000):
        line = random_line(rng)
        d_dot, h_dot, _ = plucker_dynamics(line, random_twist(rng))
        worst = max(worst, abs(float(d_dot @ line.d)), abs(float(h_dot @ line.h)))
    assert worst < 1e-12


def test_coupling_gram_rank_two():
    rng = np.random.default_rng(21)
    for _ in range(500):
        h = rng.normal(size=3)
        h /= np.linalg.norm(h)
        nu = rng.uniform(-1, 1, 3)
        if abs(float(nu @ h)) < 1e-3:
            nu = nu + 0.5 * h
        gram = moment_coupling_matrix(h, nu)
        gram = gram @ gram.T
        eig = np.linalg.eigvalsh(gram)
        assert eig[0] < 1e-12 * eig[-1]
        assert eig[1] > 1e-6 * eig[-1]


def test_reduced_dynamics_zero_twist_and_constraint():
    line = line_from_point_direction([0.2, -0.4, 1.5], [0.3, 0.8, 0.1])
    h_dot, chi_dot = reduced_dynamics(line.h, line.d / line.l, CameraTwist.zero())
    assert np.allclose(h_dot, 0) and np.allclose(chi_dot, 0)
    with pytest.raises(ConstraintViolation):
        reduced_dynamics(line.h, line.h, CameraTwist.zero())


def test_reduced_dynamics_quotient_rule():
    rng = np.random.default_rng(22)
    worst = 0.0
    for _ in range(1000):
        line = random_line(rng)
        twist = random_twist(rng)
        d_dot, h_dot_a, l_dot = plucker_dynamics(line, twist)
        h_dot_b, chi_dot_b = reduced_dynamics(line.h, line.d / line.l, twist)
        chi_dot_a = (d_dot * line.l - line.d * l_dot) / (line.l * line.l)
        worst = max(
            worst,
            float(np.abs(h_dot_a - h_dot_b).max()),
            float(np.abs(chi_dot_a - chi_dot_b).max()),
        )
    assert worst < 1e-10


def test_spherical_dynamics_hand_case():
    state = ReducedLineState(0.0, 0.0, 0.5, 0.2)
    der = spherical_dynamics(state, CameraTwist(np.array([1.0, 0.0, 0.0]), np.zeros(3)))
    assert der.d_theta == pytest.approx(0.5)
    assert der.d_phi == pytest.approx(0.2)
    assert der.d_eta1 == pytest.approx(0.0)
    assert der.d_eta2 == pytest.approx(0.0)
    zero = spherical_dynamics(state, CameraTwist.zero())
    assert (zero.d_theta, zero.d_phi, zero.d_eta1, zero.d_eta2) == (0, 0, 0, 0)


def test_spherical_dynamics_chain_rule():
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(1000):
        state = ReducedLineState(
            rng.uniform(-np.pi, np.pi),
            rng.uniform(-1.2, 1.2),
            rng.uniform(-2, 2),
            rng.uniform(-2, 2),
        )
        twist = random_twist(rng)
        der = spherical_dynamics(state, twist)
        ref = pushforward_rates(state, twist)
        got = (der.d_theta, der.d_phi, der.d_eta1, der.d_eta2)
        worst = max(worst, float(np.abs(np.array(got) - np.array(ref)).max()))
    assert worst < 1e-9


def test_interaction_matrix_examples():
    m = interaction_matrix(SphericalMoment(math.pi / 2, 0.0), np.array([0.0, 1.0, 0.0]))
    assert np.allclose(m, np.eye(2))
    m = interaction_matrix(SphericalMoment(0.0, math.pi / 3), np.array([2.0, 0.0, 0.0]))
    assert np.allclose(m, [[2.0, 0.0], [0.0, 1.0]])
    # velocity inside the interpretation plane: no coupling at all
    s = SphericalMoment(0.3, 0.4)
    from linesfm import perp_vector

    m = interaction_matrix(s, 0.7 * perp_vector(s))
    assert np.allclose(m, 0.0, atol=1e-16)


def test_transform_line_identity_and_slide():
    line = line_from_point_direction([0.1, 0.4, 2.2], [0.2, -0.5, 0.3])
    same = transform_line(line, CameraPose.identity())
    assert np.allclose(same.as_vector(), line.as_vector(), atol=1e-15)
    slid = transform_line(line, CameraPose(np.eye(3), 0.8 * line.d))
    assert np.allclose(slid.as_vector(), line.as_vector(), atol=1e-12)


def test_transform_line_forward_camera():
    line = line_from_point_direction([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    moved = transform_line(line, CameraPose(np.eye(3), np.array([0.0, 0.0, 0.5])))
    assert moved.l == pytest.approx(0.5)
    assert np.allclose(moved.h, [0, 1, 0])
    assert np.allclose(moved.d, [1, 0, 0])


def test_transform_line_matches_point_reconstruction():
    rng = np.random.default_rng(24)
    for _ in range(300):
        p = rng.uniform(-2, 2, 3) + [0, 0, 3]
        d = rng.normal(size=3)
        line = line_from_point_direction(p, d)
        angle_axis = rng.normal(size=3) * 0.5
        pose = integrate_pose(
            CameraPose.identity(), CameraTwist(rng.uniform(-1, 1, 3), angle_axis), 1.0
        )
        moved = transform_line(line, pose)
        p_cam = pose.rotation.T @ (p - pose.translation)
        d_cam = pose.rotation.T @ (d / np.linalg.norm(d))
        ref = line_from_point_direction(p_cam, d_cam)
        assert np.abs(moved.as_vector() - ref.as_vector()).max() < 1e-10


def test_rk4_zero_and_constant_field():
    state = ReducedLineState(0.2, -0.3, 0.7, -0.1)
    twist = CameraTwist.zero()

    def zero_field(x, u):
        return StateDerivative(0.0, 0.0, 0.0, 0.0)

    assert rk4_step(zero_field, state, twist, 1e-3) == state

    def const_field(x, u):
        return StateDerivative(0.5, -0.25, 1.0, 2.0)

    out = rk4_step(const_field, state, twist, 0.1)
    assert out.theta == pytest.approx(0.2 + 0.05, abs=1e-15)
    assert out.phi == pytest.approx(-0.3 - 0.025, abs=1e-15)
    assert out.eta1 == pytest.approx(0.7 + 0.1, abs=1e-15)
    assert out.eta2 == pytest.approx(-0.1 + 0.2, abs=1e-15)


def test_rk4_order():
    state = ReducedLineState(0.3, -0.4, 0.8, -0.5)
    twist = CameraTwist(np.array([0.4, -0.3, 0.2]), np.array([0.1, 0.2, -0.3]))

    def advance(x, dt, n):
        for _ in range(n):
            x = rk4_step(spherical_dynamics, x, twist, dt)
        return np.array([x.theta, x.phi, x.eta1, x.eta2])

    ref = advance(state, 0.02 / 16, 16)
    err_coarse = np.linalg.norm(advance(state, 0.02, 1) - ref)
    err_fine = np.linalg.norm(advance(state, 0.01, 2) - ref)
    assert err_coarse / err_fine > 12.0


def test_rk4_wraps_azimuth():
    state = ReducedLineState(math.pi - 1e-4, 0.0, 0.5, 0.0)

    def push(x, u):
        return StateDerivative(1.0, 0.0, 0.0, 0.0)

    out = rk4_step(push, state, CameraTwist.zero(), 1e-3)
    assert -math.pi < out.theta <= math.pi


def test_integrate_pose_examples():
    pose = CameraPose.identity()
    out = integrate_pose(pose, CameraTwist.zero().negated(), 1e-3)
    assert np.allclose(out.rotation, np.eye(3)) and np.allclose(out.translation, 0)

    out = integrate_pose(pose, CameraTwist(np.array([1.0, 0.0, 0.0]), np.zeros(3)), 0.1)
    assert np.allclose(out.translation, [0.1, 0.0, 0.0])

    out = integrate_pose(pose, CameraTwist(np.zeros(3), np.array([0.0, 0.0, math.pi])), 1.0)
    expect = np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.abs(out.rotation - expect).max() < 1e-10


def test_integrate_pose_orthonormal_long_run():
    pose = CameraPose.identity()
    twist = CameraTwist(np.array([0.3, -0.2, 0.1]), np.array([0.5, 0.4, -0.3]))
    for _ in range(100_000):
        pose = integrate_pose(pose, twist, 1e-3)
    drift = np.abs(pose.rotation.T @ pose.rotation - np.eye(3)).max()
    assert drift < 1e-10


def test_plucker_step_constraint_drift():
    line = line_from_point_direction([0.4, -0.7, 2.0], [0.3, 0.9, 0.2])
    y = line_as_coords(line)
    twist = CameraTwist(np.array([0.2, -0.1, 0.15]), np.array([0.1, -0.2, 0.05]))
    worst = 0.0
    for _ in range(1000):
        y = plucker_step(y, twist, 1e-3)
        worst = max(
            worst,
            abs(float(y[:3] @ y[3:6])),
            abs(float(np.linalg.norm(y[:3])) - 1.0),
            abs(float(np.linalg.norm(y[3:6])) - 1.0),
        )
    assert worst < 1e-9


def test_plucker_step_cross_validates_transform_truth():
    # the differential and analytic propagators must tell the same story
    rng = np.random.default_rng(25)
    line = random_line(rng, min_depth=0.8)
    twist = CameraTwist(np.array([0.25, -0.2, 0.1]), np.array([-0.1, 0.15, 0.2]))
    y = line_as_coords(line)
    pose = CameraPose.identity()
    worst = 0.0
    for _ in range(1000):
        y = plucker_step(y, twist, 1e-3)
        pose = integrate_pose(pose, twist.negated(), 1e-3)
        truth = transform_line(line, pose)
        worst = max(worst, float(np.abs(y - line_as_coords(truth)).max()))
    assert worst < 1e-6


def test_camera_pose_validation():
    with pytest.raises(ConstraintViolation):
        CameraPose(np.eye(3) * 2.0, np.zeros(3))
    with pytest.raises(ConstraintViolation):
        CameraPose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))  # orthonormal but improper


def test_spherical_representation_matches_analytic_truth():
    # short version of the equivalence suite: 5 scenarios, 1 s horizon
    rng = np.random.default_rng(26)
    dt = 1e-3
    for _ in range(5):
        line = random_line(rng, min_depth=0.6)
        s = reduce(line)
        if abs(s.phi) > 1.0:
            continue
        amp_n = rng.uniform(0, 0.3, 3)
        amp_w = rng.uniform(0, 0.3, 3)
        freq = rng.uniform(0.5, 2.0, 3)
        state = s
        pose = CameraPose.identity()
        for k in range(1000):
            t = k * dt
            u = CameraTwist(amp_n * np.sin(freq * t), amp_w * np.cos(freq * t))
            state = rk4_step(spherical_dynamics, state, u, dt)
            pose = integrate_pose(pose, u.negated(), dt)
        truth = transform_line(line, pose)
        assert np.linalg.norm(unreduce(state).as_vector() - truth.as_vector()) < 1e-6
