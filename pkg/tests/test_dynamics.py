import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import single_cube_body, two_link_body
from oracles import (fd_angular_jacobian, fd_gradient, fd_point_jacobian, fd_time_derivative, sinusoid_trajectory,
                     trajectory_identities)
from physdyn.dynamics import (angular_jacobian, angular_jacobians, bias_force, contact_jacobian, dynamics_terms,
                              el_residual, gravity_vector, jacobian_time_derivative, linear_jacobians, mass_matrix,
                              point_jacobian, potential_energy)
from physdyn.kinematics import MotionSequence, finite_difference_derivatives, forward_kinematics, vee
from physdyn.massprops import body_mass_properties


def random_q(body, rng, spread=0.8):
    q = rng.uniform(-spread, spread, body.n_q)
    q[2] += 1.0
    return q


# -- Jacobians ------------------------------------------------------------------


def test_free_body_translation_block(cube_body, rng):
    q = np.zeros(6)
    q[:3] = rng.normal(size=3)
    J = point_jacobian(q, cube_body, 0, rng.normal(size=3))
    np.testing.assert_array_equal(J[:, :3], np.eye(3))


def test_zero_lever_arm(chain_body):
    q = np.zeros(chain_body.n_q)
    pose = forward_kinematics(q, chain_body)
    J = point_jacobian(q, chain_body, 1, pose.joints[1])
    np.testing.assert_array_equal(J[:, 6:9], 0.0)


def test_point_jacobian_matches_fd(humanoid, rng):
    for _ in range(5):
        q = random_q(humanoid, rng)
        parts = rng.integers(0, humanoid.part_count, size=6)
        rest = rng.normal(scale=0.3, size=(6, 3)) + humanoid.tree.joint_rest[parts]
        pose = forward_kinematics(q, humanoid)
        J = linear_jacobians(pose, parts, pose.to_world(parts, rest))
        assert np.abs(J - fd_point_jacobian(q, humanoid, parts, rest)).max() <= 1e-6


def test_root_spin_angular_velocity(cube_body):
    J = angular_jacobian(np.zeros(6), cube_body, 0)
    np.testing.assert_array_equal(J @ [0, 0, 0, 1.5, 0, 0], [1.5, 0, 0])
    np.testing.assert_array_equal(J[:, :3], 0.0)


def test_non_ancestor_columns_zero(humanoid, rng):
    pose = forward_kinematics(random_q(humanoid, rng), humanoid)
    # left hip (1) is not an ancestor of the right foot (8)
    Jr = angular_jacobians(pose, [8])[0]
    Js = linear_jacobians(pose, [8], pose.joints[[8]])[0]
    cols = humanoid.tree.dof_index(1, 0) + np.arange(3)
    assert not Jr[:, cols].any() and not Js[:, cols].any()


def test_angular_jacobian_matches_fd(humanoid, rng):
    for _ in range(5):
        q = random_q(humanoid, rng)
        J = angular_jacobians(forward_kinematics(q, humanoid), np.arange(humanoid.part_count))
        assert np.abs(J - fd_angular_jacobian(q, humanoid)).max() <= 1e-5


def test_angular_velocity_from_rotation_rate(humanoid, rng):
    q, qd = random_q(humanoid, rng), rng.normal(size=humanoid.n_q)
    eps = 1e-6
    Rp = forward_kinematics(q + eps * qd, humanoid).rotations
    Rm = forward_kinematics(q - eps * qd, humanoid).rotations
    R = forward_kinematics(q, humanoid).rotations
    for n in range(humanoid.part_count):
        w_fd = vee((Rp[n] - Rm[n]) / (2 * eps) @ R[n].T)
        np.testing.assert_allclose(angular_jacobian(q, humanoid, n) @ qd, w_fd, atol=1e-5)


def test_contact_jacobian_shapes_and_fd(humanoid, cube_body, rng):
    assert contact_jacobian(np.zeros(6), cube_body).shape == (0, 6)
    q, qd = random_q(humanoid, rng), rng.normal(size=humanoid.n_q)
    J = contact_jacobian(q, humanoid)
    assert J.shape == (3 * humanoid.n_contacts, humanoid.n_q)
    assert not (J @ np.zeros(humanoid.n_q)).any()
    eps = 1e-6
    v_fd = (forward_kinematics(q + eps * qd, humanoid).contact_points(humanoid)
            - forward_kinematics(q - eps * qd, humanoid).contact_points(humanoid)) / (2 * eps)
    assert np.abs(J @ qd - v_fd.ravel()).max() <= 1e-5


# -- Jacobian time derivatives ------------------------------------------------------


def test_jdot_zero_cases(humanoid, cube_body, rng):
    q = random_q(humanoid, rng)
    assert not jacobian_time_derivative(q, np.zeros(humanoid.n_q), humanoid, 5, [0, 0, 1]).any()
    qd = np.array([1.0, -2.0, 0.5, 0, 0, 0])
    np.testing.assert_array_equal(jacobian_time_derivative(np.zeros(6), qd, cube_body, 0, [0.2, 0, 0]), 0.0)


def test_jdot_matches_trajectory_fd(humanoid):
    rng = np.random.default_rng(2)
    fps = 120.0
    _, q, qd, _ = sinusoid_trajectory(humanoid.n_q, rng, fps=fps, seconds=0.3)
    part, rest = 21, humanoid.tree.joint_rest[21] + [0.05, 0.02, 0.0]

    def lin(qq):
        pose = forward_kinematics(qq, humanoid)
        return linear_jacobians(pose, [part], pose.to_world([part], [rest]))[0]

    for kind, jac in (("linear", lin), ("angular", lambda qq: angular_jacobian(qq, humanoid, part))):
        fd = fd_time_derivative([jac(qt) for qt in q], fps)
        for k in range(0, len(fd), 7):
            t = k + 2
            got = jacobian_time_derivative(q[t], qd[t], humanoid, part, rest, kind=kind)
            assert np.abs(got - fd[k]).max() <= 1e-4


def test_jdot_kind_errors(humanoid):
    with pytest.raises(ValueError):
        jacobian_time_derivative(np.zeros(humanoid.n_q), np.ones(humanoid.n_q), humanoid, 0, kind="linear")
    with pytest.raises(ValueError):
        jacobian_time_derivative(np.zeros(humanoid.n_q), np.ones(humanoid.n_q), humanoid, 0, [0, 0, 0], kind="x")


# -- mass matrix, gravity, bias -----------------------------------------------------------


def test_single_body_mass_matrix(cube_body):
    props = body_mass_properties(cube_body)
    M = mass_matrix(np.zeros(6), cube_body, props)
    np.testing.assert_allclose(M[:3, :3], props[0].mass * np.eye(3), rtol=1e-12)
    np.testing.assert_allclose(M[3:, 3:], props[0].inertia, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(M[:3, 3:], 0.0, atol=1e-12)


def test_mass_matrix_properties(humanoid, humanoid_props, rng):
    for _ in range(10):
        M = mass_matrix(random_q(humanoid, rng, spread=np.pi), humanoid, humanoid_props)
        assert np.abs(M - M.T).max() <= 1e-10 * np.abs(M).max()
        assert np.linalg.eigvalsh(M).min() > 0
        np.testing.assert_allclose(M[:3, :3], 70.0 * np.eye(3), rtol=1e-12, atol=1e-12)


def test_kinetic_energy_partwise(humanoid, humanoid_props, rng):
    q = np.zeros(humanoid.n_q)
    qd = rng.normal(size=humanoid.n_q)
    eps = 1e-6
    hi, lo, mid = (forward_kinematics(q + s * eps * qd, humanoid) for s in (1, -1, 0))
    v = (hi.coms(humanoid_props) - lo.coms(humanoid_props)) / (2 * eps)
    expected = 0.0
    for n, p in enumerate(humanoid_props):
        w = vee((hi.rotations[n] - lo.rotations[n]) / (2 * eps) @ mid.rotations[n].T)
        Iw = mid.rotations[n] @ p.inertia @ mid.rotations[n].T
        expected += 0.5 * p.mass * v[n] @ v[n] + 0.5 * w @ Iw @ w
    got = 0.5 * qd @ mass_matrix(q, humanoid, humanoid_props) @ qd
    assert got == pytest.approx(expected, rel=1e-3)


def test_gravity_vector(humanoid, humanoid_props, rng):
    q = random_q(humanoid, rng)
    g = gravity_vector(q, humanoid, humanoid_props)
    assert g[2] == pytest.approx(9.81 * 70.0, rel=1e-12)
    assert g[0] == 0.0 and g[1] == 0.0
    fd = fd_gradient(lambda x: potential_energy(x, humanoid, humanoid_props), q)
    assert np.abs(g - fd).max() <= 1e-5


def test_gravity_is_configurable(humanoid, humanoid_props):
    q = np.zeros(humanoid.n_q)
    assert gravity_vector(q, humanoid, humanoid_props, gravity=1.62)[2] == pytest.approx(1.62 * 70.0)


def test_bias_zero_velocity(humanoid, humanoid_props, rng):
    q = random_q(humanoid, rng)
    assert not bias_force(q, np.zeros(humanoid.n_q), humanoid, humanoid_props).any()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3).filter(lambda a: abs(a) > 0.1))
def test_bias_quadratic_homogeneity(seed, alpha):
    body = two_link_body()
    props = body_mass_properties(body)
    rng = np.random.default_rng(seed)
    q, qd = random_q(body, rng), rng.normal(size=body.n_q)
    C1 = bias_force(q, qd, body, props)
    C2 = bias_force(q, alpha * qd, body, props)
    assert np.abs(C2 - alpha**2 * C1).max() <= 1e-8 * alpha**2 * np.abs(C1).max()


def test_doubling_velocity_quadruples_bias(humanoid, humanoid_props, rng):
    q, qd = random_q(humanoid, rng), rng.normal(size=humanoid.n_q)
    C1 = bias_force(q, qd, humanoid, humanoid_props)
    np.testing.assert_allclose(bias_force(q, 2 * qd, humanoid, humanoid_props), 4 * C1,
                               atol=1e-8 * np.abs(C1).max())


def test_spinning_body_power_identity():
    body = single_cube_body(side=0.4, center=(0.1, 0.0, 0.0))
    props = body_mass_properties(body)
    _, q, qd, qdd = sinusoid_trajectory(body.n_q, np.random.default_rng(4), amp=2.0)
    power, dE, base, dp = trajectory_identities(body, props, q, qd, qdd, 60.0)
    assert np.linalg.norm(power - dE) <= 0.01 * np.linalg.norm(dE)
    assert np.linalg.norm(base - dp) <= 0.01 * np.linalg.norm(dp)


def test_humanoid_energy_and_momentum_identities(humanoid, humanoid_props):
    _, q, qd, qdd = sinusoid_trajectory(humanoid.n_q, np.random.default_rng(8), seconds=0.5)
    power, dE, base, dp = trajectory_identities(humanoid, humanoid_props, q, qd, qdd, 60.0)
    assert np.linalg.norm(power - dE) <= 0.01 * np.linalg.norm(dE)
    assert np.linalg.norm(base - dp) <= 0.01 * np.linalg.norm(dp)


# -- residual --------------------------------------------------------------------------


def test_residual_gravity_compensation(humanoid, humanoid_props, rng):
    q = random_q(humanoid, rng)
    z = np.zeros(humanoid.n_q)
    g = gravity_vector(q, humanoid, humanoid_props)
    r = el_residual(q, z, z, np.zeros(3 * humanoid.n_contacts), g, humanoid, humanoid_props)
    np.testing.assert_array_equal(r, 0.0)


def test_residual_by_construction(humanoid, humanoid_props, rng):
    q, qd, qdd = random_q(humanoid, rng), rng.normal(size=humanoid.n_q), rng.normal(size=humanoid.n_q)
    lam = rng.normal(size=3 * humanoid.n_contacts)
    terms = dynamics_terms(q, qd, humanoid, humanoid_props)
    tau = terms.M @ qdd + terms.C + terms.g - terms.J_C.T @ lam
    r = el_residual(q, qd, qdd, lam, tau, humanoid, humanoid_props, terms=terms)
    assert np.abs(r).max() <= 1e-10 * np.abs(tau).max()


def test_residual_ballistic(humanoid, humanoid_props):
    fps = 120.0
    t = np.arange(24) / fps
    frames = np.zeros((24, humanoid.n_q))
    frames[:, 3:] = np.random.default_rng(0).uniform(-0.4, 0.4, humanoid.n_q - 3)
    frames[:, 0] = 0.7 * t
    frames[:, 2] = 1.5 + 2.0 * t - 0.5 * 9.81 * t**2
    seq = MotionSequence(frames, fps)
    qd, qdd = finite_difference_derivatives(seq)
    for k in range(1, 23, 5):
        r = el_residual(frames[k], qd[k], qdd[k], np.zeros(3 * humanoid.n_contacts), np.zeros(humanoid.n_q),
                        humanoid, humanoid_props)
        assert np.linalg.norm(r) <= 1e-3 * 70.0 * 9.81


def test_residual_dimension_mismatch(humanoid, humanoid_props):
    z = np.zeros(humanoid.n_q)
    with pytest.raises(ValueError, match="lambda"):
        el_residual(z, z, z, np.zeros(5), z, humanoid, humanoid_props)
    with pytest.raises(ValueError, match="tau"):
        el_residual(z, z, z, np.zeros(3 * humanoid.n_contacts), np.zeros(4), humanoid, humanoid_props)
