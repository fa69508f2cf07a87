"""Exit criteria.  Each test is one criterion; the terminal summary lists
PASS/FAIL per criterion.  Run alone with ``pytest tests/test_acceptance.py``."""

import json
import time

import numpy as np
import pytest

from conftest import single_cube_body
from oracles import exhaustive_box_lsq, mc_tetra_second_moment, sinusoid_trajectory, trajectory_identities
from physdyn.cli import main
from physdyn.contact import contact_force, default_x_max, point_block, point_state
from physdyn.dynamics import angular_jacobians, contact_jacobian, linear_jacobians, mass_matrix
from physdyn.humanoid import make_humanoid
from physdyn.kinematics import MotionSequence, finite_difference_derivatives, forward_kinematics
from physdyn.massprops import body_mass_properties, part_inertia, part_volume_com, second_moment
from physdyn.metrics import euler_lagrange_loss, foot_sliding, plausibility_metrics, reconstruction_loss
from physdyn.shapes import cube, icosphere, tetrahedron
from physdyn.solver import ForceSolution, SolverConfig, frame_problem, solve_frame, solve_sequence

FD_EPS = 1e-6


def random_configuration(body, rng):
    q = rng.uniform(-np.pi, np.pi, body.n_q)
    q[:3] = rng.uniform(-1, 1, 3)
    return q


@pytest.mark.acceptance(1, "mass-property oracles")
def test_mass_property_oracles():
    start = time.perf_counter()
    m = 6.0
    I = part_inertia(cube(), m)
    np.testing.assert_allclose(I, np.diag([m / 6] * 3), rtol=1e-9, atol=1e-9 * m / 6)

    sphere = icosphere(1.0, 4)
    volume, _ = part_volume_com(sphere)
    assert abs(volume - 4 * np.pi / 3) <= 5e-3 * 4 * np.pi / 3
    Is = part_inertia(sphere, m)
    np.testing.assert_allclose(Is, 0.4 * m * np.eye(3), rtol=1e-2, atol=1e-2 * 0.4 * m)

    rng = np.random.default_rng(1)
    for _ in range(10):
        P = rng.normal(size=(3, 3))
        got = second_moment(tetrahedron((0, 0, 0), *P), np.zeros(3))
        expected = mc_tetra_second_moment(np.vstack([np.zeros(3), P]), 1_000_000, rng)
        assert np.abs(got - expected).max() <= 0.01 * np.abs(expected).max()
    assert time.perf_counter() - start < 30.0


@pytest.mark.acceptance(2, "humanoid fraction-mode mass is 70 kg")
def test_humanoid_mass():
    props = body_mass_properties(make_humanoid())
    assert len(props) == 24
    assert sum(p.mass for p in props) == 70.0


@pytest.mark.acceptance(3, "point, angular and contact Jacobians match central differences")
def test_jacobian_suite(humanoid):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    P = humanoid.part_count
    parts = np.arange(P)
    worst = 0.0
    for _ in range(100):
        q = random_configuration(humanoid, rng)
        rest = humanoid.tree.joint_rest + rng.normal(scale=0.2, size=(P, 3))
        pose = forward_kinematics(q, humanoid)
        Js = linear_jacobians(pose, parts, pose.to_world(parts, rest))
        Jr = angular_jacobians(pose, parts)
        Jc = contact_jacobian(q, humanoid, pose=pose)
        for k in range(humanoid.n_q):
            e = np.zeros(humanoid.n_q)
            e[k] = FD_EPS
            hi, lo = forward_kinematics(q + e, humanoid), forward_kinematics(q - e, humanoid)
            dp = (hi.to_world(parts, rest) - lo.to_world(parts, rest)) / (2 * FD_EPS)
            dR = (hi.rotations - lo.rotations) / (2 * FD_EPS)
            W = dR @ pose.rotations.transpose(0, 2, 1)
            w = np.stack([W[:, 2, 1] - W[:, 1, 2], W[:, 0, 2] - W[:, 2, 0], W[:, 1, 0] - W[:, 0, 1]], -1) / 2
            dc = (hi.contact_points(humanoid) - lo.contact_points(humanoid)).ravel() / (2 * FD_EPS)
            worst = max(worst, np.abs(Js[:, :, k] - dp).max(), np.abs(Jr[:, :, k] - w).max(),
                        np.abs(Jc[:, k] - dc).max())
    assert worst <= 1e-5, worst
    assert time.perf_counter() - start < 60.0


@pytest.mark.acceptance(4, "mass matrix symmetric, positive definite, base block m I")
def test_mass_matrix_properties(humanoid, humanoid_props):
    rng = np.random.default_rng(4)
    total = sum(p.mass for p in humanoid_props)
    for _ in range(100):
        M = mass_matrix(random_configuration(humanoid, rng), humanoid, humanoid_props)
        assert np.abs(M - M.T).max() <= 1e-10 * np.abs(M).max()
        assert np.linalg.eigvalsh(M).min() > 0
        np.testing.assert_allclose(M[:3, :3], total * np.eye(3), rtol=1e-12, atol=1e-12 * total)


@pytest.fixture(scope="module")
def identities(humanoid, humanoid_props):
    out = []
    for seed in range(20):
        _, q, qd, qdd = sinusoid_trajectory(humanoid.n_q, np.random.default_rng(100 + seed), fps=60.0, seconds=2.0)
        out.append(trajectory_identities(humanoid, humanoid_props, q, qd, qdd, 60.0))
    return out


@pytest.mark.acceptance(5, "energy-rate identity on 20 smooth trajectories")
def test_energy_rate(identities):
    for power, dE, _, _ in identities:
        assert np.linalg.norm(power - dE) <= 0.01 * np.linalg.norm(dE)


@pytest.mark.acceptance(6, "Newton consistency of the base rows")
def test_newton_consistency(identities):
    for _, _, base, dp in identities:
        assert np.linalg.norm(base - dp) <= 0.01 * np.linalg.norm(dp)


@pytest.mark.acceptance(7, "QP optimum matches exhaustive active-set enumeration")
def test_qp_optimality():
    rng = np.random.default_rng(7)
    for i in range(50):
        n = 3 * rng.integers(1, 4)
        B = rng.normal(size=(75, n)) * 10.0 ** rng.uniform(-3, 3, size=n)
        ub = 10.0 ** rng.uniform(-1, 2, size=n)
        x_star = rng.uniform(-0.5, 1.5, size=n) * ub
        r = B @ x_star + rng.normal(scale=0.1, size=75) * np.abs(B).max()
        mode = ("full-residual", "base-only")[i % 2]
        cfg = SolverConfig(mode=mode, x_max=ub)
        sol = solve_frame(r, B, cfg)
        rows = slice(None) if mode == "full-residual" else slice(0, 6)
        scale = r[rows] @ r[rows]
        best, _ = exhaustive_box_lsq(B[rows], r[rows], ub)
        assert abs(sol.objective - best) <= 1e-8 * scale
        assert sol.kkt_residual <= 1e-8


@pytest.mark.acceptance(8, "ballistic free body needs no force")
def test_ballistic():
    body = single_cube_body(side=0.3, contacts=range(8))
    props = body_mass_properties(body)
    mg = props[0].mass * 9.81
    fps = 120.0
    t = np.arange(60) / fps
    frames = np.zeros((60, 6))
    frames[:, 0] = 0.8 * t
    frames[:, 1] = -0.3 * t
    frames[:, 2] = 4.0 + 2.0 * t - 0.5 * 9.81 * t**2
    frames[:, 3] = 2.0 * t  # torque-free spin about a principal axis
    out = solve_sequence(MotionSequence(frames, fps), body, props)
    for sol in out:
        assert isinstance(sol, ForceSolution)
        assert np.linalg.norm(sol.lam) <= 1e-3 * mg
        assert np.linalg.norm(sol.tau) <= 1e-3 * mg
        assert sol.kkt_residual <= 1e-8


@pytest.mark.acceptance(9, "static standing humanoid balances its weight")
def test_static_equilibrium(humanoid, humanoid_props):
    seq = MotionSequence(np.zeros((5, humanoid.n_q)), 30.0)
    out = solve_sequence(seq, humanoid, humanoid_props, SolverConfig(mode="base-only"))
    for sol in out:
        fz = sol.lam.reshape(-1, 3)[:, 2].sum()
        assert abs(fz - 686.7) <= 0.05 * 686.7
        assert sol.kkt_residual <= 1e-8


@pytest.mark.acceptance(10, "contact model reference points")
def test_contact_points():
    state = point_state([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    assert state.s == 0.5
    assert np.array_equal(state.b_n, [0.0, 0.0, -2.0])
    x_max = default_x_max(1, 70.0)
    rng = np.random.default_rng(10)
    for d in np.linspace(1.0, 5.0, 41):
        for v in rng.normal(scale=3.0, size=(5, 3)):
            for x in rng.uniform(0, 1, size=(5, 3)) * x_max:
                assert np.abs(contact_force(point_block(point_state([0, 0, d], v)), x)).max() < 1e-20


@pytest.mark.acceptance(11, "metric and loss fixed points")
def test_metric_loss_fixed_points(humanoid, humanoid_props):
    rng = np.random.default_rng(11)
    _, q, _, _ = sinusoid_trajectory(humanoid.n_q, rng, seconds=0.5, height=0.02)
    seq = MotionSequence(q, 60.0)
    rep = plausibility_metrics(seq, humanoid, gt=seq, props=humanoid_props, metrics=["accl", "vel"])
    assert rep.accl == 0.0 and rep.vel == 0.0
    assert reconstruction_loss(seq, seq, humanoid) == 0.0

    up = q.copy()
    up[:, 2] += 1.0
    assert plausibility_metrics(MotionSequence(up, 60.0), humanoid, metrics=["gp"]).gp == 0.0

    sols = solve_sequence(seq, humanoid, humanoid_props)
    loss = euler_lagrange_loss(seq, [s.lam for s in sols], [s.tau for s in sols], humanoid, humanoid_props)
    qd, qdd = finite_difference_derivatives(seq)
    scale = sum(np.abs(frame_problem(q[t], qd[t], qdd[t], humanoid, humanoid_props)[0]).sum()
                for t in range(len(q)))
    assert loss <= 1e-12 * scale

    verts = np.zeros((20, 3, 3))
    verts[:, 0, 0] = 0.005 * np.arange(20)
    verts[:, 1] = [0.3, 0.1, 1.0]
    verts[:, 2] = [0.3, 0.2, 0.5]
    assert abs(foot_sliding(verts)[0] - 5.0) <= 1e-9


@pytest.mark.acceptance(12, "infer output is byte-identical across worker counts")
def test_cli_determinism(tmp_path, humanoid):
    body = tmp_path / "body.json"
    assert main(["humanoid", "--out", str(body)]) == 0
    _, q, _, _ = sinusoid_trajectory(humanoid.n_q, np.random.default_rng(12), seconds=0.4, height=0.02)
    motion = tmp_path / "motion.json"
    motion.write_text(json.dumps({"fps": 60.0, "angles": "euler_xyz", "frames": q.tolist()}))
    outputs = []
    for workers in (1, 2, 1):
        out = tmp_path / f"forces_{workers}_{len(outputs)}.json"
        assert main(["infer", "--body", str(body), "--motion", str(motion), "--workers", str(workers),
                     "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    assert json.loads(outputs[0])["warnings"] == 0
