"""Rotations, forward kinematics and finite-difference motion derivatives.

Every 3-DOF joint (and the root rotation) is three sequential revolute DOFs
with intrinsic X-Y-Z Euler angles, ``R = Rx(a) Ry(b) Rz(c)``.  The world is
z-up with the ground at z = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

ORTHO_TOL = 1e-9
GIMBAL_MARGIN = 1e-3


class MotionError(ValueError):
    pass


# ----------------------------------------------------------------------------
# rotations


def rot_x(a):
    a = np.asarray(a, dtype=float)
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([o, z, z], -1), np.stack([z, c, -s], -1), np.stack([z, s, c], -1)], -2)


def rot_y(a):
    a = np.asarray(a, dtype=float)
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


def rot_z(a):
    a = np.asarray(a, dtype=float)
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(a), np.zeros_like(a)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def euler_to_matrix(euler):
    e = np.asarray(euler, dtype=float)
    return rot_x(e[..., 0]) @ rot_y(e[..., 1]) @ rot_z(e[..., 2])


def check_rotation(R):
    R = np.asarray(R, dtype=float)
    eye = np.broadcast_to(np.eye(3), R.shape)
    err = np.abs(np.swapaxes(R, -1, -2) @ R - eye).max() if R.size else 0.0
    if err > ORTHO_TOL or np.any(np.linalg.det(R) < 0):
        raise ValueError(f"matrix is not a proper rotation (orthonormality error {err:.3g})")
    return R


def matrix_to_euler(R):
    """Intrinsic XYZ angles; at gimbal lock the third angle is set to zero."""
    R = check_rotation(R)
    sb = np.clip(R[..., 0, 2], -1.0, 1.0)
    b = np.arcsin(sb)
    a = np.arctan2(-R[..., 1, 2], R[..., 2, 2])
    c = np.arctan2(-R[..., 0, 1], R[..., 0, 0])
    lock = np.abs(np.abs(sb) - 1.0) < 1e-12
    if np.any(lock):
        a = np.where(lock, np.arctan2(R[..., 2, 1], R[..., 1, 1]), a)
        c = np.where(lock, 0.0, c)
        b = np.where(lock, np.copysign(np.pi / 2, sb), b)
    return np.stack([a, b, c], axis=-1)


def axis_angle_to_matrix(rotvec):
    rv = np.asarray(rotvec, dtype=float)
    return Rotation.from_rotvec(rv.reshape(-1, 3)).as_matrix().reshape(rv.shape[:-1] + (3, 3))


def matrix_to_axis_angle(R):
    R = check_rotation(R)
    return Rotation.from_matrix(R.reshape(-1, 3, 3)).as_rotvec().reshape(R.shape[:-2] + (3,))


def convert_rotation(value, source, target):
    """Convert between ``"axis_angle"``, ``"euler_xyz"`` and ``"matrix"``."""
    to_matrix = {
        "axis_angle": axis_angle_to_matrix,
        "euler_xyz": euler_to_matrix,
        "matrix": check_rotation,
    }
    from_matrix = {
        "axis_angle": matrix_to_axis_angle,
        "euler_xyz": matrix_to_euler,
        "matrix": lambda R: R,
    }
    if source not in to_matrix or target not in from_matrix:
        raise ValueError(f"unknown rotation representation {source!r} -> {target!r}")
    return from_matrix[target](to_matrix[source](np.asarray(value, dtype=float)))


def skew(w):
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S):
    return np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]]) / 2.0


# ----------------------------------------------------------------------------
# forward kinematics


@dataclass
class Pose:
    """World configuration of every part for one generalized position.

    ``axes[n, k]`` is the world direction of rotation DOF ``k`` of part
    ``n``; the DOF rotates about ``joints[n]``.
    """

    rotations: np.ndarray
    joints: np.ndarray
    axes: np.ndarray
    tree: object

    def to_world(self, parts, rest_points):
        """Map rest-pose points rigidly attached to ``parts``."""
        parts = np.asarray(parts, dtype=np.int64)
        R = self.rotations[parts]
        # R v + (j - R j_rest): exact at the rest configuration
        shift = self.joints[parts] - np.einsum("nij,nj->ni", R, self.tree.joint_rest[parts])
        return np.einsum("nij,nj->ni", R, np.asarray(rest_points, dtype=float)) + shift

    def coms(self, props):
        rest = np.array([p.com for p in props])
        return self.to_world(np.arange(len(props)), rest)

    def contact_points(self, body):
        if body.n_contacts == 0:
            return np.zeros((0, 3))
        return self.to_world(body.contact_parts, body.contact_rest)

    def vertices(self, body):
        return self.to_world(body.vertex_parts, body.all_vertices_rest)


def forward_kinematics(q, body):
    tree = body.tree if hasattr(body, "tree") else body
    q = np.asarray(q, dtype=float)
    if q.shape != (tree.n_q,):
        raise MotionError(f"q has shape {q.shape}, body needs ({tree.n_q},)")
    P = tree.part_count
    euler = q[3:].reshape(P, 3)
    rx, ry, rz = rot_x(euler[:, 0]), rot_y(euler[:, 1]), rot_z(euler[:, 2])
    rxy = rx @ ry
    local = rxy @ rz
    R = np.empty((P, 3, 3))
    J = np.empty((P, 3))
    axes = np.empty((P, 3, 3))
    offsets = tree.joint_rest_offset
    for n, p in enumerate(tree.parent):
        if p is None:
            Rp = np.eye(3)
            J[n] = offsets[n] + q[:3]
        else:
            Rp = R[p]
            J[n] = J[p] + Rp @ offsets[n]
        R[n] = Rp @ local[n]
        axes[n, 0] = Rp[:, 0]
        axes[n, 1] = Rp @ rx[n][:, 1]
        axes[n, 2] = Rp @ rxy[n][:, 2]
    return Pose(R, J, axes, tree)


def near_gimbal(q, margin=GIMBAL_MARGIN):
    """True if any joint's middle Euler angle is within ``margin`` of +-pi/2."""
    b = np.asarray(q, dtype=float)[3:].reshape(-1, 3)[:, 1]
    return bool(np.any(np.abs(np.cos(b)) < np.sin(margin)))


# ----------------------------------------------------------------------------
# motion sequences


@dataclass
class MotionSequence:
    frames: np.ndarray
    fps: float

    def __post_init__(self):
        self.frames = np.atleast_2d(np.asarray(self.frames, dtype=float))
        if not self.fps > 0:
            raise MotionError("fps must be positive")
        if not np.all(np.isfinite(self.frames)):
            raise MotionError("motion contains non-finite values")

    def __len__(self):
        return len(self.frames)

    @property
    def n_q(self):
        return self.frames.shape[1]


def unwrap_angles(frames):
    """Unwrap every rotation track so consecutive frames differ by at most pi."""
    out = np.array(frames, dtype=float)
    out[:, 3:] = np.unwrap(out[:, 3:], axis=0)
    return out


def finite_difference_derivatives(seq):
    """Central differences inside, one-sided differences at the two endpoints."""
    q = np.asarray(seq.frames, dtype=float)
    T = len(q)
    if T < 3:
        raise MotionError(f"need >= 3 frames for accelerations, got {T}")
    f = float(seq.fps)
    qd = np.empty_like(q)
    qdd = np.empty_like(q)
    qd[1:-1] = (q[2:] - q[:-2]) * (f / 2.0)
    qd[0] = (q[1] - q[0]) * f
    qd[-1] = (q[-1] - q[-2]) * f
    qdd[1:-1] = (q[2:] - 2.0 * q[1:-1] + q[:-2]) * f * f
    qdd[0] = (q[2] - 2.0 * q[1] + q[0]) * f * f
    qdd[-1] = (q[-1] - 2.0 * q[-2] + q[-3]) * f * f
    return qd, qdd


def endpoint_mask(T):
    m = np.zeros(T, dtype=bool)
    if T:
        m[0] = m[-1] = True
    return m


def motion_from_dict(data, n_q=None):
    try:
        fps = float(data["fps"])
        frames = np.asarray(data["frames"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MotionError(f"invalid motion file: {exc}") from None
    if frames.ndim != 2 or frames.shape[1] < 6 or (frames.shape[1] - 6) % 3:
        raise MotionError(f"frames must be T x (6 + 3k), got shape {frames.shape}")
    if n_q is not None and frames.shape[1] != n_q:
        raise MotionError(f"motion has {frames.shape[1]} DOFs, body needs {n_q}")
    angles = data.get("angles", "euler_xyz")
    if angles == "axis_angle":
        rv = frames[:, 3:].reshape(len(frames), -1, 3)
        frames = np.concatenate([frames[:, :3], matrix_to_euler(axis_angle_to_matrix(rv)).reshape(len(frames), -1)],
                                axis=1)
    elif angles != "euler_xyz":
        raise MotionError(f"unknown angle convention {angles!r}")
    return MotionSequence(unwrap_angles(frames), fps)


def load_motion(path, n_q=None):
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise MotionError(f"cannot parse {path}: {exc}") from None
    return motion_from_dict(data, n_q)


def motion_to_dict(seq, dof_names=None):
    out = {"fps": float(seq.fps), "angles": "euler_xyz", "frames": seq.frames.tolist()}
    if dof_names is not None:
        out["dof_names"] = list(dof_names)
    return out


def save_motion(seq, path, dof_names=None):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(motion_to_dict(seq, dof_names), f)
