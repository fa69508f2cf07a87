"""Euler-Lagrange terms of the articulated body.

    M(q) qdd + C(q, qd) + g(q) = J_C(q)^T lambda + tau

Linear Jacobians of a part are taken at its center of mass and paired with
the inertia tensor about the COM.  Jacobian time derivatives are symmetric
directional finite differences along ``qd``.
"""

from dataclasses import dataclass

import numpy as np

from .kinematics import forward_kinematics

GRAVITY = 9.81


def gravity_vector3(gravity=GRAVITY):
    return np.array([0.0, 0.0, -float(gravity)])


def _tree(body):
    return body.tree if hasattr(body, "tree") else body


def linear_jacobians(pose, parts, points):
    """Jacobians (N, 3, n_q) of world ``points`` rigidly attached to ``parts``."""
    tree = pose.tree
    parts = np.asarray(parts, dtype=np.int64).reshape(-1)
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    N, P = len(parts), tree.part_count
    J = np.zeros((N, 3, tree.n_q))
    if N == 0:
        return J
    J[:, :, :3] = np.eye(3)
    lever = points[:, None, :] - pose.joints[None, :, :]
    cols = np.cross(pose.axes[None, :, :, :], lever[:, :, None, :])
    cols *= tree.ancestors[parts][:, :, None, None]
    J[:, :, 3:] = cols.reshape(N, 3 * P, 3).transpose(0, 2, 1)
    return J


def angular_jacobians(pose, parts):
    """Angular Jacobians (N, 3, n_q) of ``parts``; translation columns are zero."""
    tree = pose.tree
    parts = np.asarray(parts, dtype=np.int64).reshape(-1)
    N, P = len(parts), tree.part_count
    J = np.zeros((N, 3, tree.n_q))
    if N == 0:
        return J
    cols = pose.axes[None] * tree.ancestors[parts][:, :, None, None]
    J[:, :, 3:] = cols.reshape(N, 3 * P, 3).transpose(0, 2, 1)
    return J


def point_jacobian(q, body, part, point):
    """3 x n_q Jacobian of a world point rigidly attached to ``part``."""
    pose = forward_kinematics(q, body)
    return linear_jacobians(pose, [part], [point])[0]


def angular_jacobian(q, body, part):
    pose = forward_kinematics(q, body)
    return angular_jacobians(pose, [part])[0]


def contact_jacobian(q, body, pose=None):
    """Stacked (3 n_c) x n_q Jacobian of all contact vertices in body order."""
    if pose is None:
        pose = forward_kinematics(q, body)
    pts = pose.contact_points(body)
    J = linear_jacobians(pose, body.contact_parts, pts)
    return J.reshape(-1, body.n_q)


def _fd_step(q):
    return 1e-6 * (1.0 + np.abs(q).max(initial=0.0))


def jacobian_time_derivative(q, qd, body, part, rest_point=None, kind="linear"):
    """Time derivative of a part's Jacobian along ``qd``.

    ``kind="linear"`` differentiates the Jacobian of the body-fixed point
    with rest-pose coordinates ``rest_point``; ``kind="angular"`` the part's
    angular Jacobian.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    eps = _fd_step(q)

    def jac(qq):
        pose = forward_kinematics(qq, body)
        if kind == "angular":
            return angular_jacobians(pose, [part])[0]
        pt = pose.to_world([part], np.asarray(rest_point, dtype=float)[None])
        return linear_jacobians(pose, [part], pt)[0]

    if kind not in ("linear", "angular"):
        raise ValueError(f"unknown Jacobian kind {kind!r}")
    if kind == "linear" and rest_point is None:
        raise ValueError("linear Jacobian derivative needs a rest-pose point")
    return (jac(q + eps * qd) - jac(q - eps * qd)) / (2.0 * eps)


def part_jacobians(q, body, props, pose=None):
    """COM linear Jacobians, angular Jacobians and pose for every part."""
    if pose is None:
        pose = forward_kinematics(q, body)
    parts = np.arange(body.part_count)
    coms = pose.coms(props)
    return linear_jacobians(pose, parts, coms), angular_jacobians(pose, parts), pose


def _world_inertia(pose, props):
    inertia = np.array([p.inertia for p in props])
    return pose.rotations @ inertia @ pose.rotations.transpose(0, 2, 1)


def mass_matrix(q, body, props, _cache=None):
    Js, Jr, pose = _cache if _cache is not None else part_jacobians(q, body, props)
    m = np.array([p.mass for p in props])
    Iw = _world_inertia(pose, props)
    M = np.einsum("n,nai,naj->ij", m, Js, Js) + np.einsum("nai,nab,nbj->ij", Jr, Iw, Jr)
    return 0.5 * (M + M.T)


def gravity_vector(q, body, props, gravity=GRAVITY, _cache=None):
    Js = (_cache if _cache is not None else part_jacobians(q, body, props))[0]
    m = np.array([p.mass for p in props])
    return -np.einsum("n,nai,a->i", m, Js, gravity_vector3(gravity))


def bias_force(q, qd, body, props, _cache=None):
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    Js, Jr, pose = _cache if _cache is not None else part_jacobians(q, body, props)
    if not np.any(qd):
        return np.zeros(body.n_q)
    eps = _fd_step(q)
    Js_p, Jr_p, _ = part_jacobians(q + eps * qd, body, props)
    Js_m, Jr_m, _ = part_jacobians(q - eps * qd, body, props)
    Jsd_qd = (Js_p - Js_m) @ qd / (2.0 * eps)
    Jrd_qd = (Jr_p - Jr_m) @ qd / (2.0 * eps)
    m = np.array([p.mass for p in props])
    Iw = _world_inertia(pose, props)
    omega = Jr @ qd
    Iw_omega = np.einsum("nab,nb->na", Iw, omega)
    rot_term = np.einsum("nab,nb->na", Iw, Jrd_qd) + np.cross(omega, Iw_omega)
    return np.einsum("nai,na->i", Js, m[:, None] * Jsd_qd) + np.einsum("nai,na->i", Jr, rot_term)


@dataclass
class DynamicsTerms:
    M: np.ndarray
    C: np.ndarray
    g: np.ndarray
    J_C: np.ndarray
    pose: object

    def inverse_dynamics(self, qdd):
        """Generalized force ``M qdd + C + g`` needed for ``qdd``."""
        return self.M @ qdd + self.C + self.g


def dynamics_terms(q, qd, body, props, gravity=GRAVITY):
    cache = part_jacobians(q, body, props)
    pose = cache[2]
    return DynamicsTerms(
        M=mass_matrix(q, body, props, _cache=cache),
        C=bias_force(q, qd, body, props, _cache=cache),
        g=gravity_vector(q, body, props, gravity, _cache=cache),
        J_C=contact_jacobian(q, body, pose=pose),
        pose=pose,
    )


def el_residual(q, qd, qdd, lam, tau, body, props, gravity=GRAVITY, terms=None):
    """``M qdd + C + g - J_C^T lambda - tau``."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if lam.shape != (3 * body.n_contacts,):
        raise ValueError(f"lambda has length {lam.size}, expected {3 * body.n_contacts}")
    if tau.shape != (body.n_q,):
        raise ValueError(f"tau has length {tau.size}, expected {body.n_q}")
    if terms is None:
        terms = dynamics_terms(q, qd, body, props, gravity)
    return terms.inverse_dynamics(np.asarray(qdd, dtype=float)) - terms.J_C.T @ lam - tau


# ----------------------------------------------------------------------------
# energies and momentum


def potential_energy(q, body, props, gravity=GRAVITY):
    pose = forward_kinematics(q, body)
    return float(gravity * sum(p.mass * c[2] for p, c in zip(props, pose.coms(props))))


def kinetic_energy(q, qd, body, props):
    qd = np.asarray(qd, dtype=float)
    return float(0.5 * qd @ mass_matrix(q, body, props) @ qd)


def linear_momentum(q, qd, body, props):
    Js = part_jacobians(q, body, props)[0]
    m = np.array([p.mass for p in props])
    return np.einsum("n,nai,i->a", m, Js, np.asarray(qd, dtype=float))
