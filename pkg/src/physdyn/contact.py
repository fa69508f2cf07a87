"""Continuous spring-damper ground contact.

For a contact point at height ``d`` moving with ``v``::

    lambda = s * (-k_h * b_h - k_n * b_n - c * v)
    s      = 2 * sigmoid(-60 d) * sigmoid(-60 |v|)
    b_h    = (d_x - 0.5, d_y - 0.5, 0),   b_n = (0, 0, d - 2)

which is linear in the per-point parameters ``x_p = (k_h, k_n, c)``:
``lambda_p = A_p x_p`` with ``A_p = s [-b_h, -b_n, -v]``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag
from scipy.special import expit

from .dynamics import GRAVITY, contact_jacobian

SHARPNESS = 60.0
HORIZONTAL_REF = 0.5
NORMAL_REF = 2.0
GROUND_NORMAL = np.array([0.0, 0.0, 1.0])
DEFAULT_DAMPING_MAX = 200.0


@dataclass(frozen=True)
class ContactPointState:
    d: float
    d_x: float
    d_y: float
    v: np.ndarray
    s: float
    b_h: np.ndarray
    b_n: np.ndarray


def gate(d, speed):
    """Force magnitude gate ``2 sigmoid(-60 d) sigmoid(-60 |v|)``."""
    return 2.0 * expit(-SHARPNESS * np.asarray(d, dtype=float)) * expit(-SHARPNESS * np.asarray(speed, dtype=float))


def point_state(position, velocity):
    position = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    d = float(position[2])
    # projection of the height onto x and y through the ground normal
    d_x, d_y = d * GROUND_NORMAL[0], d * GROUND_NORMAL[1]
    return ContactPointState(
        d=d, d_x=d_x, d_y=d_y, v=v,
        s=float(gate(d, np.linalg.norm(v))),
        b_h=np.array([d_x - HORIZONTAL_REF, d_y - HORIZONTAL_REF, 0.0]),
        b_n=np.array([0.0, 0.0, d - NORMAL_REF]),
    )


def contact_state(pose, qd, body, J_C=None):
    """State of every contact vertex; velocities from the contact Jacobian."""
    positions = pose.contact_points(body)
    if J_C is None:
        J_C = contact_jacobian(None, body, pose=pose)
    vel = (J_C @ np.asarray(qd, dtype=float)).reshape(-1, 3)
    return [point_state(p, v) for p, v in zip(positions, vel)]


def point_block(state):
    return state.s * np.column_stack([-state.b_h, -state.b_n, -state.v])


def contact_basis(states):
    """Block-diagonal (3 n_c) x (3 n_c) basis ``A`` with ``lambda = A x``."""
    if not states:
        return np.zeros((0, 0))
    return block_diag(*[point_block(s) for s in states])


def contact_force(A, x):
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    if A.shape[1] != x.size:
        raise ValueError(f"basis has {A.shape[1]} columns but x has {x.size} entries")
    return A @ x


def default_x_max(n_contacts, total_kg, gravity=GRAVITY, damping_max=DEFAULT_DAMPING_MAX):
    """Per-point bounds ``(k_h, k_n, c)``; stiffness caps near body weight."""
    k = total_kg * gravity / 2.0
    return np.tile([k, k, damping_max], n_contacts).astype(float)
