"""Default 24-part humanoid with SMPL topology built from boxes.

Rest pose is a T-pose standing on z = 0, x to the body's left, y forward.
The meshes are coarse surrogates: only the geometry feeds the mass
properties, so any closed shape per part works.
"""

import numpy as np

from .body import KinematicTree, MassConfig, RestBody
from .shapes import box

PART_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow", "left_wrist", "right_wrist", "left_hand", "right_hand",
)

PARENTS = (None, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)

# Segment mass shares (percent of body mass) after typical anthropometric
# tables, split over the SMPL parts and normalized to one.
_MASS_PERCENT = (
    11.2, 10.0, 10.0, 9.0, 4.6, 4.6,
    9.0, 1.0, 1.0, 10.0, 0.4, 0.4,
    1.2, 1.3, 1.3, 6.9, 2.7, 2.7,
    1.6, 1.6, 0.45, 0.45, 0.2, 0.2,
)

# left-side joint positions; right side mirrors x
_JOINTS = {
    0: (0.0, 0.0, 0.95),
    1: (0.09, 0.0, 0.90),
    3: (0.0, 0.0, 1.05),
    4: (0.09, 0.0, 0.50),
    6: (0.0, 0.0, 1.18),
    7: (0.09, 0.0, 0.08),
    9: (0.0, 0.0, 1.30),
    10: (0.09, 0.12, 0.03),
    12: (0.0, 0.0, 1.45),
    13: (0.07, 0.0, 1.42),
    15: (0.0, 0.0, 1.58),
    16: (0.18, 0.0, 1.42),
    18: (0.45, 0.0, 1.42),
    20: (0.70, 0.0, 1.42),
    22: (0.78, 0.0, 1.42),
}

# left-side boxes (lo, hi)
_BOXES = {
    0: ((-0.15, -0.09, 0.88), (0.15, 0.09, 1.05)),
    1: ((0.02, -0.07, 0.50), (0.16, 0.07, 0.90)),
    3: ((-0.14, -0.09, 1.05), (0.14, 0.09, 1.18)),
    4: ((0.04, -0.05, 0.08), (0.14, 0.05, 0.50)),
    6: ((-0.15, -0.10, 1.18), (0.15, 0.10, 1.30)),
    7: ((0.045, -0.05, 0.0), (0.135, 0.12, 0.08)),
    9: ((-0.17, -0.10, 1.30), (0.17, 0.10, 1.45)),
    10: ((0.045, 0.12, 0.0), (0.135, 0.20, 0.04)),
    12: ((-0.05, -0.05, 1.45), (0.05, 0.05, 1.58)),
    13: ((0.02, -0.06, 1.38), (0.18, 0.06, 1.46)),
    15: ((-0.09, -0.10, 1.58), (0.09, 0.10, 1.80)),
    16: ((0.18, -0.045, 1.375), (0.45, 0.045, 1.465)),
    18: ((0.45, -0.035, 1.385), (0.70, 0.035, 1.455)),
    20: ((0.70, -0.045, 1.40), (0.78, 0.045, 1.44)),
    22: ((0.78, -0.04, 1.405), (0.88, 0.04, 1.435)),
}

_MIRROR = {2: 1, 5: 4, 8: 7, 11: 10, 14: 13, 17: 16, 19: 18, 21: 20, 23: 22}

# bottom-face corners (vertices 0-3 of a box) used as contact points
_CONTACTS = {0: [0, 1, 2, 3], 7: [0, 1, 2, 3], 8: [0, 1, 2, 3], 10: [0, 1, 2, 3], 11: [0, 1, 2, 3],
             20: [0, 1, 2, 3], 21: [0, 1, 2, 3]}


def _joint(i):
    if i in _MIRROR:
        x, y, z = _JOINTS[_MIRROR[i]]
        return np.array([-x, y, z])
    return np.array(_JOINTS[i], dtype=float)


def _box(i):
    if i in _MIRROR:
        (x0, y0, z0), (x1, y1, z1) = _BOXES[_MIRROR[i]]
        return box((-x1, y0, z0), (-x0, y1, z1), part_id=i)
    lo, hi = _BOXES[i]
    return box(lo, hi, part_id=i)


def mass_fractions():
    pct = np.array(_MASS_PERCENT, dtype=float)
    return pct / pct.sum()


def make_humanoid(total_kg=70.0):
    joints = np.array([_joint(i) for i in range(24)])
    offsets = np.array([joints[i] if p is None else joints[i] - joints[p] for i, p in enumerate(PARENTS)])
    tree = KinematicTree(PARENTS, offsets)
    meshes = tuple(_box(i) for i in range(24))
    contacts = tuple(_CONTACTS.get(i, []) for i in range(24))
    mass = MassConfig(total_kg=total_kg, fractions=mass_fractions(), mode="fraction-table")
    return RestBody(tree, meshes, contacts, mass, PART_NAMES)
