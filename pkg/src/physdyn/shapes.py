"""Primitive meshes (outward winding) used by the default humanoid and tests."""

import numpy as np

from .body import PartMesh

_BOX_TRIS = np.array([
    [0, 2, 1], [0, 3, 2],  # z-
    [4, 5, 6], [4, 6, 7],  # z+
    [0, 1, 5], [0, 5, 4],  # y-
    [2, 3, 7], [2, 7, 6],  # y+
    [1, 2, 6], [1, 6, 5],  # x+
    [3, 0, 4], [3, 4, 7],  # x-
])


def box(lo, hi, part_id=0):
    """Axis-aligned box; vertices 0-3 are the bottom face (z = lo[2])."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    v = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ], dtype=float)
    return PartMesh(part_id, v, _BOX_TRIS.copy())


def cube(side=1.0, center=(0.0, 0.0, 0.0), part_id=0):
    c = np.asarray(center, dtype=float)
    h = side / 2.0
    return box(c - h, c + h, part_id)


def tetrahedron(p0, p1, p2, p3, part_id=0):
    v = np.array([p0, p1, p2, p3], dtype=float)
    tris = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    mesh = PartMesh(part_id, v, tris)
    d = np.linalg.det(np.array([v[1] - v[0], v[2] - v[0], v[3] - v[0]]))
    if d < 0:
        mesh = PartMesh(part_id, v, tris[:, ::-1].copy())
    return mesh


def icosphere(radius=1.0, subdivisions=3, center=(0.0, 0.0, 0.0), part_id=0):
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
             [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
             [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
             [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
             [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
             [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    v = np.array(verts) * radius + np.asarray(center, dtype=float)
    return PartMesh(part_id, v, np.array(faces, dtype=np.int64))


def open_cylinder(radius=1.0, height=1.0, segments=64, part_id=0):
    """Side wall only, axis along z from 0 to ``height``; both rims open."""
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    v = np.concatenate([np.c_[ring, np.zeros(segments)], np.c_[ring, np.full(segments, height)]])
    tris = []
    for k in range(segments):
        k1 = (k + 1) % segments
        tris += [[k, k1, segments + k1], [k, segments + k1, segments + k]]
    return PartMesh(part_id, v, np.array(tris, dtype=np.int64))


def random_convex(n_points=40, rng=None, part_id=0):
    """Convex hull of random points, outward wound."""
    from scipy.spatial import ConvexHull

    rng = np.random.default_rng(rng)
    pts = rng.normal(size=(n_points, 3)) * rng.uniform(0.5, 1.5, size=3)
    hull = ConvexHull(pts)
    used = np.unique(hull.simplices)
    remap = -np.ones(n_points, dtype=np.int64)
    remap[used] = np.arange(len(used))
    tris = remap[hull.simplices]
    v = pts[used]
    c = v.mean(axis=0)
    p = v[tris]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ij,ij->i", normals, p[:, 0] - c) < 0
    tris[flip] = tris[flip][:, ::-1]
    return PartMesh(part_id, v, tris)
