"""Articulated body definition: kinematic tree, rest-pose part meshes, contact
vertices and mass configuration.

Each part is a rigid triangle mesh attached to the joint that connects it to
its parent.  The generalized coordinates of a body with ``P`` parts are laid
out as::

    [root translation (3), root Euler XYZ (3), joint 1 Euler XYZ (3), ...]

so ``n_q = 6 + 3 * (P - 1)``.
"""

from __future__ import annotations

import json
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MASS_MODES = ("fraction-table", "uniform-density")
DEGENERATE_AREA = 1e-12


class BodyError(ValueError):
    """Schema or invariant violation in a body definition."""

    def __init__(self, message, part=None, field=None):
        self.part = part
        self.field = field
        prefix = []
        if part is not None:
            prefix.append(f"part {part}")
        if field is not None:
            prefix.append(f"field '{field}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class GeometryError(ValueError):
    """A mesh cannot be used for the requested geometric computation."""

    def __init__(self, message, part=None):
        self.part = part
        if part is not None:
            message = f"part {part}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class KinematicTree:
    parent: tuple
    joint_rest_offset: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.joint_rest_offset, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "joint_rest_offset", off)
        object.__setattr__(self, "parent", tuple(None if p is None else int(p) for p in self.parent))
        if len(self.parent) != len(off):
            raise BodyError("parent and joint_offset lengths differ", field="parent")
        if len(self.parent) == 0:
            raise BodyError("body has no parts", field="parts")
        roots = [i for i, p in enumerate(self.parent) if p is None]
        if roots != [0]:
            raise BodyError("exactly one root is required and it must be part 0", field="parent")
        for i, p in enumerate(self.parent):
            if i > 0 and not (0 <= p < i):
                raise BodyError(f"parent {p} must precede the part (topological order)", part=i, field="parent")
        if not np.all(np.isfinite(off)):
            bad = int(np.nonzero(~np.isfinite(off).all(axis=1))[0][0])
            raise BodyError("non-finite joint offset", part=bad, field="joint_offset")

    @property
    def part_count(self):
        return len(self.parent)

    @property
    def n_q(self):
        return 6 + 3 * (self.part_count - 1)

    @cached_property
    def joint_rest(self):
        """World rest position of each part's joint."""
        pos = np.zeros_like(self.joint_rest_offset)
        for i, p in enumerate(self.parent):
            pos[i] = self.joint_rest_offset[i] if p is None else pos[p] + self.joint_rest_offset[i]
        return pos

    @cached_property
    def ancestors(self):
        """Boolean (P, P) matrix; ``ancestors[n, a]`` is true if ``a`` is ``n`` or an ancestor of it."""
        P = self.part_count
        anc = np.zeros((P, P), dtype=bool)
        for i, p in enumerate(self.parent):
            if p is not None:
                anc[i] = anc[p]
            anc[i, i] = True
        return anc

    def dof_index(self, part, axis):
        """Column of rotation DOF ``axis`` (0, 1, 2 for X, Y, Z) of ``part``.

        Part 0's rotation is the root rotation.  Translation DOFs are
        addressed with ``part=None``.
        """
        if not 0 <= axis < 3:
            raise IndexError(axis)
        if part is None:
            return axis
        if not 0 <= part < self.part_count:
            raise IndexError(part)
        return 3 + 3 * part + axis

    def dof_of_index(self, index):
        """Inverse of :meth:`dof_index`."""
        if not 0 <= index < self.n_q:
            raise IndexError(index)
        if index < 3:
            return None, index
        return (index - 3) // 3, (index - 3) % 3

    def dof_names(self, part_names=None):
        names = [f"root_t{a}" for a in "xyz"]
        for i in range(self.part_count):
            label = part_names[i] if part_names else f"part{i}"
            names += [f"{label}_r{a}" for a in "xyz"]
        return names


@dataclass(frozen=True)
class PartMesh:
    part_id: int
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise BodyError("triangle references a missing vertex", part=self.part_id, field="triangles")
        if not np.all(np.isfinite(v)):
            raise BodyError("non-finite vertex", part=self.part_id, field="vertices")

    def translated(self, offset):
        return PartMesh(self.part_id, self.vertices + np.asarray(offset, dtype=float), self.triangles)

    def transformed(self, rotation, offset=(0.0, 0.0, 0.0)):
        R = np.asarray(rotation, dtype=float)
        return PartMesh(self.part_id, self.vertices @ R.T + np.asarray(offset, dtype=float), self.triangles)


@dataclass(frozen=True)
class MassConfig:
    total_kg: float = 70.0
    fractions: np.ndarray | None = None
    mode: str = "fraction-table"
    density_kg_m3: float = 1000.0
    density_scale: np.ndarray | None = None


@dataclass(frozen=True)
class RestBody:
    tree: KinematicTree
    part_meshes: tuple
    contact_vertices: tuple
    mass: MassConfig = field(default_factory=MassConfig)
    part_names: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "part_meshes", tuple(self.part_meshes))
        object.__setattr__(self, "contact_vertices",
                           tuple(np.asarray(c, dtype=np.int64).reshape(-1) for c in self.contact_vertices))
        P = self.tree.part_count
        if len(self.part_meshes) != P:
            raise BodyError(f"expected {P} part meshes, got {len(self.part_meshes)}", field="parts")
        if len(self.contact_vertices) != P:
            raise BodyError(f"expected {P} contact lists", field="contact_vertices")
        for i, (mesh, cv) in enumerate(zip(self.part_meshes, self.contact_vertices)):
            if mesh.part_id != i:
                raise BodyError(f"mesh carries id {mesh.part_id}", part=i, field="id")
            if cv.size and (cv.min() < 0 or cv.max() >= len(mesh.vertices)):
                raise BodyError("contact vertex index out of range", part=i, field="contact_vertices")
        m = self.mass
        if m.mode not in MASS_MODES:
            raise BodyError(f"unknown mass mode {m.mode!r}", field="mode")
        if not m.total_kg > 0:
            raise BodyError("total mass must be positive", field="total_kg")
        if m.mode == "fraction-table":
            if m.fractions is None:
                raise BodyError("fraction-table mode requires fractions", field="mass_fractions")
            fr = np.asarray(m.fractions, dtype=float)
            if fr.shape != (P,):
                raise BodyError(f"need {P} fractions, got {fr.size}", field="mass_fractions")
            if np.any(fr <= 0):
                raise BodyError("fractions must be positive", field="mass_fractions")
            if abs(fr.sum() - 1.0) > 1e-9:
                raise BodyError(f"fractions sum to {fr.sum():.12g}, not 1", field="mass_fractions")
        elif not m.density_kg_m3 > 0:
            raise BodyError("density must be positive", field="density_kg_m3")
        if m.density_scale is not None and np.asarray(m.density_scale).shape != (P,):
            raise BodyError(f"need {P} density scale factors", field="density_scale")

    @property
    def n_q(self):
        return self.tree.n_q

    @property
    def part_count(self):
        return self.tree.part_count

    @cached_property
    def contact_index(self):
        """(part, vertex) pairs of all contact points, in body order."""
        return [(i, int(v)) for i, cv in enumerate(self.contact_vertices) for v in cv]

    @property
    def n_contacts(self):
        return len(self.contact_index)

    @cached_property
    def contact_parts(self):
        return np.array([p for p, _ in self.contact_index], dtype=np.int64)

    @cached_property
    def contact_rest(self):
        if not self.contact_index:
            return np.zeros((0, 3))
        return np.array([self.part_meshes[p].vertices[v] for p, v in self.contact_index])

    @cached_property
    def vertex_parts(self):
        return np.concatenate([np.full(len(m.vertices), i) for i, m in enumerate(self.part_meshes)])

    @cached_property
    def all_vertices_rest(self):
        return np.concatenate([m.vertices for m in self.part_meshes])

    def with_meshes(self, meshes):
        return RestBody(self.tree, tuple(meshes), self.contact_vertices, self.mass, self.part_names)


# ----------------------------------------------------------------------------
# mesh topology


def edge_incidence(triangles):
    """Count triangles incident to each undirected edge."""
    counts = Counter()
    for a, b, c in np.asarray(triangles).tolist():
        for u, v in ((a, b), (b, c), (c, a)):
            counts[(u, v) if u < v else (v, u)] += 1
    return counts


def is_watertight(mesh):
    counts = edge_incidence(mesh.triangles)
    return bool(counts) and all(n == 2 for n in counts.values())


def signed_volume(mesh):
    """Enclosed signed volume; positive for outward winding."""
    v = mesh.vertices
    if len(mesh.triangles) == 0:
        return 0.0
    ref = v.mean(axis=0)
    p = v[mesh.triangles] - ref
    return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)


def triangle_areas(mesh):
    p = mesh.vertices[mesh.triangles]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def close_part_mesh(mesh):
    """Cap every boundary loop with a triangle fan to the loop centroid.

    Raises GeometryError on a non-manifold edge.  A mesh without boundary is
    returned unchanged.
    """
    counts = edge_incidence(mesh.triangles)
    for edge, n in counts.items():
        if n > 2:
            raise GeometryError(f"non-manifold edge {edge} shared by {n} triangles", part=mesh.part_id)
    boundary = {e for e, n in counts.items() if n == 1}
    if not boundary:
        return mesh

    # directed boundary half-edges as they appear in their owning triangle
    outgoing = defaultdict(list)
    for a, b, c in mesh.triangles.tolist():
        for u, v in ((a, b), (b, c), (c, a)):
            if (min(u, v), max(u, v)) in boundary:
                outgoing[u].append(v)

    vertices = [mesh.vertices]
    new_tris = [mesh.triangles]
    next_id = len(mesh.vertices)
    remaining = sum(len(v) for v in outgoing.values())
    while remaining:
        start = min(u for u, vs in outgoing.items() if vs)
        loop = [start]
        u = start
        while True:
            v = outgoing[u].pop(0)
            remaining -= 1
            if v == start:
                break
            loop.append(v)
            u = v
            if not outgoing[u]:
                raise GeometryError("open boundary chain", part=mesh.part_id)
        centroid = mesh.vertices[loop].mean(axis=0)
        vertices.append(centroid[None])
        # reversed half-edges keep the winding consistent with the input
        fan = [(loop[(k + 1) % len(loop)], loop[k], next_id) for k in range(len(loop))]
        new_tris.append(np.array(fan, dtype=np.int64))
        next_id += 1
    return PartMesh(mesh.part_id, np.concatenate(vertices), np.concatenate(new_tris))


def validate_body(body):
    """Per-part mesh report: watertightness, winding, degenerate triangles."""
    report = []
    for mesh in body.part_meshes:
        counts = edge_incidence(mesh.triangles)
        directed = Counter()
        for a, b, c in mesh.triangles.tolist():
            for u, v in ((a, b), (b, c), (c, a)):
                directed[(u, v)] += 1
        consistent = all(n == 1 for n in directed.values()) and all(
            (v, u) in directed for (u, v) in directed if counts[(min(u, v), max(u, v))] == 2
        )
        vol = signed_volume(mesh)
        degenerate = np.nonzero(triangle_areas(mesh) < DEGENERATE_AREA)[0]
        watertight = bool(counts) and all(n == 2 for n in counts.values())
        report.append({
            "part": mesh.part_id,
            "watertight": watertight,
            "boundary_edges": sum(1 for n in counts.values() if n == 1),
            "nonmanifold_edges": sum(1 for n in counts.values() if n > 2),
            "winding_consistent": bool(consistent and vol > 0),
            "signed_volume": vol,
            "degenerate_triangles": degenerate.tolist(),
            "ok": bool(watertight and consistent and vol > 0 and degenerate.size == 0),
        })
    return report


# ----------------------------------------------------------------------------
# file I/O


def load_obj(path, part_id=0):
    """Read vertices and (triangulated) faces from an ASCII OBJ file."""
    verts, tris = [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "v":
                verts.append([float(x) for x in tok[1:4]])
            elif tok[0] == "f":
                idx = [int(t.split("/")[0]) for t in tok[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                for k in range(1, len(idx) - 1):
                    tris.append([idx[0], idx[k], idx[k + 1]])
    return PartMesh(part_id, np.array(verts, dtype=float).reshape(-1, 3), np.array(tris, dtype=np.int64).reshape(-1, 3))


def _require(d, key, part=None):
    if key not in d:
        raise BodyError("missing", part=part, field=key)
    return d[key]


def body_from_dict(data, base_dir="."):
    if not isinstance(data, dict) or "parts" not in data:
        raise BodyError("missing", field="parts")
    parts = sorted(data["parts"], key=lambda p: _require(p, "id"))
    ids = [p["id"] for p in parts]
    if ids != list(range(len(parts))):
        raise BodyError(f"part ids must be 0..{len(parts) - 1}, got {ids}", field="id")
    parents, offsets, meshes, contacts = [], [], [], []
    for p in parts:
        i = p["id"]
        parents.append(p.get("parent"))
        try:
            offsets.append(np.asarray(_require(p, "joint_offset", i), dtype=float).reshape(3))
        except (TypeError, ValueError) as exc:
            raise BodyError(str(exc), part=i, field="joint_offset") from None
        if "obj" in p:
            meshes.append(load_obj(os.path.join(base_dir, p["obj"]), part_id=i))
        else:
            try:
                meshes.append(PartMesh(i, np.asarray(_require(p, "vertices", i), dtype=float),
                                       np.asarray(_require(p, "triangles", i), dtype=np.int64)))
            except (TypeError, ValueError) as exc:
                if isinstance(exc, BodyError):
                    raise
                raise BodyError(str(exc), part=i, field="vertices") from None
        contacts.append(p.get("contact_vertices", []))
    for i, par in enumerate(parents):
        if par is not None and not isinstance(par, int):
            raise BodyError("parent must be an integer or null", part=i, field="parent")
        if par is not None and par >= i:
            raise BodyError(f"parent {par} must precede the part (cycle or bad order)", part=i, field="parent")
    tree = KinematicTree(tuple(parents), np.array(offsets))
    m = data.get("mass", {})
    fractions = m.get("fractions")
    scale = m.get("density_scale")
    mass = MassConfig(
        total_kg=float(m.get("total_kg", 70.0)),
        fractions=None if fractions is None else np.asarray(fractions, dtype=float),
        mode=m.get("mode", "fraction-table"),
        density_kg_m3=float(m.get("density_kg_m3", 1000.0)),
        density_scale=None if scale is None else np.asarray(scale, dtype=float),
    )
    names = data.get("part_names")
    return RestBody(tree, tuple(meshes), tuple(contacts), mass, None if names is None else tuple(names))


def load_body(path):
    """Load and validate a body JSON file."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise BodyError(f"cannot parse {path}: {exc}") from None
    return body_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def body_to_dict(body):
    parts = []
    for i, mesh in enumerate(body.part_meshes):
        parts.append({
            "id": i,
            "parent": body.tree.parent[i],
            "joint_offset": body.tree.joint_rest_offset[i].tolist(),
            "vertices": mesh.vertices.tolist(),
            "triangles": mesh.triangles.tolist(),
            "contact_vertices": body.contact_vertices[i].tolist(),
        })
    m = body.mass
    mass = {"total_kg": m.total_kg, "mode": m.mode, "density_kg_m3": m.density_kg_m3}
    if m.fractions is not None:
        mass["fractions"] = np.asarray(m.fractions).tolist()
    if m.density_scale is not None:
        mass["density_scale"] = np.asarray(m.density_scale).tolist()
    out = {"parts": parts, "mass": mass}
    if body.part_names is not None:
        out["part_names"] = list(body.part_names)
    return out


def save_body(body, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(body_to_dict(body), f)
