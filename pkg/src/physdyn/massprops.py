"""Volume, mass, center of mass and inertia of closed part meshes.

The mesh is decomposed into signed tetrahedra that share one apex; for the
inertia the apex is the center of mass, and each tetrahedron's second moment
uses the exact quadrature for quadratic integrands::

    int_tet f = vol / 20 * (f(P1) + f(P2) + f(P3) + f(P1 + P2 + P3))
"""

from dataclasses import dataclass

import numpy as np

from .body import GeometryError, is_watertight

MIN_VOLUME = 1e-15


@dataclass(frozen=True)
class PartMassProperties:
    volume: float
    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def to_dict(self):
        return {
            "volume_m3": self.volume,
            "mass_kg": self.mass,
            "com_m": self.com.tolist(),
            "inertia_kg_m2": self.inertia.reshape(-1).tolist(),
        }


def _tets(mesh, apex):
    p = mesh.vertices[mesh.triangles] - apex
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])) / 6.0
    return p, vol


def _check_closed(mesh):
    if not is_watertight(mesh):
        raise GeometryError("mesh is not watertight", part=mesh.part_id)


def part_volume_com(mesh):
    """Return ``(volume, com)`` of a watertight, outward-wound mesh."""
    _check_closed(mesh)
    ref = mesh.vertices.mean(axis=0)
    p, vol = _tets(mesh, ref)
    volume = vol.sum()
    if volume <= MIN_VOLUME:
        raise GeometryError(f"non-positive volume {volume:g}", part=mesh.part_id)
    com = ref + (vol[:, None] * p.sum(axis=1)).sum(axis=0) / (4.0 * volume)
    return float(volume), com


def second_moment(mesh, origin):
    """Integral of ``x x^T`` over the enclosed volume, with ``x`` relative to ``origin``."""
    p, vol = _tets(mesh, origin)
    s = p.sum(axis=1)
    outer = np.einsum("tki,tkj->tij", p, p) + np.einsum("ti,tj->tij", s, s)
    return np.einsum("t,tij->ij", vol, outer) / 20.0


def part_inertia(mesh, mass, com=None):
    """Inertia tensor about the COM for uniform density and total ``mass``."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    volume, c = part_volume_com(mesh)
    if com is None:
        com = c
    cov = second_moment(mesh, com)
    inertia = (np.trace(cov) * np.eye(3) - cov) * (mass / volume)
    return 0.5 * (inertia + inertia.T)


def body_mass_properties(body):
    """Mass properties of every part of ``body``, in part order."""
    cfg = body.mass
    scale = np.ones(body.part_count) if cfg.density_scale is None else np.asarray(cfg.density_scale, dtype=float)
    vc = [part_volume_com(m) for m in body.part_meshes]
    if cfg.mode == "fraction-table":
        masses = cfg.total_kg * np.asarray(cfg.fractions, dtype=float)
    else:
        masses = np.array([cfg.density_kg_m3 * s * v for s, (v, _) in zip(scale, vc)])
    out = []
    for mesh, (volume, com), m in zip(body.part_meshes, vc, masses):
        out.append(PartMassProperties(volume, float(m), com, part_inertia(mesh, m, com)))
    return out


def total_mass(props):
    return float(sum(p.mass for p in props))
