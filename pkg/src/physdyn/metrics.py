"""Physical-plausibility metrics and the physics-informed training losses.

Metrics are reported in millimetres and frames; losses are computed in SI
units.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from shapely.geometry import MultiPoint, Point

from .dynamics import GRAVITY, contact_jacobian, dynamics_terms, el_residual
from .kinematics import finite_difference_derivatives, forward_kinematics

CONTACT_HEIGHT = 0.03
MM = 1000.0
ALL_METRICS = ("accl", "vel", "fs", "gp", "bos")


class MetricsError(ValueError):
    pass


@dataclass
class MetricReport:
    accl: float | None = None
    vel: float | None = None
    fs: float | None = None
    gp: float | None = None
    bos: float | None = None
    per_frame: dict = field(default_factory=dict)

    units = {"accl": "mm/frame^2", "vel": "mm/frame", "fs": "mm", "gp": "mm", "bos": "percent of frames"}

    def to_dict(self):
        out = {k: getattr(self, k) for k in ALL_METRICS if getattr(self, k) is not None}
        out["units"] = {k: v for k, v in self.units.items() if k in out}
        out["per_frame"] = {k: np.asarray(v).tolist() for k, v in self.per_frame.items()}
        return out


@dataclass(frozen=True)
class LossWeights:
    q: float = 2e3
    joints: float = 1e5
    tau: float = 5.0
    lam: float = 1.0
    vel: float = 100.0
    height: float = 200.0


_WEIGHT_NAMES = {"q": "gamma_q", "joints": "gamma_J", "tau": "gamma_tau", "lam": "gamma_lambda",
                 "vel": "gamma_v", "height": "gamma_z"}


@dataclass
class LossReport:
    l_recon: float = 0.0
    l_force: float = 0.0
    l_contact: float = 0.0
    l_euler: float = 0.0
    weights: LossWeights = field(default_factory=LossWeights)

    @property
    def l_total(self):
        return total_loss(self)

    def to_dict(self):
        return {
            "l_recon": self.l_recon, "l_force": self.l_force, "l_contact": self.l_contact,
            "l_euler": self.l_euler, "l_total": self.l_total,
            "weights": {_WEIGHT_NAMES[k]: v for k, v in asdict(self.weights).items()},
        }


def joint_trajectory(seq, body):
    """(T, P, 3) world joint positions in metres."""
    return np.stack([forward_kinematics(q, body).joints for q in seq.frames])


def vertex_trajectory(seq, body):
    return np.stack([forward_kinematics(q, body).vertices(body) for q in seq.frames])


def com_trajectory(seq, body, props):
    m = np.array([p.mass for p in props])
    coms = np.stack([forward_kinematics(q, body).coms(props) for q in seq.frames])
    return np.einsum("n,tni->ti", m, coms) / m.sum()


def acceleration_error(pred_joints, gt_joints):
    """Per-frame mean of ||second difference of pred - gt|| over joints, mm/frame^2."""
    a = np.diff(pred_joints, n=2, axis=0) - np.diff(gt_joints, n=2, axis=0)
    return np.linalg.norm(a, axis=-1).mean(axis=1) * MM


def velocity_error(pred_joints, gt_joints):
    vp = np.linalg.norm(np.diff(pred_joints, axis=0), axis=-1)
    vg = np.linalg.norm(np.diff(gt_joints, axis=0), axis=-1)
    return np.abs(vp - vg).mean(axis=1) * MM


def foot_sliding(vertices, height=CONTACT_HEIGHT):
    """Horizontal displacement of vertices below ``height`` in both adjacent frames.

    Returns ``(overall mean, per-pair means)`` in mm.
    """
    z = vertices[..., 2]
    both = (z[:-1] < height) & (z[1:] < height)
    disp = np.linalg.norm(vertices[1:, :, :2] - vertices[:-1, :, :2], axis=-1)
    sums = np.where(both, disp, 0.0).sum(axis=1)
    counts = both.sum(axis=1)
    per = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0) * MM
    overall = sums.sum() / counts.sum() * MM if counts.sum() else 0.0
    return float(overall), per


def ground_penetration(vertices):
    z = vertices[..., 2]
    below = z < 0
    depth = np.where(below, -z, 0.0)
    counts = below.sum(axis=1)
    per = np.divide(depth.sum(axis=1), counts, out=np.zeros(len(z)), where=counts > 0) * MM
    overall = depth.sum() / below.sum() * MM if below.any() else 0.0
    return float(overall), per


def support_contains(contact_xy, com_xy):
    """True if ``com_xy`` lies in the convex hull of ``contact_xy`` (boundary included)."""
    if len(contact_xy) == 0:
        return False
    hull = MultiPoint([tuple(p) for p in contact_xy]).convex_hull
    return bool(hull.covers(Point(*com_xy)))


def base_of_support(vertices, coms, height=CONTACT_HEIGHT):
    inside = np.array([support_contains(v[v[:, 2] < height, :2], c[:2]) for v, c in zip(vertices, coms)])
    return float(inside.mean() * 100.0) if len(inside) else 0.0, inside


def plausibility_metrics(pred, body, gt=None, props=None, metrics=None, height=CONTACT_HEIGHT):
    """Compute the requested metrics for a predicted motion.

    ``metrics`` defaults to every metric whose inputs are available:
    ACCL/VEL need ``gt``, BOS needs ``props``.
    """
    if metrics is None:
        metrics = [m for m in ALL_METRICS
                   if not (m in ("accl", "vel") and gt is None) and not (m == "bos" and props is None)]
    unknown = set(metrics) - set(ALL_METRICS)
    if unknown:
        raise MetricsError(f"unknown metrics {sorted(unknown)}")
    if gt is None and {"accl", "vel"} & set(metrics):
        raise MetricsError("ACCL and VEL need a ground-truth motion (--gt)")
    if "bos" in metrics and props is None:
        raise MetricsError("BOS needs mass properties")
    report = MetricReport()
    if gt is not None and {"accl", "vel"} & set(metrics):
        if len(gt) != len(pred):
            raise MetricsError(f"pred has {len(pred)} frames, gt has {len(gt)}")
        jp, jg = joint_trajectory(pred, body), joint_trajectory(gt, body)
        if "accl" in metrics:
            per = acceleration_error(jp, jg)
            report.accl = float(per.mean()) if per.size else 0.0
            report.per_frame["accl"] = per
        if "vel" in metrics:
            per = velocity_error(jp, jg)
            report.vel = float(per.mean()) if per.size else 0.0
            report.per_frame["vel"] = per
    if {"fs", "gp", "bos"} & set(metrics):
        verts = vertex_trajectory(pred, body)
        if "fs" in metrics:
            report.fs, report.per_frame["fs"] = foot_sliding(verts, height)
        if "gp" in metrics:
            report.gp, report.per_frame["gp"] = ground_penetration(verts)
        if "bos" in metrics:
            report.bos, inside = base_of_support(verts, com_trajectory(pred, body, props), height)
            report.per_frame["bos"] = inside.astype(int)
    return report


# ----------------------------------------------------------------------------
# losses


def reconstruction_loss(pred, gt, body, weights=LossWeights()):
    if len(pred) != len(gt):
        raise MetricsError(f"pred has {len(pred)} frames, gt has {len(gt)}")
    dq = np.asarray(pred.frames) - np.asarray(gt.frames)
    loss = weights.q * float(np.sum(dq * dq))
    if weights.joints:
        dj = joint_trajectory(pred, body) - joint_trajectory(gt, body)
        loss += weights.joints * float(np.sum(dj * dj))
    return loss


def force_loss(lam, tau, lam_bar, tau_bar, weights=LossWeights()):
    lam, lam_bar = np.asarray(lam, dtype=float), np.asarray(lam_bar, dtype=float)
    tau, tau_bar = np.asarray(tau, dtype=float), np.asarray(tau_bar, dtype=float)
    if lam.shape != lam_bar.shape or tau.shape != tau_bar.shape:
        raise MetricsError("force arrays and labels differ in shape")
    return weights.tau * float(np.abs(tau - tau_bar).sum()) + weights.lam * float(np.abs(lam - lam_bar).sum())


def contact_sets_from_forces(lams, threshold=1e-3):
    """Per frame, the contact points whose solved force exceeds ``threshold`` newtons."""
    out = []
    for lam in lams:
        lam = np.asarray(lam, dtype=float).reshape(-1, 3)
        out.append(np.nonzero(np.linalg.norm(lam, axis=1) > threshold)[0])
    return out


def contact_loss(seq, body, contact_sets, weights=LossWeights(), frames=None):
    """Mean per-frame penalty on velocity and height of points in contact.

    ``contact_sets[k]`` indexes ``body.contact_index`` for frame
    ``frames[k]`` (default: all frames in order).
    """
    frames = range(len(seq)) if frames is None else frames
    qd = finite_difference_derivatives(seq)[0]
    loss = 0.0
    for t, idx in zip(frames, contact_sets):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            continue
        pose = forward_kinematics(seq.frames[t], body)
        pts = pose.contact_points(body)[idx]
        vel = (contact_jacobian(None, body, pose=pose) @ qd[t]).reshape(-1, 3)[idx]
        per = weights.vel * np.abs(vel).sum(axis=1) + weights.height * np.abs(pts[:, 2])
        loss += float(per.sum()) / idx.size
    return loss


def euler_lagrange_residuals(seq, lam_bar, tau_bar, body, props, gravity=GRAVITY, frames=None):
    frames = range(len(seq)) if frames is None else frames
    qd, qdd = finite_difference_derivatives(seq)
    out = []
    for t, lam, tau in zip(frames, lam_bar, tau_bar):
        terms = dynamics_terms(seq.frames[t], qd[t], body, props, gravity)
        out.append(el_residual(seq.frames[t], qd[t], qdd[t], lam, tau, body, props, terms=terms))
    return np.array(out)


def euler_lagrange_loss(seq, lam_bar, tau_bar, body, props, gravity=GRAVITY, frames=None):
    res = euler_lagrange_residuals(seq, lam_bar, tau_bar, body, props, gravity, frames)
    return float(np.abs(res).sum())


def total_loss(report):
    return report.l_recon + report.l_force + report.l_contact + report.l_euler
