"""Command-line front end.

Exit codes: 0 success (possibly with warnings), 2 usage or schema error,
3 geometry or numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .body import BodyError, GeometryError, close_part_mesh, load_body, save_body
from .dynamics import GRAVITY
from .kinematics import MotionError, MotionSequence, forward_kinematics, load_motion, save_motion
from .massprops import body_mass_properties
from .metrics import (LossReport, LossWeights, MetricsError, contact_loss, contact_sets_from_forces,
                      euler_lagrange_loss, force_loss, plausibility_metrics, reconstruction_loss)
from .solver import ForceSolution, SolverConfig, SolverError, solve_sequence

log = logging.getLogger("physdyn")

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def gravity_from(args):
    if getattr(args, "gravity", None) is not None:
        return float(args.gravity)
    env = os.environ.get("PHYSDYN_GRAVITY")
    if env:
        try:
            return float(env)
        except ValueError:
            raise UsageError(f"PHYSDYN_GRAVITY={env!r} is not a number") from None
    return GRAVITY


def write_json(obj, path):
    text = json.dumps(obj, indent=1, allow_nan=False)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")


def read_json(path, what):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc}") from None


def _body(args, close=False):
    body = load_body(args.body)
    if close:
        body = body.with_meshes([close_part_mesh(m) for m in body.part_meshes])
    return body


def _motion(path, body):
    seq = load_motion(path, n_q=body.n_q)
    return seq


# ----------------------------------------------------------------------------
# commands


def run_massprops(args):
    body = _body(args, close=args.close)
    props = body_mass_properties(body)
    write_json({
        "parts": [{"id": i, **p.to_dict()} for i, p in enumerate(props)],
        "total_mass_kg": float(sum(p.mass for p in props)),
        "total_volume_m3": float(sum(p.volume for p in props)),
        "mass_mode": body.mass.mode,
        "units": {"volume": "m^3", "mass": "kg", "com": "m", "inertia": "kg m^2, about COM, row-major"},
    }, args.out)
    return 0


def run_fk(args):
    body = _body(args)
    seq = _motion(args.motion, body)
    poses = []
    for q in seq.frames:
        pose = forward_kinematics(q, body)
        poses.append({
            "joints": pose.joints.tolist(),
            "rotations": pose.rotations.reshape(-1, 9).tolist(),
            "contact_points": pose.contact_points(body).tolist(),
        })
    write_json({
        "fps": seq.fps,
        "angles": "euler_xyz",
        "dof_names": body.tree.dof_names(body.part_names),
        "frames": seq.frames.tolist(),
        "poses": poses,
        "units": {"joints": "m", "contact_points": "m", "rotations": "row-major 3x3", "frames": "m, rad"},
    }, args.out)
    return 0


def _x_max(args, body, gravity):
    from .contact import default_x_max

    x_max = default_x_max(body.n_contacts, body.mass.total_kg, gravity)
    per_point = x_max.reshape(-1, 3)
    for i, value in enumerate((args.kh_max, args.kn_max, args.c_max)):
        if value is not None:
            per_point[:, i] = value
    return per_point.reshape(-1)


def infer_records(results):
    records, failures = [], 0
    for res in results:
        if isinstance(res, ForceSolution):
            rec = {
                "frame": res.frame,
                "lambda": res.lam.tolist(),
                "tau": res.tau.tolist(),
                "x": res.x.tolist(),
                "residual_base": res.residual_base,
                "kkt": res.kkt_residual,
            }
            if res.warnings:
                rec["warnings"] = list(res.warnings)
        else:
            failures += 1
            rec = {"frame": res.frame, "error": res.message}
        if res.endpoint:
            rec["endpoint"] = True
        records.append(rec)
    return records, failures


def run_infer(args):
    body = _body(args)
    gravity = gravity_from(args)
    seq = _motion(args.motion, body)
    if len(seq) < 3:
        raise UsageError(f"need ≥ 3 frames, motion has {len(seq)}")
    props = body_mass_properties(body)
    config = SolverConfig(mode=args.mode, x_max=_x_max(args, body, gravity))
    results = solve_sequence(seq, body, props, config, gravity=gravity, workers=args.workers)
    records, failures = infer_records(results)
    warnings = failures + sum(1 for r in records if "warnings" in r)
    write_json({
        "mode": args.mode,
        "gravity_m_s2": gravity,
        "fps": seq.fps,
        "n_q": body.n_q,
        "n_contacts": body.n_contacts,
        "x_max": config.x_max.tolist(),
        "units": {"lambda": "N", "tau": "N (translation rows), N m (rotation rows)",
                  "x": "N/m, N/m, N s/m per contact point"},
        "warnings": warnings,
        "frames": records,
    }, args.out)
    if args.figure:
        from .plotting import plot_forces

        plot_forces(records, seq.fps, args.figure)
    if failures:
        log.warning("%d frame(s) failed; see the output file", failures)
    return 0


def run_metrics(args):
    body = _body(args)
    pred = _motion(args.pred, body)
    gt = _motion(args.gt, body) if args.gt else None
    requested = args.metrics.split(",") if args.metrics else None
    if requested and gt is None and {"accl", "vel"} & set(requested):
        raise UsageError("ACCL/VEL requested but --gt was not given")
    props = body_mass_properties(body)
    report = plausibility_metrics(pred, body, gt=gt, props=props, metrics=requested)
    out = report.to_dict()
    write_json(out, args.out)
    if args.figure:
        from .plotting import plot_metrics

        plot_metrics(out, args.figure)
    return 0


def _forces_arrays(data, body):
    frames, lams, taus = [], [], []
    for rec in data.get("frames", []):
        if "lambda" not in rec:
            continue
        frames.append(int(rec["frame"]))
        lams.append(np.asarray(rec["lambda"], dtype=float))
        taus.append(np.asarray(rec["tau"], dtype=float))
    if not frames:
        raise UsageError("forces file contains no solved frames")
    if lams[0].size != 3 * body.n_contacts or taus[0].size != body.n_q:
        raise UsageError("forces file does not match the body dimensions")
    return frames, np.array(lams), np.array(taus)


def run_losses(args):
    body = _body(args)
    gravity = gravity_from(args)
    pred = _motion(args.pred, body)
    gt = _motion(args.gt, body)
    data = read_json(args.forces, "forces")
    frames, lam_bar, tau_bar = _forces_arrays(data, body)
    if max(frames) >= len(pred):
        raise UsageError("forces file refers to frames beyond the predicted motion")
    props = body_mass_properties(body)
    weights = LossWeights()

    if args.pred_forces:
        pframes, lam, tau = _forces_arrays(read_json(args.pred_forces, "forces"), body)
        if pframes != frames:
            raise UsageError("--pred-forces and --forces cover different frames")
    else:
        mode = data.get("mode", "full-residual")
        x_max = np.asarray(data["x_max"], dtype=float) if "x_max" in data else None
        sols = solve_sequence(pred, body, props, SolverConfig(mode=mode, x_max=x_max), gravity=gravity,
                              frames=frames)
        if not all(isinstance(s, ForceSolution) for s in sols):
            raise SolverError("force solve failed on the predicted motion")
        lam = np.array([s.lam for s in sols])
        tau = np.array([s.tau for s in sols])

    report = LossReport(
        l_recon=reconstruction_loss(pred, gt, body, weights),
        l_force=force_loss(lam, tau, lam_bar, tau_bar, weights),
        l_contact=contact_loss(pred, body, contact_sets_from_forces(lam_bar), weights, frames=frames),
        l_euler=euler_lagrange_loss(pred, lam_bar, tau_bar, body, props, gravity, frames=frames),
        weights=weights,
    )
    out = report.to_dict()
    out["frames"] = len(frames)
    out["units"] = {"l_recon": "SI, weighted", "l_force": "N / N m, weighted", "l_contact": "weighted",
                    "l_euler": "generalized force"}
    write_json(out, args.out)
    return 0


def run_humanoid(args):
    from .humanoid import make_humanoid

    body = make_humanoid(total_kg=args.total_kg)
    save_body(body, args.out)
    if args.standing:
        seq = MotionSequence(np.zeros((args.frames, body.n_q)), args.fps)
        save_motion(seq, args.standing, body.tree.dof_names(body.part_names))
    return 0


# ----------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="physdyn", description="Articulated-body dynamics and contact-force inference.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("massprops", help="per-part volume, mass, COM and inertia")
    s.add_argument("--body", required=True)
    s.add_argument("--out", default="-")
    s.add_argument("--close", action="store_true", help="cap open part meshes before integrating")
    s.set_defaults(func=run_massprops)

    s = sub.add_parser("fk", help="forward kinematics dump")
    s.add_argument("--body", required=True)
    s.add_argument("--motion", required=True)
    s.add_argument("--out", default="-")
    s.set_defaults(func=run_fk)

    s = sub.add_parser("infer", help="per-frame contact forces and actuations")
    s.add_argument("--body", required=True)
    s.add_argument("--motion", required=True)
    s.add_argument("--mode", choices=("full-residual", "base-only"), default="full-residual")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--gravity", type=float)
    s.add_argument("--kh-max", type=float, help="horizontal stiffness bound per point [N/m]")
    s.add_argument("--kn-max", type=float, help="normal stiffness bound per point [N/m]")
    s.add_argument("--c-max", type=float, help="damping bound per point [N s/m]")
    s.add_argument("--figure", help="also write a force plot (PNG/PDF/SVG)")
    s.add_argument("--out", default="-")
    s.set_defaults(func=run_infer)

    s = sub.add_parser("metrics", help="ACCL, VEL, FS, GP, BOS")
    s.add_argument("--body", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--gt")
    s.add_argument("--metrics", help="comma-separated subset of accl,vel,fs,gp,bos")
    s.add_argument("--figure", help="also write per-frame metric plots")
    s.add_argument("--out", default="-")
    s.set_defaults(func=run_metrics)

    s = sub.add_parser("losses", help="reconstruction, force, contact and Euler-Lagrange losses")
    s.add_argument("--body", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--forces", required=True, help="label forces (output of infer)")
    s.add_argument("--pred-forces", help="predicted forces; default: solved on --pred")
    s.add_argument("--gravity", type=float)
    s.add_argument("--out", default="-")
    s.set_defaults(func=run_losses)

    s = sub.add_parser("humanoid", help="write the default 24-part humanoid body")
    s.add_argument("--out", required=True)
    s.add_argument("--total-kg", type=float, default=70.0)
    s.add_argument("--standing", help="also write a static standing motion here")
    s.add_argument("--frames", type=int, default=10)
    s.add_argument("--fps", type=float, default=30.0)
    s.set_defaults(func=run_humanoid)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, BodyError, MotionError, MetricsError) as exc:
        print(f"physdyn {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, SolverError, np.linalg.LinAlgError) as exc:
        print(f"physdyn {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"physdyn {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
