"""Static figures written next to the JSON reports."""

import numpy as np
from matplotlib.figure import Figure


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None} if str(path).endswith(".png") else None)


def plot_forces(records, fps, path):
    """Net vertical contact force and actuation norm per frame."""
    ok = [r for r in records if "lambda" in r]
    t = np.array([r["frame"] for r in ok]) / fps
    fz = np.array([np.sum(np.asarray(r["lambda"]).reshape(-1, 3)[:, 2]) for r in ok])
    tau = np.array([np.linalg.norm(r["tau"][6:]) for r in ok])
    base = np.array([r["residual_base"] for r in ok])
    ends = np.array([r.get("endpoint", False) for r in ok], dtype=bool)

    fig = Figure(figsize=(7, 5))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    ax1.plot(t, fz, color="tab:green", lw=1.5, label="net vertical contact force")
    if ends.any():
        ax1.plot(t[ends], fz[ends], "o", color="tab:gray", ms=4, label="endpoint frame")
    ax1.set_ylabel("force [N]")
    ax1.legend(frameon=False, fontsize=8)
    ax2.plot(t, tau, color="tab:blue", lw=1.5, label="joint actuation norm")
    ax2.plot(t, base, color="tab:red", lw=1.0, ls="--", label="floating-base residual")
    ax2.set_xlabel("time [s]")
    ax2.set_ylabel("generalized force")
    ax2.legend(frameon=False, fontsize=8)
    _save(fig, path)


def plot_metrics(report, path):
    """Per-frame breakdown of every metric in ``report`` (a MetricReport dict)."""
    per = {k: v for k, v in report["per_frame"].items() if len(v)}
    n = max(len(per), 1)
    fig = Figure(figsize=(7, 1.8 * n + 0.6))
    axes = np.atleast_1d(fig.subplots(n, 1, sharex=True, squeeze=False)[:, 0])
    for ax, (name, values) in zip(axes, per.items()):
        ax.plot(np.arange(len(values)), values, lw=1.2)
        unit = report.get("units", {}).get(name, "")
        ax.set_ylabel(f"{name.upper()}\n[{unit}]", fontsize=8)
    axes[-1].set_xlabel("frame")
    _save(fig, path)
