"""Per-frame recovery of contact forces and joint actuations.

With ``r = M qdd + C + g`` and ``B = J_C^T A`` the frame problem is::

    min_{x, tau} || r - B x - tau ||^2   s.t.  0 <= x <= x_max

``tau`` is unconstrained, so it is eliminated as ``tau = r - B x``.  What
remains is box-constrained least squares over ``x``, either on all rows
(``full-residual``) or on the six unactuated floating-base rows
(``base-only``).
"""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .contact import contact_basis, contact_state, default_x_max
from .dynamics import GRAVITY, dynamics_terms
from .kinematics import endpoint_mask, finite_difference_derivatives, near_gimbal

log = logging.getLogger(__name__)

MODES = ("full-residual", "base-only")
BASE_ROWS = 6
_ZERO_COLUMN = 1e-300
# refine BVLS output whose KKT residual is above this
_POLISH_ABOVE = 1e-13


class SolverError(RuntimeError):
    """The QP did not reach a KKT point; carries the best iterate."""

    def __init__(self, message, x=None, kkt_residual=None):
        super().__init__(message)
        self.x = x
        self.kkt_residual = kkt_residual


@dataclass
class SolverConfig:
    mode: str = "full-residual"
    x_max: np.ndarray | None = None
    kkt_tol: float = 1e-8
    max_iter: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if self.x_max is not None:
            self.x_max = np.asarray(self.x_max, dtype=float).reshape(-1)
            if np.any(self.x_max <= 0):
                raise ValueError("x_max must be positive")


@dataclass
class ForceSolution:
    x: np.ndarray
    lam: np.ndarray | None
    tau: np.ndarray
    residual_full: float
    residual_base: float
    kkt_residual: float
    objective: float
    frame: int | None = None
    endpoint: bool = False
    warnings: list = field(default_factory=list)


@dataclass
class FrameFailure:
    frame: int
    endpoint: bool
    message: str


def _rows(r, mode):
    return slice(None) if mode == "full-residual" else slice(0, BASE_ROWS)


def _scaled(r, B, config):
    """Selected rows, unit-norm columns, and the bounds in scaled variables."""
    sel = _rows(r, config.mode)
    b = np.asarray(r, dtype=float)[sel]
    Bs = np.asarray(B, dtype=float)[sel]
    norms = np.linalg.norm(Bs, axis=0)
    live = norms > _ZERO_COLUMN
    x_max = config.x_max
    An = Bs[:, live] / norms[live]
    ub = x_max[live] * norms[live]
    return b, An, ub, norms, live


def objective(r, B, x, mode="full-residual"):
    sel = _rows(r, mode)
    res = (np.asarray(r, dtype=float) - np.asarray(B, dtype=float) @ x)[sel]
    return float(res @ res)


def _kkt(b, An, ub, y):
    if y.size == 0:
        return 0.0
    scale = max(np.linalg.norm(b), 1.0e-300) if np.any(b) else 1.0
    grad = -An.T @ (b - An @ y)
    # projected gradient: |grad| inside the box, the outward-pointing part at
    # a bound, and never more than the box width (gated-off points have
    # boxes of ~1e-30)
    viol = np.abs(y - np.clip(y - grad, 0.0, ub))
    return float(viol.max() / scale)


def kkt_check(solution, r, B, config):
    """Largest scaled KKT violation of ``solution.x`` for the frame problem."""
    x = np.asarray(solution.x if hasattr(solution, "x") else solution, dtype=float)
    if x.size == 0:
        return 0.0
    cfg = _with_bounds(config, x.size)
    b, An, ub, norms, live = _scaled(r, B, cfg)
    return _kkt(b, An, ub, x[live] * norms[live])


def _with_bounds(config, n):
    if config.x_max is None:
        raise ValueError("solver config needs x_max")
    if config.x_max.size != n:
        raise ValueError(f"x_max has {config.x_max.size} entries, problem has {n} variables")
    return config


def solve_frame(r, B, config, basis=None):
    """Solve one frame; see the module docstring for the two modes."""
    r = np.asarray(r, dtype=float).reshape(-1)
    B = np.asarray(B, dtype=float).reshape(len(r), -1)
    n = B.shape[1]
    if n == 0:
        tau = r.copy()
        return ForceSolution(np.zeros(0), np.zeros(0), tau, 0.0, float(np.linalg.norm(r[:BASE_ROWS])), 0.0,
                             objective(r, B, np.zeros(0), config.mode))
    config = _with_bounds(config, n)
    b, An, ub, norms, live = _scaled(r, B, config)
    max_iter = config.max_iter or 10 * max(n, 1)
    x = np.zeros(n)
    if An.shape[1]:
        res = lsq_linear(An, b, bounds=(np.zeros_like(ub), ub), method="bvls", tol=1e-14,
                         max_iter=max_iter)
        y = np.clip(res.x, 0.0, ub)
        kkt = _kkt(b, An, ub, y)
        if res.status == 0 or kkt > _POLISH_ABOVE:
            y2, kkt2 = _polish(b, An, ub, y)
            if kkt2 < kkt:
                y, kkt = y2, kkt2
        if kkt > config.kkt_tol:
            best = np.zeros(n)
            best[live] = y / norms[live]
            raise SolverError(f"no KKT point within {max_iter} iterations (kkt {kkt:.3g})", best, kkt)
        # unscaling may overshoot a bound by an ulp
        x[live] = np.minimum(y / norms[live], config.x_max[live])
    else:
        kkt = 0.0
    tau = r - B @ x
    lam = None if basis is None else np.asarray(basis) @ x
    return ForceSolution(
        x=x, lam=lam, tau=tau,
        residual_full=float(np.linalg.norm(r - B @ x - tau)),
        residual_base=float(np.linalg.norm(tau[:BASE_ROWS])),
        kkt_residual=kkt,
        objective=objective(r, B, x, config.mode),
    )


def _polish(b, An, ub, y, max_iter=None):
    """Bounded-variable active-set refinement starting from ``y``.

    Frees the most violating bound variable, then steps toward the free-set
    least-squares optimum, returning variables to their bounds when the
    step hits the box.  Rank-deficient free sets use the minimum-norm
    solution.
    """
    n = len(y)
    max_iter = max_iter or 30 * n + 50
    y = np.clip(y, 0.0, ub)
    free = (y > 0.0) & (y < ub)
    best, best_kkt = y.copy(), _kkt(b, An, ub, y)
    for _ in range(max_iter):
        # inner loop: free-set optimum, clipped by the box
        for _ in range(n + 1):
            rhs = b - An[:, ~free] @ y[~free]
            cand = y.copy()
            if free.any():
                cand[free] = np.linalg.lstsq(An[:, free], rhs, rcond=None)[0]
            d = cand - y
            with np.errstate(divide="ignore", invalid="ignore"):
                t_hi = np.where(free & (d > 0), (ub - y) / d, np.inf)
                t_lo = np.where(free & (d < 0), -y / d, np.inf)
            t = float(np.min(np.minimum(t_hi, t_lo), initial=np.inf))
            if t >= 1.0:
                y = cand
                break
            y = y + t * d
            hit = free & ((t_hi <= t) | (t_lo <= t))
            y[hit & (t_hi <= t)] = ub[hit & (t_hi <= t)]
            y[hit & (t_lo <= t)] = 0.0
            free &= ~hit
        y = np.clip(y, 0.0, ub)
        kkt = _kkt(b, An, ub, y)
        if kkt < best_kkt:
            best, best_kkt = y.copy(), kkt
        if kkt <= 1e-15:
            break
        grad = -An.T @ (b - An @ y)
        # how strongly each bound variable wants to move into the box
        pull = np.where(~free & (y <= 0.0), -grad, np.where(~free & (y >= ub), grad, 0.0))
        k = int(np.argmax(pull))
        if pull[k] <= 0.0:
            break
        free[k] = True
    return best, best_kkt


# ----------------------------------------------------------------------------
# sequences


def frame_problem(q, qd, qdd, body, props, gravity=GRAVITY):
    """Return ``(r, B, A, terms)`` for one frame."""
    terms = dynamics_terms(q, qd, body, props, gravity)
    r = terms.inverse_dynamics(qdd)
    A = contact_basis(contact_state(terms.pose, qd, body, J_C=terms.J_C))
    B = terms.J_C.T @ A if body.n_contacts else np.zeros((body.n_q, 0))
    return r, B, A, terms


def _solve_one(args):
    t, q, qd, qdd, endpoint, body, props, config, gravity = args
    try:
        r, B, A, _ = frame_problem(q, qd, qdd, body, props, gravity)
        sol = solve_frame(r, B, config, basis=A)
    except (SolverError, np.linalg.LinAlgError, ValueError) as exc:
        return FrameFailure(t, endpoint, str(exc))
    sol.frame = t
    sol.endpoint = endpoint
    if near_gimbal(q):
        sol.warnings.append("near gimbal lock")
    return sol


def resolve_config(config, body, gravity=GRAVITY):
    if config.x_max is None:
        x_max = default_x_max(body.n_contacts, body.mass.total_kg, gravity)
        config = SolverConfig(config.mode, x_max, config.kkt_tol, config.max_iter)
    return config


def solve_sequence(seq, body, props, config=None, gravity=GRAVITY, workers=1, frames=None):
    """Solve every frame (or the listed ``frames``) independently.

    Returns one ForceSolution or FrameFailure per requested frame, in the
    requested order.  Endpoint frames use one-sided derivatives and are
    flagged.
    """
    config = resolve_config(config or SolverConfig(), body, gravity)
    qd, qdd = finite_difference_derivatives(seq)
    ends = endpoint_mask(len(seq))
    order = range(len(seq)) if frames is None else frames
    jobs = [(t, seq.frames[t], qd[t], qdd[t], bool(ends[t]), body, props, config, gravity) for t in order]
    if workers and workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_solve_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_solve_one(j) for j in jobs]
    for res in out:
        if isinstance(res, FrameFailure):
            log.warning("frame %d failed: %s", res.frame, res.message)
    return out
