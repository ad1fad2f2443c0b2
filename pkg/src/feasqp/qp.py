"""Per-step convex QP over (u, delta): assembly, solve, feasibility verdict.

The programs are tiny (<= 4 variables, ~a dozen rows), so a dense primal
active-set method with a phase-1 start is used. Infeasible is a first-class
verdict: the phase-1 optimum exceeding tolerance certifies that no point
satisfies all rows and bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .certificates import (
    GE,
    LE,
    ClassK,
    ClfSpec,
    HocbfSpec,
    LinearRow,
    clf_row,
    feasibility_row,
    hocbf_row,
)
from .dynamics import Control, ControlBounds, State, group_obstacles

FEAS_TOL = 1e-8  # phase-1 objective above this certifies infeasibility
KKT_TOL = 1e-6
MAX_ACTIVE_SET_ITERS = 200

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class QpProblem:
    """min u'Hu + p0*sum(delta^2) over (u, delta) s.t. bounds and rows."""

    H_cost: np.ndarray
    p0: float
    bounds: ControlBounds
    rows: tuple
    n_relax: int

    def __post_init__(self):
        H = np.asarray(self.H_cost, dtype=float)
        object.__setattr__(self, "H_cost", H)
        if H.shape[0] != H.shape[1] or not np.allclose(H, H.T):
            raise ValueError("H_cost must be symmetric")
        if np.any(np.linalg.eigvalsh(H) <= 0.0):
            raise ValueError("H_cost must be positive definite")
        if self.p0 <= 0.0:
            raise ValueError("relaxation penalty must be positive")
        q = H.shape[0]
        for r in self.rows:
            if len(r.coeff_u) != q:
                raise ValueError("row coefficient length does not match control dim")
            if r.delta_index >= self.n_relax:
                raise ValueError("row references a missing relaxation variable")

    @property
    def q(self) -> int:
        return self.H_cost.shape[0]

    @property
    def n_vars(self) -> int:
        return self.q + self.n_relax


@dataclass(frozen=True)
class QpSolution:
    status: str
    u_star: Optional[np.ndarray] = None
    delta_star: Optional[np.ndarray] = None
    objective: Optional[float] = None
    kkt_residual: Optional[float] = None


def _standard_form(p: QpProblem):
    """All constraints as G x >= h over x = (u, delta)."""
    n = p.n_vars
    q = p.q
    G_rows, h_vals = [], []
    for j in range(q):
        e = np.zeros(n)
        e[j] = 1.0
        G_rows.append(e.copy())
        h_vals.append(p.bounds.u_min[j])
        G_rows.append(-e)
        h_vals.append(-p.bounds.u_max[j])
    for r in p.rows:
        g = np.zeros(n)
        g[:q] = r.coeff_u
        if r.delta_index >= 0:
            g[q + r.delta_index] = r.coeff_delta
        if r.sense == GE:
            G_rows.append(g)
            h_vals.append(r.rhs)
        else:
            G_rows.append(-g)
            h_vals.append(-r.rhs)
    return np.array(G_rows), np.array(h_vals)


def _clip_polygon(verts: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by a.x >= b."""
    out = []
    m = len(verts)
    for i in range(m):
        p0, p1 = verts[i], verts[(i + 1) % m]
        d0, d1 = a @ p0 - b, a @ p1 - b
        if d0 >= -FEAS_TOL:
            out.append(p0)
        if (d0 < -FEAS_TOL) != (d1 < -FEAS_TOL):
            denom = d0 - d1
            if abs(denom) > 1e-300:
                t = d0 / denom
                out.append(p0 + t * (p1 - p0))
    return np.array(out) if out else np.empty((0, 2))


def _feasible_point_2d(p: QpProblem):
    """Exact feasibility via half-plane clipping of the control box.

    Applies when q == 2 and every relaxed row is trivially satisfiable by
    pushing its (free-signed) delta. Returns (feasible, point or None).
    """
    verts = np.array(
        [
            [p.bounds.u_min[0], p.bounds.u_min[1]],
            [p.bounds.u_max[0], p.bounds.u_min[1]],
            [p.bounds.u_max[0], p.bounds.u_max[1]],
            [p.bounds.u_min[0], p.bounds.u_max[1]],
        ]
    )
    for r in p.rows:
        if r.delta_index >= 0:
            continue  # absorbed by the free relaxation variable
        a = r.coeff_u if r.sense == GE else -r.coeff_u
        b = r.rhs if r.sense == GE else -r.rhs
        verts = _clip_polygon(verts, a, b)
        if len(verts) == 0:
            return False, None
    u0 = verts.mean(axis=0)
    # the centroid of a clipped polygon can drift outside by rounding; any
    # vertex is feasible by construction
    for cand in (u0, *verts):
        ok = True
        for r in p.rows:
            if r.delta_index >= 0:
                continue
            a = r.coeff_u if r.sense == GE else -r.coeff_u
            b = r.rhs if r.sense == GE else -r.rhs
            if a @ cand < b - FEAS_TOL:
                ok = False
                break
        if ok:
            return True, cand
    return True, verts[0]


def _relaxed_rows_absorbable(p: QpProblem) -> bool:
    seen = set()
    for r in p.rows:
        if r.delta_index < 0:
            continue
        if r.delta_index in seen:
            return False  # shared deltas may conflict; use the generic path
        seen.add(r.delta_index)
        # a <= row with negative delta coeff (or >= with positive) is
        # satisfiable for any u by a large delta of the right sign
        if r.sense == LE and r.coeff_delta < 0:
            continue
        if r.sense == GE and r.coeff_delta > 0:
            continue
        return False
    return True


def _complete_deltas(p: QpProblem, u: np.ndarray) -> np.ndarray:
    """Smallest-magnitude deltas satisfying the relaxed rows at fixed u."""
    delta = np.zeros(p.n_relax)
    for r in p.rows:
        if r.delta_index < 0:
            continue
        slack = r.rhs - float(r.coeff_u @ u)
        # sense LE: coeff_u.u + cd*delta <= rhs -> cd*delta <= slack
        need = slack / r.coeff_delta
        k = r.delta_index
        if r.sense == LE:
            if r.coeff_delta < 0:
                delta[k] = max(delta[k], need) if need > 0 else delta[k]
            else:
                delta[k] = min(delta[k], need) if need < 0 else delta[k]
        else:
            if r.coeff_delta > 0:
                delta[k] = max(delta[k], need) if need > 0 else delta[k]
            else:
                delta[k] = min(delta[k], need) if need < 0 else delta[k]
    return delta


def _phase1(p: QpProblem):
    """Feasible point for G x >= h, or None if certified infeasible."""
    if p.q == 2 and _relaxed_rows_absorbable(p):
        ok, u0 = _feasible_point_2d(p)
        if not ok:
            return None
        return np.concatenate([u0, _complete_deltas(p, u0)])
    G, h = _standard_form(p)
    m, n = G.shape
    # min 1's . s  s.t.  G x + s >= h, s >= 0
    c = np.concatenate([np.zeros(n), np.ones(m)])
    A_ub = np.hstack([-G, -np.eye(m)])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=-h,
        bounds=[(None, None)] * n + [(0, None)] * m,
        method="highs",
    )
    if not res.success or res.fun > FEAS_TOL:
        return None
    return res.x[:n]


def check_feasible(p: QpProblem) -> bool:
    """True iff some (u, delta) satisfies every row and bound."""
    return _phase1(p) is not None


def _active_set(Q: np.ndarray, c: np.ndarray, G: np.ndarray, h: np.ndarray, x0: np.ndarray):
    """Primal active-set for min 0.5 x'Qx + c'x s.t. Gx >= h, Q PD.

    Returns (x, lambdas, status). x0 must be feasible (within FEAS_TOL).
    """
    n = len(x0)
    m = len(h)
    x = x0.astype(float).copy()
    work: List[int] = []
    for _ in range(MAX_ACTIVE_SET_ITERS):
        grad = Q @ x + c
        if work:
            Gw = G[work]
            K = np.block([[Q, -Gw.T], [Gw, np.zeros((len(work), len(work)))]])
            rhs = np.concatenate([-grad, np.zeros(len(work))])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            pstep, lam = sol[:n], sol[n:]
        else:
            pstep = np.linalg.solve(Q, -grad)
            lam = np.zeros(0)
        if np.max(np.abs(pstep)) <= 1e-11:
            if len(lam) == 0 or np.min(lam) >= -1e-9:
                lambdas = np.zeros(m)
                lambdas[work] = np.maximum(lam, 0.0)
                return x, lambdas, OPTIMAL
            work.pop(int(np.argmin(lam)))
            continue
        alpha = 1.0
        blocking = -1
        for i in range(m):
            if i in work:
                continue
            d = G[i] @ pstep
            if d < -1e-12:
                step = (G[i] @ x - h[i]) / (-d)
                if step < alpha:
                    alpha = max(step, 0.0)
                    blocking = i
        x = x + alpha * pstep
        if blocking >= 0:
            work.append(blocking)
    return x, None, ITERATION_LIMIT


def _kkt_residual(Q, c, G, h, x, lambdas) -> float:
    stat = np.max(np.abs(Q @ x + c - G.T @ lambdas)) if len(h) else np.max(np.abs(Q @ x + c))
    if len(h):
        slack = G @ x - h
        primal = max(0.0, float(-np.min(slack)))
        dual = max(0.0, float(-np.min(lambdas)))
        comp = float(np.max(np.abs(lambdas * slack)))
    else:
        primal = dual = comp = 0.0
    return max(float(stat), primal, dual, comp)


def solve(p: QpProblem) -> QpSolution:
    """Solve the QP; Optimal with KKT residuals <= 1e-6 or Infeasible."""
    x0 = _phase1(p)
    if x0 is None:
        return QpSolution(status=INFEASIBLE)
    G, h = _standard_form(p)
    # clamp phase-1 roundoff so the active-set start is strictly feasible
    viol = h - G @ x0
    if np.any(viol > 0):
        # tiny violations only; nudge along the most violated normals
        for i in np.where(viol > 0)[0]:
            gi = G[i]
            x0 = x0 + gi * (viol[i] / (gi @ gi))
    Q = np.zeros((p.n_vars, p.n_vars))
    Q[: p.q, : p.q] = 2.0 * p.H_cost
    for k in range(p.n_relax):
        Q[p.q + k, p.q + k] = 2.0 * p.p0
    c = np.zeros(p.n_vars)
    x, lambdas, status = _active_set(Q, c, G, h, x0)
    if status != OPTIMAL:
        return QpSolution(status=ITERATION_LIMIT)
    res = _kkt_residual(Q, c, G, h, x, lambdas)
    u = x[: p.q]
    delta = x[p.q :]
    obj = float(u @ p.H_cost @ u + p.p0 * np.sum(delta**2))
    return QpSolution(status=OPTIMAL, u_star=u, delta_star=delta, objective=obj, kkt_residual=res)


def assemble(
    state: State,
    obstacles_in_view: Sequence,
    clf_specs: Sequence[ClfSpec],
    hocbf_specs: Sequence[HocbfSpec],
    hypersurfaces: dict,
    bounds: ControlBounds,
    H_cost: Optional[np.ndarray] = None,
    p0: float = 1.0,
    feasibility_gain: float = 1.0,
) -> QpProblem:
    """Stack bounds, CLF rows, HOCBF rows and learned feasibility rows.

    `obstacles_in_view` holds MovingDisks; `hypersurfaces` maps type_id to a
    trained model. Each disk contributes one HOCBF row per obstacle-barrier
    spec; each detected unsafe set contributes one feasibility row using the
    hypersurface of its type (when one is configured). State-limit HOCBFs
    (m=1, no obstacle) are applied once.
    """
    q = len(bounds.u_min)
    if H_cost is None:
        H_cost = np.eye(q)
    rows = []
    for k, clf in enumerate(clf_specs):
        rows.append(clf_row(clf, state, delta_index=k))
    obstacle_specs = [sp for sp in hocbf_specs if sp.m == 2]
    plain_specs = [sp for sp in hocbf_specs if sp.m == 1]
    for sp in plain_specs:
        rows.append(hocbf_row(sp, state))
    for d in obstacles_in_view:
        for sp in obstacle_specs:
            rows.append(hocbf_row(sp, state, d))
    alpha_h = ClassK(feasibility_gain, extended=True)
    for oset in group_obstacles(obstacles_in_view):
        h = hypersurfaces.get(oset.type_id)
        if h is None:
            continue
        row = feasibility_row(h, state, oset, alpha=alpha_h)
        if row is not None:
            rows.append(row)
    return QpProblem(
        H_cost=H_cost,
        p0=p0,
        bounds=bounds,
        rows=tuple(rows),
        n_relax=len(clf_specs),
    )
