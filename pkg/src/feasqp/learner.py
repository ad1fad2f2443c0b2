"""Feasibility learning: sampling, QP labeling, SMO-trained SVM hypersurface.

States around an unsafe set are sampled in relative coordinates, labeled by
one-step (regular sets) or multi-step closed-loop (irregular sets) QP
feasibility, and separated by a soft-margin SVM with a degree-2 polynomial
kernel. The resulting decision function H(z) is enforced online as an extra
relative-degree-1 barrier row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .certificates import (
    ClassK,
    HocbfSpec,
    circular_obstacle_hocbf,
    heading_clf,
    psi_sequence,
    speed_ceiling_hocbf,
    speed_clf,
    speed_floor_hocbf,
)
from .dynamics import (
    Control,
    ControlBounds,
    MovingDisk,
    ObstacleSet,
    State,
    advance_obstacle,
    group_obstacles,
    step_euler,
    unicycle_system,
    wrap_angle,
)

MODEL_VERSION = 1

FEATURES_ROBOT = 4  # (x - xo, y - yo, theta, v) in the set frame
FEATURES_DRIVING = 5  # (rel pos along/lateral, rel speed along/lateral, heading)


# ---------------------------------------------------------------------------
# kernel and hypersurface


@dataclass(frozen=True)
class KernelParams:
    k1: float = 0.9
    k2: float = 0.4
    degree: int = 2

    def __post_init__(self):
        if self.k1 <= 0.0 or self.k2 <= 0.0:
            raise ValueError("kernel parameters must be positive")
        if self.degree != 2:
            raise ValueError("only the degree-2 polynomial kernel is supported")

    def __call__(self, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return (self.k1 + self.k2 * np.asarray(Y) @ np.asarray(Z).T) ** 2


@dataclass(frozen=True)
class Hypersurface:
    """SVM decision function H(z) = sum_i c_i k(sv_i, z) + bias.

    dual_coeffs holds alpha_i * y_i for the retained support vectors; H is a
    polynomial of total degree 2 in z.
    """

    kernel: KernelParams
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    feature_dim: int

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=float).reshape(-1, self.feature_dim)
        dc = np.asarray(self.dual_coeffs, dtype=float)
        if len(dc) != len(sv):
            raise ValueError("dual_coeffs and support_vectors must align")
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coeffs", dc)


def eval_h(h: Hypersurface, z) -> float:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != h.feature_dim:
        raise ValueError("feature dimension mismatch")
    if len(h.support_vectors) == 0:
        return float(h.bias)
    return float(h.dual_coeffs @ h.kernel(h.support_vectors, z) + h.bias)


def eval_h_batch(h: Hypersurface, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if len(h.support_vectors) == 0:
        return np.full(len(Z), h.bias)
    return h.kernel(Z, h.support_vectors) @ h.dual_coeffs + h.bias


def grad_h(h: Hypersurface, z) -> np.ndarray:
    """Exact gradient of the degree-2 kernel expansion.

    d/dz (k1 + k2 s.z)^2 = 2 k2 (k1 + k2 s.z) s
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != h.feature_dim:
        raise ValueError("feature dimension mismatch")
    if len(h.support_vectors) == 0:
        return np.zeros(h.feature_dim)
    k1, k2 = h.kernel.k1, h.kernel.k2
    inner = h.support_vectors @ z
    w = h.dual_coeffs * 2.0 * k2 * (k1 + k2 * inner)
    return w @ h.support_vectors


def save_model(h: Hypersurface, path) -> None:
    doc = {
        "version": MODEL_VERSION,
        "kernel": {"k1": h.kernel.k1, "k2": h.kernel.k2, "degree": h.kernel.degree},
        "feature_dim": h.feature_dim,
        "support_vectors": h.support_vectors.tolist(),
        "dual_coeffs": h.dual_coeffs.tolist(),
        "bias": h.bias,
    }
    with open(path, "w") as f:
        json.dump(doc, f)


class ModelFormatError(ValueError):
    pass


def load_model(path) -> Hypersurface:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"malformed model file: {e}") from e
    try:
        if doc["version"] != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {doc['version']}")
        kern = KernelParams(
            k1=doc["kernel"]["k1"], k2=doc["kernel"]["k2"], degree=doc["kernel"]["degree"]
        )
        return Hypersurface(
            kernel=kern,
            support_vectors=np.array(doc["support_vectors"], dtype=float),
            dual_coeffs=np.array(doc["dual_coeffs"], dtype=float),
            bias=float(doc["bias"]),
            feature_dim=int(doc["feature_dim"]),
        )
    except KeyError as e:
        raise ModelFormatError(f"model file missing field {e}") from e


# ---------------------------------------------------------------------------
# relative features


def _set_frame(o: Union[MovingDisk, ObstacleSet]):
    if isinstance(o, MovingDisk):
        return o.center, 0.0, o.velocity
    return o.center, o.orientation, o.velocity


def _robot_mirror_signs(obstacle, x_rel: float, y_rel: float):
    """Mirror-canonicalization signs for the robot features.

    A (static) multi-disk group is symmetric under reflection across both
    of its frame axes, so states are folded onto the quadrant with
    non-positive coordinates before classification. Besides reducing the
    sample space, the fold gives the trained surface one-sided slopes on
    the symmetry planes; a symmetric fit would be flat there and the
    learned row would have no steering authority for a head-on approach
    along an axis. A single disk is rotationally symmetric, so its frame
    axes carry no meaning and folding would only add spurious kinks:
    no fold there.
    """
    if isinstance(obstacle, MovingDisk) or len(obstacle.disks) < 2:
        return 1.0, 1.0
    return (-1.0 if x_rel > 0.0 else 1.0, -1.0 if y_rel > 0.0 else 1.0)


def features_from(state: State, obstacle: Union[MovingDisk, ObstacleSet]) -> np.ndarray:
    """Robot features: position relative to the set center, heading, speed.

    Expressed in the set's reference frame (so a trained model transfers to
    any placement of the same set type) and mirror-canonicalized onto the
    non-positive quadrant.
    """
    c, phi, _ = _set_frame(obstacle)
    dx, dy = state.x - c[0], state.y - c[1]
    cph, sph = np.cos(phi), np.sin(phi)
    xr = cph * dx + sph * dy
    yr = -sph * dx + cph * dy
    th = wrap_angle(state.theta - phi)
    sx, sy = _robot_mirror_signs(obstacle, xr, yr)
    if sx < 0.0:
        th = np.pi - th
    if sy < 0.0:
        th = -th
    return np.array([sx * xr, sy * yr, wrap_angle(th), state.v])


def _driving_mirror_sign(lateral: float) -> float:
    """Mirror-canonicalization sign for the driving features.

    The overtake geometry is symmetric about the lane axis, so states are
    reflected onto the half-space with non-positive lateral offset before
    classification. This halves the sample space and, more importantly,
    gives the trained surface a genuine one-sided lateral slope at the
    lane centerline (a symmetric fit would be flat there and could never
    steer the ego out of a head-on approach).
    """
    return -1.0 if lateral > 0.0 else 1.0


def features_driving(state: State, obstacle: Union[MovingDisk, ObstacleSet]) -> np.ndarray:
    """Driving features: other-minus-ego relative position and speed
    (along-lane, lateral) plus the ego heading, mirror-canonicalized
    across the lane axis."""
    c, _, vel = _set_frame(obstacle)
    sgn = _driving_mirror_sign(c[1] - state.y)
    return np.array(
        [
            c[0] - state.x,
            sgn * (c[1] - state.y),
            vel[0] - state.v * np.cos(state.theta),
            sgn * (vel[1] - state.v * np.sin(state.theta)),
            sgn * state.theta,
        ]
    )


def features_for_model(h: Hypersurface, state: State, obstacle) -> np.ndarray:
    if h.feature_dim == FEATURES_ROBOT:
        return features_from(state, obstacle)
    if h.feature_dim == FEATURES_DRIVING:
        return features_driving(state, obstacle)
    raise ValueError(f"no feature family for dimension {h.feature_dim}")


def feature_jacobians(h: Hypersurface, state: State, obstacle):
    """(zdot_drift, zdot_control) for the model's feature family.

    zdot = zdot_drift + zdot_control @ u, with the obstacle moving at
    constant velocity (zero acceleration).
    """
    c, phi, vel = _set_frame(obstacle)
    ct, st = np.cos(state.theta), np.sin(state.theta)
    qx = state.v * ct - vel[0]
    qy = state.v * st - vel[1]
    if h.feature_dim == FEATURES_ROBOT:
        cph, sph = np.cos(phi), np.sin(phi)
        dx, dy = state.x - c[0], state.y - c[1]
        sx, sy = _robot_mirror_signs(obstacle, cph * dx + sph * dy, -sph * dx + cph * dy)
        drift = np.array([sx * (cph * qx + sph * qy), sy * (-sph * qx + cph * qy), 0.0, 0.0])
        control = np.array([[0.0, 0.0], [0.0, 0.0], [sx * sy, 0.0], [0.0, 1.0]])
        return drift, control
    if h.feature_dim == FEATURES_DRIVING:
        sgn = _driving_mirror_sign(c[1] - state.y)
        drift = np.array([-qx, sgn * -qy, 0.0, 0.0, 0.0])
        control = np.array(
            [
                [0.0, 0.0],
                [0.0, 0.0],
                [state.v * st, -ct],
                [sgn * -state.v * ct, sgn * -st],
                [sgn, 0.0],
            ]
        )
        return drift, control
    raise ValueError(f"no feature family for dimension {h.feature_dim}")


# ---------------------------------------------------------------------------
# SMO training


class TrainingError(RuntimeError):
    pass


def train_svm(
    X: np.ndarray,
    y: np.ndarray,
    kernel: KernelParams = KernelParams(),
    C: float = 10.0,
    tol: float = 1e-3,
    max_iter: Optional[int] = None,
    seed: int = 0,
) -> Hypersurface:
    """Soft-margin SVM via SMO with maximal-violating-pair selection.

    Minimizes the dual 0.5 a'Qa - 1'a over 0 <= a <= C, y'a = 0
    (Q_ij = y_i y_j k(x_i, x_j)), updating one violating pair per
    iteration, so the box and equality constraints hold exactly at every
    step. Deterministic; `seed` is accepted for interface stability but
    the pair selection needs no randomness.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if C <= 0.0:
        raise ValueError("C must be positive")
    if len(np.unique(y)) < 2:
        raise TrainingError("training data contains a single class")
    if max_iter is None:
        max_iter = max(100 * n, 10_000)
    K = kernel(X, X)
    Kdiag = np.diag(K).copy()
    alphas = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective
    converged = False
    for _ in range(max_iter):
        # -y*grad is the per-point implied bias; the most violating pair
        # brackets it from the up/low index sets
        yg = -y * grad
        up = ((y > 0) & (alphas < C - 1e-12)) | ((y < 0) & (alphas > 1e-12))
        low = ((y < 0) & (alphas < C - 1e-12)) | ((y > 0) & (alphas > 1e-12))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j_mvp = int(np.argmin(np.where(low, yg, np.inf)))
        if yg[i] - yg[j_mvp] <= tol:
            converged = True
            break
        # second-order selection of the partner (largest decrease of the
        # dual along the pair direction); first-order pairs zigzag badly
        # on this ill-conditioned kernel
        bvec = yg[i] - yg
        avec = np.maximum(K[i, i] + Kdiag - 2.0 * K[i], 1e-12)
        cand = low & (bvec > 0)
        if not cand.any():
            converged = True
            break
        score = np.where(cand, -(bvec * bvec) / avec, np.inf)
        j = int(np.argmin(score))
        eta = max(avec[j], 1e-12)
        t = (yg[i] - yg[j]) / eta
        # keep both multipliers inside [0, C]
        t = min(t, C - alphas[i] if y[i] > 0 else alphas[i])
        t = min(t, alphas[j] if y[j] > 0 else C - alphas[j])
        if t <= 0.0:
            converged = True
            break
        dai = y[i] * t
        daj = -y[j] * t
        alphas[i] += dai
        alphas[j] += daj
        grad += y * (K[:, i] * (y[i] * dai) + K[:, j] * (y[j] * daj))
    if not converged:
        import warnings

        warnings.warn("SMO hit the iteration cap before reaching tolerance")
    yg = -y * grad
    up = ((y > 0) & (alphas < C - 1e-12)) | ((y < 0) & (alphas > 1e-12))
    low = ((y < 0) & (alphas < C - 1e-12)) | ((y > 0) & (alphas > 1e-12))
    hi = np.max(np.where(up, yg, -np.inf)) if up.any() else 0.0
    lo = np.min(np.where(low, yg, np.inf)) if low.any() else 0.0
    b = 0.5 * (hi + lo)

    keep = alphas > 1e-8
    return Hypersurface(
        kernel=kernel,
        support_vectors=X[keep],
        dual_coeffs=alphas[keep] * y[keep],
        bias=float(b),
        feature_dim=X.shape[1],
    )


# ---------------------------------------------------------------------------
# sampling and labeling


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class SamplerConfig:
    radial_range: Tuple[float, float]
    speed_range: Tuple[float, float]
    n_train: int
    n_test: int
    h_t: int = 1
    feature_kind: str = "robot"  # or "driving"
    heading_range: Tuple[float, float] = (-np.pi, np.pi)
    # when set, heading_range is an offset from the bearing toward the set
    # center, concentrating samples on approach courses (useful for trap-like
    # sets where only states heading into the pocket are at risk)
    heading_relative: bool = False
    rel_speed_range: Tuple[float, float] = (-20.0, 0.0)
    balance_target: float = 0.3
    budget_factor: int = 20
    seed: int = 0
    kernel: KernelParams = KernelParams()
    svm_c: float = 1.0
    smo_max_iter: Optional[int] = 60_000
    rollout_speed_target: float = 1.0
    rollout_goal_margin: float = 25.0

    def __post_init__(self):
        if self.h_t < 1:
            raise ValueError("H_t must be at least 1")


@dataclass(frozen=True)
class LabelEnv:
    """Everything the labeling QP needs besides the sample itself."""

    obstacle_set: ObstacleSet
    bounds: ControlBounds
    v_min: float
    v_max: float
    dt: float
    clf_epsilon: float = 10.0
    p0: float = 1.0
    hocbf_gains: Tuple[float, float] = (1.0, 1.0)
    speed_gain: float = 1.0
    feasibility_gain: float = 1.0

    def hocbf_specs(self) -> list:
        return [
            circular_obstacle_hocbf(*self.hocbf_gains),
            speed_floor_hocbf(self.v_min, self.speed_gain),
            speed_ceiling_hocbf(self.v_max, self.speed_gain),
        ]


def _passes_initial_conditions(env: LabelEnv, s: State, h: Optional[Hypersurface]) -> bool:
    spec = circular_obstacle_hocbf(*env.hocbf_gains)
    for d in env.obstacle_set.disks:
        if any(p < 0.0 for p in psi_sequence(spec, s, d)):
            return False
    if h is not None:
        if eval_h(h, features_for_model(h, s, env.obstacle_set)) < 0.0:
            return False
    return True


def _draw_state(cfg: SamplerConfig, env: LabelEnv, rng: np.random.Generator):
    """One raw sample around the unsafe set; returns (state, obstacle_set).

    Driving samples also redraw the obstacle velocity so the relative speed
    covers the configured range.
    """
    disks = env.obstacle_set.disks
    d = disks[rng.integers(len(disks))]
    rad = rng.uniform(*cfg.radial_range)
    ang = rng.uniform(-np.pi, np.pi)
    px = d.center[0] + rad * np.cos(ang)
    py = d.center[1] + rad * np.sin(ang)
    theta = rng.uniform(*cfg.heading_range)
    if cfg.heading_relative:
        cx, cy = env.obstacle_set.center
        theta += np.arctan2(cy - py, cx - px)
    v = rng.uniform(*cfg.speed_range)
    s = State(px, py, wrap_angle(theta), v)
    oset = env.obstacle_set
    if cfg.feature_kind == "driving":
        dvx = rng.uniform(*cfg.rel_speed_range)
        vox = v * np.cos(theta) + dvx
        new = tuple(replace(dd, velocity=(vox, 0.0)) for dd in disks)
        oset = ObstacleSet(disks=new)
    return s, oset


def _label_one_step(env: LabelEnv, s: State, oset: ObstacleSet, h) -> Tuple[int, int]:
    """(label, n_solves) via single-step QP feasibility."""
    from .qp import assemble, check_feasible

    hyps = {} if h is None else {oset.type_id: h}
    prob = assemble(
        s,
        list(oset.disks),
        [],
        env.hocbf_specs(),
        hyps,
        env.bounds,
        p0=env.p0,
        feasibility_gain=env.feasibility_gain,
    )
    return (1 if check_feasible(prob) else -1), 1


def _label_rollout(cfg: SamplerConfig, env: LabelEnv, s: State, oset: ObstacleSet, h):
    """(label, n_solves) via an H_t-step closed-loop rollout.

    The rollout steers toward a goal placed beyond the unsafe set along the
    sample's initial heading, solving the (possibly augmented) QP each step.
    """
    from .qp import assemble, solve

    sys = unicycle_system()
    c = oset.center
    reach = float(np.hypot(s.x - c[0], s.y - c[1])) + cfg.rollout_goal_margin
    goal = (s.x + reach * np.cos(s.theta), s.y + reach * np.sin(s.theta))
    hyps = {} if h is None else {oset.type_id: h}
    specs = env.hocbf_specs()
    state = s
    disks = list(oset.disks)
    solves = 0
    for _ in range(cfg.h_t):
        theta_d = np.arctan2(goal[1] - state.y, goal[0] - state.x)
        clfs = [
            heading_clf(theta_d, env.clf_epsilon),
            speed_clf(cfg.rollout_speed_target, env.clf_epsilon),
        ]
        prob = assemble(
            state,
            disks,
            clfs,
            specs,
            hyps,
            env.bounds,
            p0=env.p0,
            feasibility_gain=env.feasibility_gain,
        )
        sol = solve(prob)
        solves += 1
        if sol.status != "Optimal":
            return -1, solves
        state = step_euler(sys, state, Control(*sol.u_star), env.dt)
        disks = [advance_obstacle(d, env.dt) for d in disks]
    return 1, solves


def sample_and_label(
    cfg: SamplerConfig,
    env: LabelEnv,
    hypersurface: Optional[Hypersurface] = None,
    n_target: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[List[LabeledSample], float]:
    """Draw, filter and label samples; returns (samples, infeasibility_rate).

    Raw samples violating any initial barrier condition (psi_i < 0, or
    H < 0 when a hypersurface is active) are discarded before solving.
    Drawing continues until the minority class reaches the balance target
    or the raw-sample budget is exhausted; the rate counts every QP solve.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    target = n_target if n_target is not None else cfg.n_train + cfg.n_test
    budget = cfg.budget_factor * target
    pos: List[LabeledSample] = []
    neg: List[LabeledSample] = []
    solves = 0
    infeasible = 0
    drawn = 0
    while drawn < budget:
        drawn += 1
        s, oset = _draw_state(cfg, env, rng)
        if not _passes_initial_conditions(env, s, hypersurface):
            continue
        if cfg.h_t == 1:
            label, n = _label_one_step(env, s, oset, hypersurface)
        else:
            label, n = _label_rollout(cfg, env, s, oset, hypersurface)
        solves += n
        if label < 0:
            infeasible += 1
        if cfg.feature_kind == "driving":
            z = features_driving(s, oset)
        else:
            z = features_from(s, oset)
        (pos if label > 0 else neg).append(LabeledSample(features=z, label=label))
        n_min = min(len(pos), len(neg))
        if len(pos) + len(neg) >= target and n_min >= cfg.balance_target * target:
            break
    rate = infeasible / solves if solves else 0.0
    # trim the majority class down to the target size, keeping the minority
    total = pos + neg
    if len(total) > target:
        minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
        keep_min = minority[:target]
        total = keep_min + majority[: target - len(keep_min)]
    idx = rng.permutation(len(total))
    return [total[i] for i in idx], rate


# ---------------------------------------------------------------------------
# feedback training


@dataclass
class IterationStats:
    iteration: int
    infeasibility_rate: float
    classification_accuracy: float
    n_train: int
    n_test: int


@dataclass
class TrainingReport:
    iterations: List[IterationStats] = field(default_factory=list)
    converged: bool = False


def _accuracy(h: Hypersurface, samples: Sequence[LabeledSample]) -> float:
    if not samples:
        return float("nan")
    Z = np.array([s.features for s in samples])
    y = np.array([s.label for s in samples])
    pred = np.where(eval_h_batch(h, Z) >= 0.0, 1, -1)
    return float(np.mean(pred == y))


def feedback_train(
    cfg: SamplerConfig,
    env: LabelEnv,
    epsilon_term: float,
    schedule: Optional[Sequence[Tuple[int, int]]] = None,
    max_iterations: int = 10,
) -> Tuple[Optional[Hypersurface], TrainingReport]:
    """Iterative sample / train / feedback loop.

    Each iteration samples with the current model in the loop (states the
    model already excludes are filtered out), then retrains on all labeled
    data collected so far; the new batch supplies the feedback coverage.
    Terminates when the sampling infeasibility rate drops below
    epsilon_term, or after max_iterations (report flagged unconverged).
    """
    if epsilon_term <= 0.0:
        raise ValueError("termination threshold must be positive")
    report = TrainingReport()
    h: Optional[Hypersurface] = None
    pool: List[LabeledSample] = []
    for it in range(1, max_iterations + 1):
        if schedule is not None:
            n_train, n_test = schedule[min(it - 1, len(schedule) - 1)]
        else:
            n_train, n_test = cfg.n_train, cfg.n_test
        rng = np.random.default_rng(cfg.seed + it)
        samples, rate = sample_and_label(
            cfg, env, hypersurface=h, n_target=n_train + n_test, rng=rng
        )
        train, test = samples[:n_train], samples[n_train : n_train + n_test]
        pool.extend(train)
        if len({s.label for s in pool}) == 2:
            X = np.array([s.features for s in pool])
            y = np.array([s.label for s in pool], dtype=float)
            h = train_svm(
                X, y, kernel=cfg.kernel, C=cfg.svm_c, max_iter=cfg.smo_max_iter, seed=cfg.seed + it
            )
            acc = _accuracy(h, test)
        else:
            # all one class so far: nothing to train on yet
            acc = 1.0 if h is None else _accuracy(h, samples)
        report.iterations.append(
            IterationStats(
                iteration=it,
                infeasibility_rate=rate,
                classification_accuracy=acc,
                n_train=n_train,
                n_test=n_test,
            )
        )
        if rate < epsilon_term:
            report.converged = True
            break
    return h, report


def generalization_test(
    h: Hypersurface,
    cfg: SamplerConfig,
    env: LabelEnv,
    n_samples: int,
) -> Tuple[float, float]:
    """Fraction of outer-range samples with H >= 0 and the augmented-QP
    infeasibility rate over those samples."""
    rng = np.random.default_rng(cfg.seed)
    kept = 0
    nonneg = 0
    infeasible = 0
    while kept < n_samples:
        s, oset = _draw_state(cfg, env, rng)
        if not _passes_initial_conditions(env, s, None):
            continue
        kept += 1
        z = features_for_model(h, s, oset)
        if eval_h(h, z) >= 0.0:
            nonneg += 1
        label, _ = _label_one_step(env, s, oset, h)
        if label < 0:
            infeasible += 1
    if n_samples == 0:
        return float("nan"), float("nan")
    return nonneg / n_samples, infeasible / n_samples
