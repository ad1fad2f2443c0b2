"""Compilation of HOCBF / CLF / learned-feasibility constraints to linear rows.

Each constraint becomes a LinearRow over the decision variables (u, delta).
The circular-obstacle barrier uses hard-coded analytic first and second time
derivatives of the center distance (obstacle velocity constant, acceleration
zero), so row assembly is exact and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .dynamics import Control, MovingDisk, ObstacleSet, State, wrap_angle

GE = ">="
LE = "<="

# A feasibility row whose control coefficients all fall below this is
# degenerate and gets dropped (the learned constraint has lost its
# relative degree at that state).
DEGENERATE_ROW_TOL = 1e-9


@dataclass(frozen=True)
class ClassK:
    """Linear class-K function alpha(s) = gain * s.

    With extended=True the function is accepted on negative arguments
    (extended class K), otherwise callers should only feed s >= 0.
    """

    gain: float = 1.0
    extended: bool = False

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError("class-K gain must be positive")

    def __call__(self, s: float) -> float:
        return self.gain * s


@dataclass(frozen=True)
class LinearRow:
    """One scalar inequality, linear in (u, delta).

    sense GE means coeff_u . u + coeff_delta * delta_k >= rhs_shift,
    where rhs_shift is folded into `rhs`. delta_index < 0 means the row
    touches no relaxation variable.
    """

    coeff_u: np.ndarray
    rhs: float
    sense: str = GE
    coeff_delta: float = 0.0
    delta_index: int = -1
    tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coeff_u", np.asarray(self.coeff_u, dtype=float))
        if not np.all(np.isfinite(self.coeff_u)) or not np.isfinite(self.rhs):
            raise ValueError("row coefficients must be finite")


@dataclass(frozen=True)
class HocbfSpec:
    """Barrier b with analytic derivatives along the dynamics.

    value/rate take (state, disk); rate is the drift part of bdot (the
    control never appears before order m). For m == 2, accel_drift and
    accel_control give bddot = accel_drift + accel_control . u.
    For m == 1, rate_control gives bdot = rate + rate_control . u.
    """

    value: Callable
    rate: Callable
    m: int
    alphas: tuple
    rate_control: Optional[Callable] = None
    accel_drift: Optional[Callable] = None
    accel_control: Optional[Callable] = None
    name: str = "hocbf"

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ValueError("relative degree must be 1 or 2")
        if len(self.alphas) != self.m:
            raise ValueError("need exactly m class-K functions")


def _rel_kinematics(s: State, o: MovingDisk):
    """Relative position/velocity of the robot w.r.t. a moving disk."""
    px = s.x - o.center[0]
    py = s.y - o.center[1]
    qx = s.v * np.cos(s.theta) - o.velocity[0]
    qy = s.v * np.sin(s.theta) - o.velocity[1]
    return px, py, qx, qy


def circular_obstacle_hocbf(gain1: float = 1.0, gain2: float = 1.0) -> HocbfSpec:
    """b = ||p - c|| - r for a (possibly moving) disk, relative degree 2.

    With p the robot position, c the disk center and d = ||p - c||:
        bdot  = (p-c).(pdot-cdot) / d
        bddot = (|q|^2 + (p-c).qdot)/d - bdot^2/d,  q = pdot - cdot
    qdot splits into a drift part (zero: v, theta constant without control)
    and the control part u2*(dx cos + dy sin)/d + u1*v*(dy cos - dx sin)/d.
    """

    def value(s: State, o: MovingDisk) -> float:
        px, py, _, _ = _rel_kinematics(s, o)
        return float(np.hypot(px, py) - o.radius)

    def rate(s: State, o: MovingDisk) -> float:
        px, py, qx, qy = _rel_kinematics(s, o)
        d = np.hypot(px, py)
        if d == 0.0:
            raise ZeroDivisionError("barrier undefined at the disk center")
        return float((px * qx + py * qy) / d)

    def accel_drift(s: State, o: MovingDisk) -> float:
        px, py, qx, qy = _rel_kinematics(s, o)
        d = np.hypot(px, py)
        if d == 0.0:
            raise ZeroDivisionError("barrier undefined at the disk center")
        bd = (px * qx + py * qy) / d
        return float((qx * qx + qy * qy) / d - bd * bd / d)

    def accel_control(s: State, o: MovingDisk) -> np.ndarray:
        px, py, _, _ = _rel_kinematics(s, o)
        d = np.hypot(px, py)
        if d == 0.0:
            raise ZeroDivisionError("barrier undefined at the disk center")
        c_u1 = s.v * (py * np.cos(s.theta) - px * np.sin(s.theta)) / d
        c_u2 = (px * np.cos(s.theta) + py * np.sin(s.theta)) / d
        return np.array([c_u1, c_u2])

    return HocbfSpec(
        value=value,
        rate=rate,
        m=2,
        alphas=(ClassK(gain1), ClassK(gain2)),
        accel_drift=accel_drift,
        accel_control=accel_control,
        name="disk",
    )


def speed_floor_hocbf(v_min: float, gain: float = 1.0) -> HocbfSpec:
    """b = v - v_min, relative degree 1 (bdot = u2)."""
    return HocbfSpec(
        value=lambda s, o=None: s.v - v_min,
        rate=lambda s, o=None: 0.0,
        m=1,
        alphas=(ClassK(gain),),
        rate_control=lambda s, o=None: np.array([0.0, 1.0]),
        name="v_min",
    )


def speed_ceiling_hocbf(v_max: float, gain: float = 1.0) -> HocbfSpec:
    """b = v_max - v, relative degree 1 (bdot = -u2)."""
    return HocbfSpec(
        value=lambda s, o=None: v_max - s.v,
        rate=lambda s, o=None: 0.0,
        m=1,
        alphas=(ClassK(gain),),
        rate_control=lambda s, o=None: np.array([0.0, -1.0]),
        name="v_max",
    )


def psi_sequence(spec: HocbfSpec, s: State, o: Optional[MovingDisk] = None) -> list:
    """psi_0 = b and psi_i = psidot_{i-1} + alpha_i(psi_{i-1}) for i < m.

    Only the control-free part is evaluated, which is exact for i < m
    because the control cannot appear before the m-th derivative.
    """
    psis = [float(spec.value(s, o))]
    if spec.m == 2:
        psis.append(float(spec.rate(s, o)) + spec.alphas[0](psis[0]))
    return psis


def hocbf_row(spec: HocbfSpec, s: State, o: Optional[MovingDisk] = None) -> LinearRow:
    """Compile the order-m barrier condition into a >= row over u.

    m=1:  rate_control.u + rate + alpha_1(b) >= 0
    m=2:  accel_control.u + accel_drift + a1*bdot + alpha_2(bdot + a1*b) >= 0
    (linear class-K, so the cross term O(b) is just a1 * bdot).
    """
    b = float(spec.value(s, o))
    if spec.m == 1:
        const = float(spec.rate(s, o)) + spec.alphas[0](b)
        coeff = spec.rate_control(s, o)
    else:
        bdot = float(spec.rate(s, o))
        psi1 = bdot + spec.alphas[0](b)
        const = float(spec.accel_drift(s, o)) + spec.alphas[0].gain * bdot + spec.alphas[1](psi1)
        coeff = spec.accel_control(s, o)
    return LinearRow(coeff_u=coeff, rhs=-const, sense=GE, tag=spec.name)


@dataclass(frozen=True)
class ClfSpec:
    """Quadratic Lyapunov certificate with analytic Lie derivatives.

    value(s) >= 0 vanishes at the target; lie_f(s) and lie_g(s) are the
    drift and control parts of Vdot. epsilon is the exponential decay rate.
    """

    value: Callable[[State], float]
    lie_f: Callable[[State], float]
    lie_g: Callable[[State], np.ndarray]
    epsilon: float
    name: str = "clf"

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("CLF decay rate must be positive")


def heading_clf(theta_d: float, epsilon: float) -> ClfSpec:
    """V = (theta - theta_d)^2 with the error wrapped to (-pi, pi]."""

    def err(s: State) -> float:
        return wrap_angle(s.theta - theta_d)

    return ClfSpec(
        value=lambda s: err(s) ** 2,
        lie_f=lambda s: 0.0,
        lie_g=lambda s: np.array([2.0 * err(s), 0.0]),
        epsilon=epsilon,
        name="heading",
    )


def speed_clf(v_target: float, epsilon: float) -> ClfSpec:
    """V = (v - v_target)^2."""
    return ClfSpec(
        value=lambda s: (s.v - v_target) ** 2,
        lie_f=lambda s: 0.0,
        lie_g=lambda s: np.array([0.0, 2.0 * (s.v - v_target)]),
        epsilon=epsilon,
        name="speed",
    )


def clf_row(spec: ClfSpec, s: State, delta_index: int = 0) -> LinearRow:
    """LfV + LgV.u + eps*V <= delta, compiled as a <= row with delta coeff -1."""
    const = float(spec.lie_f(s)) + spec.epsilon * float(spec.value(s))
    return LinearRow(
        coeff_u=spec.lie_g(s),
        rhs=-const,
        sense=LE,
        coeff_delta=-1.0,
        delta_index=delta_index,
        tag=spec.name,
    )


def feasibility_row(
    h,
    s: State,
    o: Union[MovingDisk, ObstacleSet],
    alpha: ClassK = ClassK(1.0, extended=True),
) -> Optional[LinearRow]:
    """Hdot(z) + alpha(H(z)) >= 0 for a trained hypersurface (relative degree 1).

    z follows the model's feature family (4-D robot, 5-D driving); zdot is
    assembled from the robot dynamics minus the obstacle's constant velocity.
    Returns None when the control coefficients are all ~0 (degenerate row).
    """
    from .learner import eval_h, feature_jacobians, features_for_model, grad_h

    z = features_for_model(h, s, o)
    zdot_drift, zdot_control = feature_jacobians(h, s, o)
    g = grad_h(h, z)
    coeff = g @ zdot_control
    if np.max(np.abs(coeff)) < DEGENERATE_ROW_TOL:
        return None
    const = float(g @ zdot_drift) + alpha(float(eval_h(h, z)))
    return LinearRow(coeff_u=coeff, rhs=-const, sense=GE, tag="feasibility")
