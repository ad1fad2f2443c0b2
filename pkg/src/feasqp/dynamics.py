"""Unicycle dynamics, disk obstacles and fixed-step integration.

State is (x, y, theta, v) with theta kept in (-pi, pi]. Controls are
(u1, u2) = (turn rate, acceleration). Everything here is a pure function
over small value types.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = -((-a + np.pi) % (2.0 * np.pi) - np.pi)
    return float(w) + 0.0  # avoid -0.0


@dataclass(frozen=True)
class State:
    x: float
    y: float
    theta: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v], dtype=float)

    @staticmethod
    def from_array(a) -> "State":
        return State(float(a[0]), float(a[1]), wrap_angle(float(a[2])), float(a[3]))


@dataclass(frozen=True)
class Control:
    u1: float
    u2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2], dtype=float)


@dataclass(frozen=True)
class ControlBounds:
    u_min: np.ndarray
    u_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u_min", np.asarray(self.u_min, dtype=float))
        object.__setattr__(self, "u_max", np.asarray(self.u_max, dtype=float))
        if not np.all(self.u_min <= self.u_max):
            raise ValueError("u_min must be <= u_max componentwise")


@dataclass(frozen=True)
class StateBounds:
    x_min: np.ndarray
    x_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_min", np.asarray(self.x_min, dtype=float))
        object.__setattr__(self, "x_max", np.asarray(self.x_max, dtype=float))
        if not np.all(self.x_min <= self.x_max):
            raise ValueError("x_min must be <= x_max componentwise")


@dataclass(frozen=True)
class AffineSystem:
    """Control-affine system xdot = f(x) + g(x) u over flat state arrays."""

    drift: Callable[[State], np.ndarray]
    actuation: Callable[[State], np.ndarray]
    n: int
    q: int


def unicycle_system() -> AffineSystem:
    """Unicycle: xdot = v cos th, ydot = v sin th, thdot = u1, vdot = u2."""

    def f(s: State) -> np.ndarray:
        return np.array([s.v * np.cos(s.theta), s.v * np.sin(s.theta), 0.0, 0.0])

    def g(s: State) -> np.ndarray:
        return np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    return AffineSystem(drift=f, actuation=g, n=4, q=2)


def step_euler(sys: AffineSystem, s: State, u: Control, dt: float) -> State:
    """One explicit Euler step with piecewise-constant control."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    xdot = sys.drift(s) + sys.actuation(s) @ u.as_array()
    nxt = s.as_array() + dt * xdot
    if not np.all(np.isfinite(nxt)):
        raise FloatingPointError("state diverged during integration")
    return State.from_array(nxt)


@dataclass(frozen=True)
class MovingDisk:
    """Disk obstacle with constant velocity (zero for static obstacles)."""

    center: tuple
    velocity: tuple
    radius: float
    type_id: int = 0
    set_id: int = 0

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")


def advance_obstacle(o: MovingDisk, dt: float) -> MovingDisk:
    """Translate the disk center by velocity * dt."""
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    cx = o.center[0] + o.velocity[0] * dt
    cy = o.center[1] + o.velocity[1] * dt
    return replace(o, center=(cx, cy))


@dataclass(frozen=True)
class ObstacleSet:
    """One unsafe set: a rigid group of disks sharing a set id.

    The set carries a reference frame used for relative learning features:
    origin at the mean of the disk centers, x axis along the first-to-last
    center direction (identity frame for a single disk).
    """

    disks: tuple

    def __post_init__(self):
        if len(self.disks) == 0:
            raise ValueError("obstacle set needs at least one disk")
        sids = {d.set_id for d in self.disks}
        if len(sids) != 1:
            raise ValueError("all disks of a set must share set_id")

    @property
    def set_id(self) -> int:
        return self.disks[0].set_id

    @property
    def type_id(self) -> int:
        return self.disks[0].type_id

    @property
    def center(self) -> tuple:
        cx = float(np.mean([d.center[0] for d in self.disks]))
        cy = float(np.mean([d.center[1] for d in self.disks]))
        return (cx, cy)

    @property
    def velocity(self) -> tuple:
        return self.disks[0].velocity

    @property
    def orientation(self) -> float:
        if len(self.disks) < 2:
            return 0.0
        dx = self.disks[-1].center[0] - self.disks[0].center[0]
        dy = self.disks[-1].center[1] - self.disks[0].center[1]
        return float(np.arctan2(dy, dx))


def group_obstacles(disks) -> list:
    """Group disks into ObstacleSets by set_id, preserving first-seen order."""
    order = []
    by_id = {}
    for d in disks:
        if d.set_id not in by_id:
            by_id[d.set_id] = []
            order.append(d.set_id)
        by_id[d.set_id].append(d)
    return [ObstacleSet(disks=tuple(by_id[sid])) for sid in order]
