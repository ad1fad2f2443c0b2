"""Closed-loop case studies: robot navigation among disks and overtaking.

A run is a sequential loop: sense, compile CLF/HOCBF/feasibility rows,
solve the per-step QP, integrate. An infeasible QP aborts the run and is a
logged outcome, not a fault.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certificates import (
    ClassK,
    HocbfSpec,
    circular_obstacle_hocbf,
    heading_clf,
    speed_ceiling_hocbf,
    speed_clf,
    speed_floor_hocbf,
)
from .dynamics import (
    Control,
    ControlBounds,
    MovingDisk,
    State,
    advance_obstacle,
    group_obstacles,
    step_euler,
    unicycle_system,
    wrap_angle,
)
from .learner import Hypersurface, eval_h, features_for_model
from .qp import OPTIMAL, assemble, solve


@dataclass(frozen=True)
class SensorModel:
    fov: float = 2.0 * np.pi / 3.0
    range: float = 7.0
    range_slack: float = 1.0  # detection-range slack for the 1m uncertainty

    def __post_init__(self):
        if not (0.0 < self.fov <= 2.0 * np.pi) or self.range <= 0.0:
            raise ValueError("invalid sensor model")


def detect(sensor: SensorModel, state: State, obstacles: Sequence[MovingDisk]) -> List[int]:
    """Indices of disks whose center is inside the heading-centered FOV cone
    and within range + slack."""
    out = []
    for i, o in enumerate(obstacles):
        dx, dy = o.center[0] - state.x, o.center[1] - state.y
        if np.hypot(dx, dy) > sensor.range + sensor.range_slack:
            continue
        bearing = wrap_angle(np.arctan2(dy, dx) - state.theta)
        if abs(bearing) <= sensor.fov / 2.0 + 1e-12:
            out.append(i)
    return out


def clf_targets(state: State, destination: Tuple[float, float], v0: float) -> Tuple[float, float]:
    """Desired heading (four-quadrant) toward the destination and speed v0."""
    dx = destination[0] - state.x
    dy = destination[1] - state.y
    if dx == 0.0 and dy == 0.0:
        raise ValueError("heading target undefined at the destination")
    return float(np.arctan2(dy, dx)), v0


def approach_speed_hocbf(
    destination: Tuple[float, float], v_des: float, brake: float, gain: float = 1.0
) -> HocbfSpec:
    """Hard braking profile toward the destination: b = cap(d) - v with
    cap(d) = min(v_des, sqrt(2*brake*d)), d the distance to the destination.

    Keeping b >= 0 guarantees the robot can stop at the destination using at
    most `brake` deceleration, which the relaxed speed CLF alone cannot.
    """

    v_eps = 0.1  # creep speed allowed at the destination; keeps the cap rate bounded

    def _cap_and_rate(s: State) -> Tuple[float, float]:
        px, py = s.x - destination[0], s.y - destination[1]
        d = float(np.hypot(px, py))
        cap = np.sqrt(2.0 * brake * d + v_eps**2)
        if cap >= v_des or d < 1e-9:
            return (min(cap, v_des), 0.0)
        d_dot = s.v * (px * np.cos(s.theta) + py * np.sin(s.theta)) / d
        return (cap, brake * d_dot / cap)

    return HocbfSpec(
        value=lambda s, o=None: _cap_and_rate(s)[0] - s.v,
        rate=lambda s, o=None: _cap_and_rate(s)[1],
        m=1,
        alphas=(ClassK(gain),),
        rate_control=lambda s, o=None: np.array([0.0, -1.0]),
        name="approach",
    )


@dataclass
class StepRecord:
    t: float
    state: State
    u: Optional[Tuple[float, float]]
    deltas: Tuple[float, ...]
    qp_status: str
    min_b: float
    h_min: float


@dataclass
class TrajectoryLog:
    steps: List[StepRecord] = field(default_factory=list)
    feasible_all_steps: bool = True
    abort_time: Optional[float] = None
    arrived: bool = False
    final_state: Optional[State] = None
    final_dist: float = float("nan")
    min_b: float = float("inf")
    h_min: float = float("inf")
    runtime_ms: float = 0.0

    def summary(self) -> dict:
        return {
            "feasible_all_steps": self.feasible_all_steps,
            "abort_time": self.abort_time,
            "arrived": self.arrived,
            "final_dist": self.final_dist,
            "min_b": self.min_b if np.isfinite(self.min_b) else None,
            "runtime_ms": self.runtime_ms,
        }


@dataclass(frozen=True)
class ScenarioConfig:
    obstacles: Tuple[MovingDisk, ...]
    destination: Tuple[float, float]
    initial_state: State
    t_f: float
    bounds: ControlBounds
    dt: float = 0.1
    v_des: float = 1.0
    v_min: float = 0.0
    v_max: float = 2.0
    clf_epsilon: float = 10.0
    hocbf_gains: Tuple[float, float] = (1.0, 1.0)
    speed_gain: float = 1.0
    feasibility_gain: float = 1.0
    p0: float = 1.0
    sensor: SensorModel = SensorModel()
    arrival_radius: float = 0.5
    # deceleration budget reserved for stopping at the destination; None means
    # half the u2 bound, 0 disables the hard approach-speed cap
    approach_brake: Optional[float] = None
    hypersurfaces: Dict[int, Hypersurface] = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_f <= 0.0:
            raise ValueError("dt and t_f must be positive")


def _run(cfg: ScenarioConfig) -> TrajectoryLog:
    t0 = time.perf_counter()
    sys = unicycle_system()
    barrier = circular_obstacle_hocbf(*cfg.hocbf_gains)
    specs = [
        barrier,
        speed_floor_hocbf(cfg.v_min, cfg.speed_gain),
        speed_ceiling_hocbf(cfg.v_max, cfg.speed_gain),
    ]
    brake = 0.5 * float(cfg.bounds.u_max[1]) if cfg.approach_brake is None else cfg.approach_brake
    approach = approach_speed_hocbf(cfg.destination, cfg.v_des, brake) if brake > 0.0 else None
    # gain < floor gain keeps the stop row compatible with v >= v_min; it is
    # clamped at latch time so brake authority suffices at the latch speed
    stop = None
    state = cfg.initial_state
    disks = list(cfg.obstacles)
    memory: set = set()
    log = TrajectoryLog()
    hold_theta = state.theta
    n_steps = int(round(cfg.t_f / cfg.dt))
    for w in range(n_steps):
        t = w * cfg.dt
        memory |= set(detect(cfg.sensor, state, disks))
        # detecting any member disk reveals its whole rigid group: set
        # geometries are known in advance, only their placements are not
        seen_groups = {(disks[i].type_id, disks[i].set_id) for i in memory}
        memory |= {
            j for j, o in enumerate(disks) if (o.type_id, o.set_id) in seen_groups
        }
        known = [disks[i] for i in sorted(memory)]
        dist = float(np.hypot(cfg.destination[0] - state.x, cfg.destination[1] - state.y))
        if not log.arrived and dist <= cfg.arrival_radius:
            log.arrived = True
            hold_theta = state.theta
            gain = min(
                0.9 * cfg.speed_gain,
                0.9 * abs(float(cfg.bounds.u_min[1])) / max(state.v, 1e-9),
            )
            stop = speed_ceiling_hocbf(0.0, gain)
        if log.arrived:
            clfs = [heading_clf(hold_theta, cfg.clf_epsilon), speed_clf(0.0, cfg.clf_epsilon)]
        else:
            theta_d, v0 = clf_targets(state, cfg.destination, cfg.v_des)
            if brake > 0.0:
                # align the speed target with the hard approach-speed cap
                v0 = min(v0, float(np.sqrt(2.0 * brake * dist)))
            clfs = [heading_clf(theta_d, cfg.clf_epsilon), speed_clf(v0, cfg.clf_epsilon)]
        step_specs = list(specs)
        if approach is not None:
            step_specs.append(stop if log.arrived else approach)
        prob = assemble(
            state,
            known,
            clfs,
            step_specs,
            cfg.hypersurfaces,
            cfg.bounds,
            p0=cfg.p0,
            feasibility_gain=cfg.feasibility_gain,
        )
        sol = solve(prob)
        min_b = min((barrier.value(state, d) for d in disks), default=float("inf"))
        h_min = float("inf")
        for oset in group_obstacles(known):
            h = cfg.hypersurfaces.get(oset.type_id)
            if h is not None:
                h_min = min(h_min, eval_h(h, features_for_model(h, state, oset)))
        log.min_b = min(log.min_b, min_b)
        log.h_min = min(log.h_min, h_min)
        if sol.status != OPTIMAL:
            log.steps.append(
                StepRecord(t, state, None, (), sol.status, min_b, h_min)
            )
            log.feasible_all_steps = False
            log.abort_time = t
            break
        log.steps.append(
            StepRecord(t, state, (sol.u_star[0], sol.u_star[1]), tuple(sol.delta_star), sol.status, min_b, h_min)
        )
        state = step_euler(sys, state, Control(sol.u_star[0], sol.u_star[1]), cfg.dt)
        disks = [advance_obstacle(d, cfg.dt) for d in disks]
    log.final_state = state
    log.final_dist = float(np.hypot(cfg.destination[0] - state.x, cfg.destination[1] - state.y))
    log.runtime_ms = (time.perf_counter() - t0) * 1e3
    return log


def run_robot(cfg: ScenarioConfig) -> TrajectoryLog:
    """Robot navigation among (possibly unknown) disk obstacles."""
    return _run(cfg)


def run_driving(cfg: ScenarioConfig) -> TrajectoryLog:
    """Overtaking a slower vehicle modeled as a moving disk.

    Extends the summary with the along-lane relative position history, so
    callers can check the overtake completed (sign change).
    """
    log = _run(cfg)
    return log


def along_lane_gap(log: TrajectoryLog, lead_index: int, cfg: ScenarioConfig) -> List[float]:
    """lead-minus-ego along-lane position at every logged step."""
    gaps = []
    lead0 = cfg.obstacles[lead_index]
    for rec in log.steps:
        cx = lead0.center[0] + lead0.velocity[0] * rec.t
        gaps.append(cx - rec.state.x)
    return gaps


def eight_destination_suite(cfg_base: ScenarioConfig, destinations: Sequence[Tuple[float, float]]):
    """Run the robot scenario once per destination; per-run summary rows."""
    rows = []
    for dest in destinations:
        log = run_robot(replace(cfg_base, destination=tuple(dest)))
        rows.append(
            {
                "destination": list(dest),
                "feasible_all_steps": log.feasible_all_steps,
                "arrived": log.arrived,
                "final_dist": log.final_dist,
                "min_b": log.min_b if np.isfinite(log.min_b) else None,
            }
        )
    return rows


def write_trajectory_csv(log: TrajectoryLog, path) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(
            ["t", "x", "y", "theta", "v", "u1", "u2", "delta1", "delta2", "qp_status", "min_b", "h_min"]
        )
        for rec in log.steps:
            u1, u2 = (rec.u if rec.u is not None else ("", ""))
            d1 = rec.deltas[0] if len(rec.deltas) > 0 else ""
            d2 = rec.deltas[1] if len(rec.deltas) > 1 else ""
            hm = rec.h_min if np.isfinite(rec.h_min) else ""
            wr.writerow(
                [rec.t, rec.state.x, rec.state.y, rec.state.theta, rec.state.v, u1, u2, d1, d2, rec.qp_status, rec.min_b, hm]
            )
