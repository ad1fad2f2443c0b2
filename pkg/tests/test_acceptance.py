"""End-to-end acceptance suite.

Each test covers one numbered criterion and always emits a single
``criterion NN [PASS|FAIL]`` line, bypassing output capture, so a full run
yields one verdict line per criterion.
"""

import functools
import json
import sys
import time
from dataclasses import replace

import numpy as np

from feasqp.certificates import circular_obstacle_hocbf
from feasqp.cli import main as cli_main
from feasqp.dynamics import Control, ControlBounds, MovingDisk, ObstacleSet, State
from feasqp.learner import (
    KernelParams,
    eval_h,
    eval_h_batch,
    features_for_model,
    generalization_test,
    grad_h,
    train_svm,
)
from feasqp.qp import KKT_TOL, OPTIMAL, solve
from feasqp.scenarios import (
    ScenarioConfig,
    SensorModel,
    along_lane_gap,
    run_driving,
    run_robot,
)
from test_qp import _grid_oracle, _random_problem

from conftest import IRREGULAR_DISKS, REGULAR_DISK, ROBOT_BOUNDS


def criterion(num, desc):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                _emit(num, desc, ok=False)
                raise
            _emit(num, desc, ok=True)

        return wrapper

    return deco


def _emit(num, desc, ok):
    print(
        f"criterion {num:02d} [{'PASS' if ok else 'FAIL'}] {desc}",
        file=sys.__stdout__,
        flush=True,
    )


# ---------------------------------------------------------------------------
# shared scenario helpers

ROBOT_SENSOR = SensorModel(range=13.0, range_slack=1.0)
FIG3_OBSTACLES = tuple(
    MovingDisk(c, (0.0, 0.0), 7.0, type_id=0, set_id=i)
    for i, c in enumerate([(32.0, 25.0), (20.0, 35.0), (30.0, 10.0)])
)
EIGHT_DESTINATIONS = [
    (40.0, 35.0),
    (45.0, 25.0),
    (40.0, 10.0),
    (35.0, 45.0),
    (25.0, 45.0),
    (45.0, 15.0),
    (48.0, 30.0),
    (30.0, 48.0),
]


def _robot_cfg(**over):
    defaults = dict(
        obstacles=FIG3_OBSTACLES,
        destination=(40.0, 35.0),
        initial_state=State(0.0, 0.0, 0.0, 1.0),
        t_f=70.0,
        bounds=ROBOT_BOUNDS,
        v_des=2.0,
        v_max=2.0,
        sensor=ROBOT_SENSOR,
    )
    defaults.update(over)
    return ScenarioConfig(**defaults)


def _random_single_disk_run(rng, hypersurfaces):
    """One seeded navigation task with a random disk near the path."""
    ang = rng.uniform(-np.pi, np.pi)
    dest = (30.0 * np.cos(ang), 30.0 * np.sin(ang))
    along = rng.uniform(0.35, 0.65)
    off = rng.uniform(-4.0, 4.0)
    nx, ny = -np.sin(ang), np.cos(ang)
    disk = MovingDisk(
        (dest[0] * along + off * nx, dest[1] * along + off * ny),
        (0.0, 0.0),
        7.0,
        type_id=0,
        set_id=0,
    )
    cfg = _robot_cfg(
        obstacles=(disk,),
        destination=dest,
        initial_state=State(0.0, 0.0, ang, 1.0),
        t_f=40.0,
        v_des=float(rng.uniform(1.0, 2.0)),
        hypersurfaces=hypersurfaces,
    )
    return cfg, disk


@criterion(1, "QP verdicts and objectives match the brute-force grid oracle")
def test_criterion_01_qp_oracle_equivalence():
    rng = np.random.default_rng(0)
    t_solve = 0.0
    checked = 0
    while checked < 1000:
        p = _random_problem(rng)
        feas_oracle, obj_oracle, margin = _grid_oracle(p)
        if -1e-4 < margin < 1e-4:
            continue  # boundary case the finite grid cannot adjudicate
        t0 = time.perf_counter()
        sol = solve(p)
        t_solve += time.perf_counter() - t0
        assert (sol.status == OPTIMAL) == feas_oracle
        if feas_oracle and obj_oracle is not None:
            assert abs(sol.objective - obj_oracle) <= 1e-4
        checked += 1
    assert t_solve < 10.0


@criterion(2, "KKT residuals at most 1e-6 on every optimal solve")
def test_criterion_02_kkt_residuals():
    rng = np.random.default_rng(2)
    seen = 0
    while seen < 500:
        sol = solve(_random_problem(rng))
        if sol.status != OPTIMAL:
            continue
        assert sol.kkt_residual <= KKT_TOL
        seen += 1


@criterion(3, "analytic obstacle Lie derivatives match finite differences")
def test_criterion_03_lie_derivatives():
    from test_certificates import _fd_rates

    rng = np.random.default_rng(3)
    spec = circular_obstacle_hocbf(1.0, 1.0)
    o = MovingDisk((0.0, 0.0), (0.0, 0.0), 1.0)
    checked = 0
    while checked < 1000:
        s = State(
            rng.uniform(-20, 20),
            rng.uniform(-20, 20),
            rng.uniform(-np.pi, np.pi),
            rng.uniform(0.1, 2.0),
        )
        if np.hypot(s.x, s.y) < 2.0:
            continue
        u = Control(rng.uniform(-0.2, 0.2), rng.uniform(-0.5, 0.5))
        bd_fd, bdd_fd = _fd_rates(spec, s, o, u, dt=1e-4)
        assert abs(spec.rate(s, o) - bd_fd) <= 1e-3
        bdd = spec.accel_drift(s, o) + spec.accel_control(s, o) @ [u.u1, u.u2]
        assert abs(bdd - bdd_fd) <= 1e-3
        checked += 1


@criterion(4, "forward invariance: feasible runs keep every barrier nonnegative")
def test_criterion_04_forward_invariance():
    rng = np.random.default_rng(44)
    feasible_runs = 0
    for _ in range(100):
        cfg, _ = _random_single_disk_run(rng, hypersurfaces={})
        log = run_robot(cfg)
        if log.feasible_all_steps:
            feasible_runs += 1
            assert log.min_b >= -1e-6
    assert feasible_runs >= 50  # enough non-vacuous cases


@criterion(5, "baseline three-obstacle run aborts infeasible without a model")
def test_criterion_05_baseline_infeasibility():
    t0 = time.perf_counter()
    log = run_robot(_robot_cfg())
    elapsed = time.perf_counter() - t0
    assert not log.feasible_all_steps
    assert log.abort_time is not None
    assert elapsed < 5.0


@criterion(6, "feedback training cuts the infeasibility rate at least 5x")
def test_criterion_06_feedback_training_trend(regular_training):
    _, report, _, _, elapsed = regular_training
    rates = [it.infeasibility_rate for it in report.iterations]
    accs = [it.classification_accuracy for it in report.iterations]
    assert len(rates) == 3
    assert rates[0] / max(rates[2], 1e-12) >= 5.0
    assert accs[2] >= 0.90
    assert elapsed < 600.0


@criterion(7, "trained surface generalizes to the outer radius band")
def test_criterion_07_generalization(regular_training):
    h, _, cfg, env, _ = regular_training
    outer = replace(cfg, radial_range=(13.0, 32.0), seed=123)
    fraction, rate = generalization_test(h, outer, env, 20_000)
    assert fraction >= 0.99
    assert rate <= 0.001


@criterion(8, "all eight destination runs stay feasible and arrive")
def test_criterion_08_eight_destinations(regular_model):
    for dest in EIGHT_DESTINATIONS:
        cfg = _robot_cfg(destination=dest, hypersurfaces={0: regular_model})
        log = run_robot(cfg)
        assert log.feasible_all_steps, dest
        assert log.final_dist <= 1.5, dest
        for rec in log.steps:
            if rec.u is None:
                continue
            assert ROBOT_BOUNDS.u_min[0] - 1e-9 <= rec.u[0] <= ROBOT_BOUNDS.u_max[0] + 1e-9
            assert ROBOT_BOUNDS.u_min[1] - 1e-9 <= rec.u[1] <= ROBOT_BOUNDS.u_max[1] + 1e-9


@criterion(9, "irregular training rate decreases and trap runs reach the goal")
def test_criterion_09_irregular_trap(irregular_training):
    h, report, _, _, _ = irregular_training
    rates = [it.infeasibility_rate for it in report.iterations]
    assert len(rates) == 3
    assert rates[0] > rates[1] > rates[2]
    cases = [
        (State(0.0, 25.0, 0.0, 1.0), (48.0, 20.0)),
        (State(11.5, 49.5, -1.047, 1.0), (37.5, 4.4)),
    ]
    for start, dest in cases:
        base = run_robot(
            _robot_cfg(obstacles=IRREGULAR_DISKS, destination=dest, initial_state=start)
        )
        assert not base.feasible_all_steps, dest
        cfg = _robot_cfg(
            obstacles=IRREGULAR_DISKS,
            destination=dest,
            initial_state=start,
            feasibility_gain=0.4,
            hypersurfaces={1: h},
        )
        log = run_robot(cfg)
        assert log.feasible_all_steps, dest
        assert log.arrived, dest


def _driving_cfg(hypersurfaces):
    return ScenarioConfig(
        obstacles=(MovingDisk((60.0, 0.0), (16.0, 0.0), 7.0, type_id=2, set_id=0),),
        destination=(500.0, 0.0),
        initial_state=State(0.0, 0.0, 0.0, 28.0),
        t_f=10.0,
        bounds=ROBOT_BOUNDS,
        v_des=28.0,
        v_max=28.0,
        sensor=SensorModel(range=200.0),
        approach_brake=0.0,
        feasibility_gain=0.8,
        hypersurfaces=hypersurfaces,
    )


@criterion(10, "overtake of the slower vehicle succeeds only with the model")
def test_criterion_10_driving_overtake(driving_model):
    cfg = _driving_cfg({2: driving_model})
    log = run_driving(cfg)
    assert log.feasible_all_steps
    gaps = along_lane_gap(log, 0, cfg)
    assert gaps[0] > 0.0 > gaps[-1]  # along-lane relative position flips sign
    baseline = run_driving(_driving_cfg({}))
    assert not baseline.feasible_all_steps


@criterion(11, "SVM duals, separable toy accuracy, and analytic gradient")
def test_criterion_11_svm_correctness(regular_model, irregular_model, driving_model):
    for h, c in ((regular_model, 1.0), (irregular_model, 1.0), (driving_model, 10.0)):
        assert np.all(np.abs(h.dual_coeffs) <= c + 1e-9)
        assert abs(np.sum(h.dual_coeffs)) <= 1e-6
    # ring-separable set: only a quadratic surface classifies it
    rng = np.random.default_rng(11)
    inner = rng.normal(size=(60, 3)) * 0.3
    outer = rng.normal(size=(60, 3))
    outer *= (2.5 / np.linalg.norm(outer, axis=1))[:, None]
    X = np.vstack([inner, outer])
    y = np.array([1.0] * 60 + [-1.0] * 60)
    toy = train_svm(X, y, kernel=KernelParams(), C=100.0)
    assert np.all(np.sign(eval_h_batch(toy, X)) == y)
    # analytic gradient vs central differences
    for _ in range(50):
        z = rng.normal(size=3)
        g = grad_h(toy, z)
        fd = np.zeros(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            fd[j] = (eval_h(toy, z + e) - eval_h(toy, z - e)) / 2e-6
        assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(fd), 1.0)


@criterion(12, "feasibility forward invariance: H stays nonnegative on feasible runs")
def test_criterion_12_feasibility_invariance(regular_model):
    rng = np.random.default_rng(12)
    qualifying = 0
    for _ in range(100):
        cfg, disk = _random_single_disk_run(rng, hypersurfaces={0: regular_model})
        z0 = features_for_model(regular_model, cfg.initial_state, ObstacleSet((disk,)))
        if eval_h(regular_model, z0) < 0.0:
            continue
        log = run_robot(cfg)
        if not log.feasible_all_steps or not np.isfinite(log.h_min):
            continue
        qualifying += 1
        assert log.h_min >= -1e-6
    assert qualifying >= 50


@criterion(13, "identical seed and config reproduce byte-identical outputs")
def test_criterion_13_cli_determinism(tmp_path):
    cfg = {
        "bounds": {"u_min": [-0.2, -0.5], "u_max": [0.2, 0.5]},
        "kernel": {"k1": 0.9, "k2": 0.4},
        "obstacles": [{"center": [20.0, 35.0], "radius": 7.0, "type_id": 0, "set_id": 0}],
        "dynamics": {"v_min": 0.0, "v_max": 2.0, "dt": 0.1},
        "sampler": {
            "radial_range": [7.0, 13.0],
            "speed_range": [0.0, 2.0],
            "n_train": 80,
            "n_test": 40,
        },
        "train": {"max_iterations": 1},
        "scenario": {
            "kind": "robot",
            "destination": [40.0, 35.0],
            "initial_state": [0.0, 0.0, 0.0, 1.0],
            "t_f": 10.0,
            "sensor": {"range": 13.0, "range_slack": 1.0},
        },
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outputs = {"train": ["model.json", "report.json"], "simulate": ["trajectory.csv", "summary.json"]}
    for command, artifacts in outputs.items():
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{command}_{tag}"
            rc = cli_main([command, "--config", str(cfg_path), "--seed", "9", "--out", str(out)])
            assert rc == 0
            blobs.append([(out / a).read_bytes() for a in artifacts])
        assert blobs[0] == blobs[1]
