"""Shared fixtures: trained feasibility models for the scenario suites.

Training is deterministic (seeded) but takes minutes, so the models are
session-scoped and only built when a test actually requests them.
"""

import time
import warnings

import pytest

from feasqp.dynamics import ControlBounds, MovingDisk, ObstacleSet
from feasqp.learner import KernelParams, LabelEnv, SamplerConfig, feedback_train

warnings.filterwarnings("ignore", module="feasqp")

ROBOT_BOUNDS = ControlBounds([-0.2, -0.5], [0.2, 0.5])

# canonical training placements; models transfer to any placement of the
# same obstacle type via the set-relative features
REGULAR_DISK = MovingDisk((20.0, 35.0), (0.0, 0.0), 7.0, type_id=0, set_id=0)
IRREGULAR_DISKS = (
    MovingDisk((22.0, 28.0), (0.0, 0.0), 7.0, type_id=1, set_id=0),
    MovingDisk((31.0, 19.0), (0.0, 0.0), 7.0, type_id=1, set_id=0),
)
DRIVING_DISK = MovingDisk((60.0, 0.0), (16.0, 0.0), 7.0, type_id=2, set_id=0)


@pytest.fixture(scope="session")
def robot_bounds():
    return ROBOT_BOUNDS


@pytest.fixture(scope="session")
def regular_training():
    """Model + report for the single-disk obstacle type (one-step labels)."""
    env = LabelEnv(
        obstacle_set=ObstacleSet((REGULAR_DISK,)),
        bounds=ROBOT_BOUNDS,
        v_min=0.0,
        v_max=2.0,
        dt=0.1,
    )
    cfg = SamplerConfig(
        radial_range=(7.0, 13.0),
        speed_range=(0.0, 2.0),
        n_train=2000,
        n_test=1000,
        smo_max_iter=200_000,
        seed=1,
    )
    t0 = time.perf_counter()
    h, report = feedback_train(
        cfg,
        env,
        epsilon_term=0.001,
        schedule=[(2000, 1000), (800, 200), (600, 200)],
        max_iterations=3,
    )
    return h, report, cfg, env, time.perf_counter() - t0


@pytest.fixture(scope="session")
def regular_model(regular_training):
    return regular_training[0]


@pytest.fixture(scope="session")
def irregular_training():
    """Model + report for the overlapping two-disk type (60-step rollout labels)."""
    env = LabelEnv(
        obstacle_set=ObstacleSet(IRREGULAR_DISKS),
        bounds=ROBOT_BOUNDS,
        v_min=0.0,
        v_max=2.0,
        dt=0.1,
    )
    cfg = SamplerConfig(
        radial_range=(3.0, 14.0),
        speed_range=(0.5, 2.0),
        n_train=5000,
        n_test=1000,
        h_t=60,
        heading_range=(-0.7, 0.7),
        heading_relative=True,
        rollout_speed_target=1.5,
        kernel=KernelParams(k1=0.9, k2=0.05),
        svm_c=1.0,
        smo_max_iter=150_000,
        seed=11,
    )
    t0 = time.perf_counter()
    h, report = feedback_train(
        cfg,
        env,
        epsilon_term=0.001,
        schedule=[(5000, 1000), (1200, 400), (1000, 300)],
        max_iterations=3,
    )
    return h, report, cfg, env, time.perf_counter() - t0


@pytest.fixture(scope="session")
def irregular_model(irregular_training):
    return irregular_training[0]


@pytest.fixture(scope="session")
def driving_training():
    """Model + report for the lead-vehicle disk (one-step labels, lane frame)."""
    env = LabelEnv(
        obstacle_set=ObstacleSet((DRIVING_DISK,)),
        bounds=ROBOT_BOUNDS,
        v_min=0.0,
        v_max=28.0,
        dt=0.1,
    )
    cfg = SamplerConfig(
        radial_range=(8.0, 60.0),
        speed_range=(10.0, 28.0),
        n_train=4000,
        n_test=1000,
        feature_kind="driving",
        heading_range=(-0.7, 0.7),
        rel_speed_range=(-20.0, 0.0),
        kernel=KernelParams(k1=0.9, k2=0.001),
        svm_c=10.0,
        smo_max_iter=120_000,
        seed=9,
    )
    t0 = time.perf_counter()
    h, report = feedback_train(cfg, env, epsilon_term=0.001, max_iterations=1)
    return h, report, cfg, env, time.perf_counter() - t0


@pytest.fixture(scope="session")
def driving_model(driving_training):
    return driving_training[0]
