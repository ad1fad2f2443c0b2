"""Command-line surface: train models, run scenarios, evaluate, dump datasets.

One JSON config fully determines a run. Every command writes its artifacts
under --out together with a manifest listing them; identical config and seed
reproduce byte-identical data outputs (wall-clock fields excluded).

Exit codes: 0 success, 2 config error, 3 runtime abort. An infeasible
simulation is an experimental outcome, not a failure (exit 0).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .dynamics import ControlBounds, MovingDisk, ObstacleSet, State
from .learner import (
    Hypersurface,
    KernelParams,
    LabelEnv,
    ModelFormatError,
    SamplerConfig,
    TrainingError,
    feedback_train,
    generalization_test,
    load_model,
    sample_and_label,
    save_model,
)
from .scenarios import (
    ScenarioConfig,
    SensorModel,
    along_lane_gap,
    run_driving,
    run_robot,
    write_trajectory_csv,
)

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    """Invalid or missing configuration; message names the offending field."""


def _get(section: dict, field: str, where: str, default=...):
    if field in section:
        return section[field]
    if default is not ...:
        return default
    raise ConfigError(f"missing field '{field}' in section '{where}'")


def _section(cfg: dict, name: str, required: bool = True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section '{name}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be an object")
    return sec


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: line {e.lineno}: {e.msg}") from e


def parse_bounds(cfg: dict) -> ControlBounds:
    sec = _section(cfg, "bounds")
    try:
        return ControlBounds(_get(sec, "u_min", "bounds"), _get(sec, "u_max", "bounds"))
    except ValueError as e:
        raise ConfigError(f"bounds: {e}") from e


def parse_kernel(cfg: dict) -> KernelParams:
    sec = _section(cfg, "kernel")
    try:
        return KernelParams(
            k1=float(_get(sec, "k1", "kernel")),
            k2=float(_get(sec, "k2", "kernel")),
            degree=int(_get(sec, "degree", "kernel", 2)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"kernel: {e}") from e


def parse_obstacles(cfg: dict) -> List[MovingDisk]:
    raw = cfg.get("obstacles")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("missing or empty section 'obstacles'")
    disks = []
    for i, o in enumerate(raw):
        try:
            disks.append(
                MovingDisk(
                    center=tuple(_get(o, "center", f"obstacles[{i}]")),
                    velocity=tuple(_get(o, "velocity", f"obstacles[{i}]", (0.0, 0.0))),
                    radius=float(_get(o, "radius", f"obstacles[{i}]")),
                    type_id=int(_get(o, "type_id", f"obstacles[{i}]", 0)),
                    set_id=int(_get(o, "set_id", f"obstacles[{i}]", 0)),
                )
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"obstacles[{i}]: {e}") from e
    return disks


def parse_sampler(cfg: dict, kernel: KernelParams, seed: Optional[int]) -> SamplerConfig:
    sec = _section(cfg, "sampler")
    try:
        return SamplerConfig(
            radial_range=tuple(_get(sec, "radial_range", "sampler")),
            speed_range=tuple(_get(sec, "speed_range", "sampler")),
            n_train=int(_get(sec, "n_train", "sampler")),
            n_test=int(_get(sec, "n_test", "sampler")),
            h_t=int(_get(sec, "h_t", "sampler", 1)),
            feature_kind=_get(sec, "feature_kind", "sampler", "robot"),
            heading_range=tuple(_get(sec, "heading_range", "sampler", (-np.pi, np.pi))),
            heading_relative=bool(_get(sec, "heading_relative", "sampler", False)),
            rel_speed_range=tuple(_get(sec, "rel_speed_range", "sampler", (-20.0, 0.0))),
            balance_target=float(_get(sec, "balance_target", "sampler", 0.3)),
            budget_factor=int(_get(sec, "budget_factor", "sampler", 20)),
            seed=int(seed if seed is not None else _get(sec, "seed", "sampler", 0)),
            kernel=kernel,
            svm_c=float(_get(sec, "svm_c", "sampler", 1.0)),
            smo_max_iter=int(_get(sec, "smo_max_iter", "sampler", 60_000)),
            rollout_speed_target=float(_get(sec, "rollout_speed_target", "sampler", 1.0)),
            rollout_goal_margin=float(_get(sec, "rollout_goal_margin", "sampler", 25.0)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"sampler: {e}") from e


def parse_label_env(cfg: dict, bounds: ControlBounds, disks: List[MovingDisk]) -> LabelEnv:
    dyn = _section(cfg, "dynamics")
    gains = _section(cfg, "gains", required=False)
    try:
        return LabelEnv(
            obstacle_set=ObstacleSet(tuple(disks)),
            bounds=bounds,
            v_min=float(_get(dyn, "v_min", "dynamics")),
            v_max=float(_get(dyn, "v_max", "dynamics")),
            dt=float(_get(dyn, "dt", "dynamics", 0.1)),
            clf_epsilon=float(_get(gains, "clf_epsilon", "gains", 10.0)),
            p0=float(_get(gains, "p0", "gains", 1.0)),
            hocbf_gains=tuple(_get(gains, "hocbf", "gains", (1.0, 1.0))),
            speed_gain=float(_get(gains, "speed", "gains", 1.0)),
            feasibility_gain=float(_get(gains, "feasibility", "gains", 1.0)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"dynamics/gains: {e}") from e


def parse_scenario(
    cfg: dict,
    bounds: ControlBounds,
    disks: List[MovingDisk],
    hypersurfaces: Dict[int, Hypersurface],
) -> ScenarioConfig:
    sec = _section(cfg, "scenario")
    gains = _section(cfg, "gains", required=False)
    sensor_sec = _get(sec, "sensor", "scenario", {})
    try:
        sensor = SensorModel(
            fov=float(_get(sensor_sec, "fov", "scenario.sensor", 2.0 * np.pi / 3.0)),
            range=float(_get(sensor_sec, "range", "scenario.sensor", 7.0)),
            range_slack=float(_get(sensor_sec, "range_slack", "scenario.sensor", 1.0)),
        )
        brake = _get(sec, "approach_brake", "scenario", None)
        return ScenarioConfig(
            obstacles=tuple(disks),
            destination=tuple(_get(sec, "destination", "scenario")),
            initial_state=State(*_get(sec, "initial_state", "scenario")),
            t_f=float(_get(sec, "t_f", "scenario")),
            bounds=bounds,
            dt=float(_get(sec, "dt", "scenario", 0.1)),
            v_des=float(_get(sec, "v_des", "scenario", 1.0)),
            v_min=float(_get(sec, "v_min", "scenario", 0.0)),
            v_max=float(_get(sec, "v_max", "scenario", 2.0)),
            clf_epsilon=float(_get(gains, "clf_epsilon", "gains", 10.0)),
            hocbf_gains=tuple(_get(gains, "hocbf", "gains", (1.0, 1.0))),
            speed_gain=float(_get(gains, "speed", "gains", 1.0)),
            feasibility_gain=float(_get(gains, "feasibility", "gains", 1.0)),
            p0=float(_get(gains, "p0", "gains", 1.0)),
            sensor=sensor,
            arrival_radius=float(_get(sec, "arrival_radius", "scenario", 0.5)),
            approach_brake=None if brake is None else float(brake),
            hypersurfaces=hypersurfaces,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"scenario: {e}") from e


def parse_models(pairs: List[str]) -> Dict[int, Hypersurface]:
    """--model TYPE=PATH, repeatable."""
    out: Dict[int, Hypersurface] = {}
    for p in pairs:
        if "=" not in p:
            raise ConfigError(f"--model expects TYPE=PATH, got '{p}'")
        tid, path = p.split("=", 1)
        try:
            out[int(tid)] = load_model(path)
        except ValueError as e:
            raise ConfigError(f"--model '{p}': {e}") from e
        except ModelFormatError as e:
            raise ConfigError(f"--model '{p}': {e}") from e
        except OSError as e:
            raise ConfigError(f"--model '{p}': {e}") from e
    return out


# ---------------------------------------------------------------------------
# output helpers


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _manifest(out: Path, args, artifacts: List[str], t0: float) -> None:
    _write_json(
        out / "manifest.json",
        {
            "command": args.command,
            "config": str(args.config),
            "seed": args.seed,
            "output_dir": str(out),
            "version": __version__,
            "artifacts": sorted(artifacts),
            "wall_clock_s": round(time.perf_counter() - t0, 3),
        },
    )


def _summary_payload(log) -> dict:
    s = log.summary()
    # runtime is a wall-clock field; keep it out of the reproducible payload
    s.pop("runtime_ms", None)
    return s


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    bounds = parse_bounds(cfg)
    kernel = parse_kernel(cfg)
    disks = parse_obstacles(cfg)
    env = parse_label_env(cfg, bounds, disks)
    sampler = parse_sampler(cfg, kernel, args.seed)
    train_sec = _section(cfg, "train", required=False)
    epsilon = float(_get(train_sec, "epsilon_term", "train", 0.001))
    max_iters = int(_get(train_sec, "max_iterations", "train", 10))
    schedule = _get(train_sec, "schedule", "train", None)
    if schedule is not None:
        schedule = [tuple(map(int, row)) for row in schedule]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        h, report = feedback_train(
            sampler, env, epsilon_term=epsilon, schedule=schedule, max_iterations=max_iters
        )
    except TrainingError as e:
        print(f"training failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    if h is None:
        print("training produced no model (single-class data)", file=sys.stderr)
        return EXIT_RUNTIME
    save_model(h, out / "model.json")
    _write_json(
        out / "report.json",
        {
            "converged": report.converged,
            "iterations": [asdict(it) for it in report.iterations],
        },
    )
    _manifest(out, args, ["model.json", "report.json"], t0)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    bounds = parse_bounds(cfg)
    disks = parse_obstacles(cfg)
    models = parse_models(args.model)
    scen = parse_scenario(cfg, bounds, disks, models)
    kind = _get(_section(cfg, "scenario"), "kind", "scenario", "robot")
    if kind not in ("robot", "driving"):
        raise ConfigError(f"scenario.kind must be 'robot' or 'driving', got '{kind}'")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    log = run_robot(scen) if kind == "robot" else run_driving(scen)
    write_trajectory_csv(log, out / "trajectory.csv")
    summary = _summary_payload(log)
    if kind == "driving":
        gaps = along_lane_gap(log, 0, scen)
        summary["overtake_complete"] = bool(gaps and gaps[0] > 0.0 > gaps[-1])
    _write_json(out / "summary.json", summary)
    _manifest(out, args, ["trajectory.csv", "summary.json"], t0)
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    bounds = parse_bounds(cfg)
    kernel = parse_kernel(cfg)
    disks = parse_obstacles(cfg)
    env = parse_label_env(cfg, bounds, disks)
    models = parse_models(args.model)
    if len(models) != 1:
        raise ConfigError("eval expects exactly one --model")
    h = next(iter(models.values()))
    eval_sec = _section(cfg, "eval")
    n_samples = int(_get(eval_sec, "n_samples", "eval"))
    if n_samples <= 0:
        raise ConfigError("eval.n_samples must be positive")
    sampler = parse_sampler(cfg, kernel, args.seed)
    radial = _get(eval_sec, "radial_range", "eval", None)
    if radial is not None:
        from dataclasses import replace

        sampler = replace(sampler, radial_range=tuple(radial))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    fraction, rate = generalization_test(h, sampler, env, n_samples)
    _write_json(
        out / "metrics.json",
        {
            "h_nonneg_fraction": fraction,
            "qp_infeasibility_rate": rate,
            "n_samples": n_samples,
        },
    )
    _manifest(out, args, ["metrics.json"], t0)
    return 0


def cmd_label(args) -> int:
    cfg = load_config(args.config)
    bounds = parse_bounds(cfg)
    kernel = parse_kernel(cfg)
    disks = parse_obstacles(cfg)
    env = parse_label_env(cfg, bounds, disks)
    sampler = parse_sampler(cfg, kernel, args.seed)
    models = parse_models(args.model)
    h = models.get(disks[0].type_id) if models else None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    samples, rate = sample_and_label(sampler, env, h)
    n_features = len(samples[0].features) if samples else 0
    with open(out / "dataset.csv", "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow([f"z{i + 1}" for i in range(n_features)] + ["label"])
        for s in samples:
            wr.writerow([repr(float(v)) for v in s.features] + [s.label])
    _write_json(out / "label_stats.json", {"n_samples": len(samples), "infeasibility_rate": rate})
    _manifest(out, args, ["dataset.csv", "label_stats.json"], t0)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="feasqp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("train", cmd_train),
        ("simulate", cmd_simulate),
        ("eval", cmd_eval),
        ("label", cmd_label),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument(
            "--model",
            action="append",
            default=[],
            metavar="TYPE=PATH",
            help="trained hypersurface for an unsafe-set type id (repeatable)",
        )
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", required=True)
        sp.set_defaults(func=fn)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
