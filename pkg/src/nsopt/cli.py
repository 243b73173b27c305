"""Experiment runner.

Subcommands:
  run          seeded stochastic runs from a JSON config -> JSONL + summary
  sweep        grid sweep over {eta0, tau1, tau2} -> CSV
  verify       invariant and acceptance check batteries
  simulate-di  integrate the continuous-time flow from a config

One JSON document configures a job; command line flags override config
keys, which override built-in defaults. Exit codes: 0 success, 1
verification failure, 2 config error, 3 I/O error. All file writes go
through a temp file plus rename, so a crashed run never leaves a
truncated artifact behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import OptimizerState
from .problems import PROBLEMS, DEFAULT_POLICY, make_problem
from .optim import AfmConfig, ScalingRule, validate_config
from .clip import BALL, BOX, ClipConfig
from .schedules_noise import (ClipSchedule, NoiseModel, StepSchedule,
                              TwoTimescale, validate_schedules)
from .analysis import (METHODS, DiSimConfig, Trajectory, gap_series,
                       run_experiment, simulate_di)


class ConfigError(ValueError):
    """Bad or inconsistent configuration; maps to exit code 2."""


_VARIANT_METHODS = tuple(m for m in METHODS if m not in ("sgd", "sgd-c",
                                                         "adam-c"))


@dataclass
class ExperimentConfig:
    """Resolved job description for run and sweep."""

    problem_name: str
    problem_params: dict
    method: str
    afm: Optional[AfmConfig]
    clip_cfg: Optional[ClipConfig]
    schedule: StepSchedule
    tt: Optional[TwoTimescale]
    cs: Optional[ClipSchedule]
    clip_c: Optional[float]
    region: object
    v_variant: str
    noise: Optional[NoiseModel]
    scaling: Optional[ScalingRule]
    iters: int
    snapshot_stride: Optional[int]
    seeds: list
    out: str
    batch: str
    x0: Optional[list]
    workers: int
    grid: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {"problem", "method", "optimizer", "schedule",
                 "two_timescale", "clip_schedule", "clip_c", "region",
                 "v_variant", "noise", "scaling", "iters",
                 "snapshot_stride", "seeds", "out", "batch", "x0",
                 "workers", "grid"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")

        prob = dict(raw.get("problem") or {})
        name = prob.pop("name", None)
        if name not in PROBLEMS:
            raise ConfigError(
                f"problem name must be one of {sorted(PROBLEMS)}, got {name!r}")

        method = raw.get("method", "adam")
        if method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {method!r}")

        opt = dict(raw.get("optimizer") or {})
        afm = clip_cfg = None
        try:
            if method in _VARIANT_METHODS:
                opt.pop("variant", None)  # the method key names the variant
                afm = AfmConfig(variant=method, **opt)
                report = validate_config(afm)
                for w in report.warnings:
                    print(f"warning: {w}", file=sys.stderr)
            else:
                clip_cfg = ClipConfig(**opt)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"optimizer block: {err}") from err

        try:
            schedule = StepSchedule(**(raw.get("schedule") or {}))
            tt = TwoTimescale(**raw["two_timescale"]) \
                if raw.get("two_timescale") is not None else None
            cs = ClipSchedule(**raw["clip_schedule"]) \
                if raw.get("clip_schedule") is not None else None
            noise = NoiseModel(**raw["noise"]) \
                if raw.get("noise") is not None else None
            scaling = ScalingRule(**raw["scaling"]) \
                if raw.get("scaling") is not None else None
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err

        region_name = raw.get("region", "ball")
        if region_name not in ("ball", "box"):
            raise ConfigError(f"region must be 'ball' or 'box', got {region_name!r}")

        iters = raw.get("iters")
        if not isinstance(iters, int) or iters < 1:
            raise ConfigError(f"iters must be a positive integer, got {iters!r}")

        seeds = raw.get("seeds", [0])
        if (not isinstance(seeds, list) or not seeds
                or not all(isinstance(s, int) for s in seeds)):
            raise ConfigError(f"seeds must be a non-empty list of ints, got {seeds!r}")
        if len(set(seeds)) != len(seeds):
            raise ConfigError(f"seeds must be distinct, got {seeds}")

        batch = raw.get("batch", "single")
        if batch not in ("single", "full"):
            raise ConfigError(f"batch must be 'single' or 'full', got {batch!r}")

        workers = raw.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {workers!r}")

        grid = raw.get("grid") or {}
        bad = set(grid) - {"eta0", "tau1", "tau2"}
        if bad:
            raise ConfigError(
                f"grid may only cover eta0, tau1, tau2; got {sorted(bad)}")

        stride = raw.get("snapshot_stride")
        if stride is not None and (not isinstance(stride, int) or stride < 1):
            raise ConfigError(f"snapshot_stride must be a positive int, got {stride!r}")

        try:  # surface bad problem params as a config error, not a crash
            make_problem(name, **prob)
        except (TypeError, ValueError, KeyError) as err:
            raise ConfigError(f"problem block: {err}") from err

        return cls(
            problem_name=name, problem_params=prob, method=method,
            afm=afm, clip_cfg=clip_cfg, schedule=schedule, tt=tt, cs=cs,
            clip_c=raw.get("clip_c"),
            region=BOX if region_name == "box" else BALL,
            v_variant=raw.get("v_variant", "first_moment"), noise=noise,
            scaling=scaling, iters=iters, snapshot_stride=stride,
            seeds=list(seeds), out=raw.get("out", "nsopt_out"),
            batch=batch, x0=raw.get("x0"), workers=workers, grid=grid,
        )


@dataclass
class RunSummary:
    """Per-seed outcomes plus medians over the non-diverged runs."""

    per_seed: list
    aggregate: dict

    @classmethod
    def collect(cls, entries: list) -> "RunSummary":
        ok = [e for e in entries if e["status"] != "diverged"]
        gap_key = "surrogate_gap" if "surrogate_gap" in entries[0] \
            else "final_gap"
        agg = {
            "num_runs": len(entries),
            "num_diverged": len(entries) - len(ok),
            "median_final_f": float(np.median([e["final_f"] for e in ok]))
            if ok else None,
            f"median_{gap_key}": float(np.median([e[gap_key] for e in ok]))
            if ok else None,
        }
        return cls(per_seed=entries, aggregate=agg)

    def to_json(self) -> str:
        return json.dumps({"per_seed": self.per_seed,
                           "aggregate": self.aggregate}, indent=2)


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    return raw


def _apply_flag_overrides(raw: dict, args: argparse.Namespace) -> dict:
    raw = dict(raw)
    if getattr(args, "seed_list", None):
        try:
            raw["seeds"] = [int(s) for s in args.seed_list.split(",") if s]
        except ValueError as err:
            raise ConfigError(f"--seed-list must be comma-separated ints: "
                              f"{args.seed_list!r}") from err
    if getattr(args, "out", None):
        raw["out"] = args.out
    return raw


def _gate_schedules(cfg: ExperimentConfig, override: bool) -> None:
    report = validate_schedules(cfg.schedule, cfg.tt, cfg.cs)
    if report.ok or override:
        return
    lines = "\n  ".join(report.failures)
    raise ConfigError(
        f"schedule fails the asymptotic conditions (pass "
        f"--override-schedule-check to run anyway):\n  {lines}")


def _one_run(cfg: ExperimentConfig, seed: int, schedule: StepSchedule,
             afm: Optional[AfmConfig], clip_cfg: Optional[ClipConfig]):
    """One seeded run with private config copies; safe to call in parallel."""
    problem = make_problem(cfg.problem_name, **cfg.problem_params)
    t0 = time.perf_counter()
    traj = run_experiment(
        problem, method=cfg.method, schedule=schedule, iters=cfg.iters,
        seed=seed,
        afm=replace(afm) if afm else None,
        clip_cfg=replace(clip_cfg) if clip_cfg else None,
        v_variant=cfg.v_variant, region=cfg.region, cs=cfg.cs,
        clip_c=cfg.clip_c, tt=cfg.tt, noise=cfg.noise,
        scaling=ScalingRule(mode=cfg.scaling.mode) if cfg.scaling else None,
        batch=cfg.batch,
        x0=np.asarray(cfg.x0, dtype=float) if cfg.x0 is not None else None,
        snapshot_stride=cfg.snapshot_stride)
    wall = time.perf_counter() - t0
    last = traj.records[-1]
    gap_key = "gap" if "gap" in last else "surrogate_gap"
    entry = {"seed": seed, "status": traj.status,
             "final_f": last["f"], "wall_time": round(wall, 4)}
    entry["final_gap" if gap_key == "gap" else "surrogate_gap"] = last[gap_key]
    return traj, entry


def _map_jobs(fn, jobs, workers: int):
    """Run fn over jobs, optionally in threads; results keep job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def cmd_run(args: argparse.Namespace) -> int:
    raw = _apply_flag_overrides(_load_config(args.config), args)
    cfg = ExperimentConfig.from_dict(raw)
    _gate_schedules(cfg, args.override_schedule_check)
    os.makedirs(cfg.out, exist_ok=True)

    jobs = [(cfg, seed, cfg.schedule, cfg.afm, cfg.clip_cfg)
            for seed in cfg.seeds]
    results = _map_jobs(_one_run, jobs, cfg.workers)

    entries = []
    for seed, (traj, entry) in zip(cfg.seeds, results):
        path = os.path.join(cfg.out, f"seed{seed:04d}.jsonl")
        traj.write_jsonl(path)
        entries.append(entry)
        gap_key = "final_gap" if "final_gap" in entry else "surrogate_gap"
        print(f"seed {seed}: {entry['status']}  f={entry['final_f']:.6g}  "
              f"{gap_key}={entry[gap_key]:.6g}  ({entry['wall_time']:.2f}s)")

    summary = RunSummary.collect(entries)
    _atomic_write(os.path.join(cfg.out, "summary.json"), summary.to_json())
    agg = summary.aggregate
    print(f"{len(entries)} runs, {agg['num_diverged']} diverged; "
          f"summary in {cfg.out}/summary.json")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    raw = _apply_flag_overrides(_load_config(args.config), args)
    cfg = ExperimentConfig.from_dict(raw)
    if not cfg.grid or any(not vals for vals in cfg.grid.values()):
        raise ConfigError("sweep needs a non-empty grid over eta0/tau1/tau2")

    keys = sorted(cfg.grid)
    points = list(itertools.product(*(cfg.grid[k] for k in keys)))
    jobs = []
    for point in points:
        over = dict(zip(keys, point))
        schedule = replace(cfg.schedule, eta0=over.get("eta0",
                                                       cfg.schedule.eta0))
        tau_over = {k: over[k] for k in ("tau1", "tau2") if k in over}
        afm = replace(cfg.afm, **tau_over) if cfg.afm else None
        clip_cfg = replace(cfg.clip_cfg, **tau_over) if cfg.clip_cfg else None
        # gate once per grid point: eta0 changes the schedule under test
        _gate_schedules(replace(cfg, schedule=schedule),
                        args.override_schedule_check)
        for seed in cfg.seeds:
            jobs.append((cfg, seed, schedule, afm, clip_cfg))

    results = _map_jobs(_one_run, jobs, cfg.workers)

    os.makedirs(cfg.out, exist_ok=True)
    gap_col = "final_gap" if "final_gap" in results[0][1] else "surrogate_gap"
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=",")
    writer.writerow(["eta0", "tau1", "tau2", "seed", "status", "final_f",
                     gap_col])
    job_iter = iter(results)
    for point in points:
        over = dict(zip(keys, point))
        eta0 = over.get("eta0", cfg.schedule.eta0)
        base = cfg.afm if cfg.afm else cfg.clip_cfg
        tau1 = over.get("tau1", base.tau1)
        tau2 = over.get("tau2", base.tau2)
        for seed in cfg.seeds:
            _, entry = next(job_iter)
            writer.writerow([repr(float(eta0)), repr(float(tau1)),
                             repr(float(tau2)), seed, entry["status"],
                             repr(entry["final_f"]), repr(entry[gap_col])])
    path = os.path.join(cfg.out, "sweep.csv")
    _atomic_write(path, buf.getvalue())
    print(f"{len(points)} grid points x {len(cfg.seeds)} seeds -> "
          f"{len(results)} rows in {path}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    from .verification import run_checks
    results = run_checks(args.battery)
    for res in results:
        print(res.line() + f"  [{res.elapsed:.2f}s]")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed: "
              f"{', '.join(failed)}")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def cmd_simulate_di(args: argparse.Namespace) -> int:
    raw = _apply_flag_overrides(_load_config(args.config), args)
    known = {"problem", "sim", "inits", "out"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown simulate-di config keys: {sorted(extra)}")
    prob = dict(raw.get("problem") or {})
    name = prob.pop("name", None)
    if name not in PROBLEMS:
        raise ConfigError(
            f"problem name must be one of {sorted(PROBLEMS)}, got {name!r}")
    problem = make_problem(name, **prob)
    try:
        sim = DiSimConfig(**(raw.get("sim") or {}))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"sim block: {err}") from err

    inits_spec = raw.get("inits", {"count": 1, "seed": 0})
    if isinstance(inits_spec, list):
        inits = [np.asarray(x, dtype=float) for x in inits_spec]
    elif isinstance(inits_spec, dict):
        count = inits_spec.get("count", 1)
        seed = inits_spec.get("seed", 0)
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"inits.count must be a positive int, got {count!r}")
        inits = [problem.default_init(np.random.default_rng([seed, i]))
                 for i in range(count)]
    else:
        raise ConfigError("inits must be a list of points or {count, seed}")

    out = raw.get("out", "nsopt_out")
    os.makedirs(out, exist_ok=True)
    for i, x0 in enumerate(inits):
        traj = simulate_di(problem, OptimizerState.fresh(x0), sim)
        traj.write_jsonl(os.path.join(out, f"di_init{i:03d}.jsonl"))
        last = traj.records[-1]
        gap_key = "gap" if "gap" in last else "surrogate_gap"
        print(f"init {i}: {traj.status} at t={last['t']:.3f}  "
              f"f={last['f']:.6g}  {gap_key}={last[gap_key]:.6g}")
    print(f"{len(inits)} trajectories in {out}/")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsopt", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--seed-list",
                       help="comma-separated seeds, overrides config")
        p.add_argument("--out", help="output directory, overrides config")
        p.add_argument("--override-schedule-check", action="store_true",
                       help="run even if the schedule fails the "
                            "asymptotic conditions")

    add_common(sub.add_parser("run", help="execute seeded runs"))
    add_common(sub.add_parser("sweep", help="grid sweep over eta0/tau1/tau2"))

    ver = sub.add_parser("verify", help="run the check batteries")
    ver.add_argument("--battery", default="all",
                     choices=("invariants", "acceptance", "all"))

    sim = sub.add_parser("simulate-di", help="integrate the continuous flow")
    sim.add_argument("--config", required=True, help="path to JSON config")
    sim.add_argument("--out", help="output directory, overrides config")
    return parser


_COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "simulate-di": cmd_simulate_di,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as err:  # ConfigError and precondition failures
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
