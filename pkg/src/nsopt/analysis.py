"""Lyapunov evaluation, flow simulation, and experiment running.

Three layers live here because they share the Trajectory record:

  - lyapunov() evaluates phi(x, m, v) = f(x) + <m, (|v|+eps)^(-gamma) m>
    / (2 tau1), the function that decreases along the continuous-time
    limit flow of the update family.
  - simulate_di() integrates that flow by explicit Euler:
        dx/dt = -(|v|+eps)^(-gamma) * (m + alpha d)
        dm/dt = -tau1 (m - d)
        dv/dt = -tau2 (v - u)
    with d the mean conservative selection and u the variant's
    second-moment selection. Single-valued selections stand in for the
    set-valued right-hand side; any selection is a fair test of the
    decrease claim.
  - run_experiment() runs the stochastic methods (the five estimator
    variants, plain sgd, and the clipped pair sgd-c / adam-c) with
    per-iteration component sampling, optional additive noise, and
    schedule-driven stepsizes, recording snapshots to a Trajectory.

Trajectories serialize to JSONL: one header line of run metadata, then
one snapshot per line with keys k, t (flow runs only), f, phi, gap or
surrogate_gap, m_inf, v_inf, x_inf. Problems with a closed-form gap
record "gap"; others record "surrogate_gap", the infinity norm of the
mean conservative selection, under a distinct key so the two are never
conflated downstream.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clip import BALL, ClipConfig, ClipRegion, ClippedState, adamc_step, sgdc_step
from .core import OptimizerState, Vector
from .optim import (VARIANTS, AfmConfig, DivergenceError, ScalingRule, step,
                    u_selection)
from .problems import DEFAULT_POLICY, CapabilityError, KinkPolicy, Problem
from .schedules_noise import (ClipSchedule, NoiseModel, StepSchedule,
                              TwoTimescale, clip_radius, eta, sample_noise,
                              theta)

METHODS = VARIANTS + ("sgd", "sgd-c", "adam-c")


def config_hash(obj) -> str:
    """Stable 12-hex digest of a JSON-serializable config mapping."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class Trajectory:
    """Snapshot records plus run metadata.

    records hold plain dicts (JSON-ready); meta carries at least problem,
    method, seed, status, and config_hash. Snapshots are strictly
    increasing in k, and every recorded scalar is finite: on divergence
    the run stops recording at the last finite state and only the status
    says what happened.
    """

    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.meta.get("status", "unknown")

    def append(self, rec: dict) -> None:
        if self.records and rec["k"] <= self.records[-1]["k"]:
            raise ValueError(
                f"snapshots must increase in k: {rec['k']} after "
                f"{self.records[-1]['k']}"
            )
        self.records.append(rec)

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records if key in r])

    def write_jsonl(self, path: str) -> None:
        """Atomic write: header line with metadata, one snapshot per line."""
        d = os.path.dirname(os.path.abspath(path)) or "."
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(json.dumps({"header": self.meta}) + "\n")
                for rec in self.records:
                    fh.write(json.dumps(rec) + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def read_jsonl(cls, path: str) -> "Trajectory":
        meta, records = {}, []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "header" in obj:
                    meta = obj["header"]
                else:
                    records.append(obj)
        return cls(records=records, meta=meta)


def lyapunov(x: Vector, m: Vector, v: Vector, cfg: AfmConfig,
             problem: Problem) -> float:
    """phi(x, m, v); equals f(x) exactly when m = 0."""
    x = np.asarray(x, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    f = problem.objective(x)
    if not np.any(m):
        return float(f)
    w = (np.abs(v) + cfg.epsilon) ** (-cfg.gamma)
    return float(f + np.sum(m * m * w) / (2.0 * cfg.tau1))


@dataclass
class DiSimConfig:
    """Flow-simulation parameters.

    dt is capped at 1e-2: the Lyapunov decrease assertions absorb the
    O(dt^2) Euler error into 0.1-unit snapshot spacing, and that slack
    argument needs a small step. epsilon defaults to 1 here (not the
    stochastic methods' 1e-8) so the preconditioner stays O(1) when the
    flow starts from v = 0. gap_tol = 0 disables early stopping.
    """

    dt: float = 1e-3
    T: float = 10.0
    snapshot_every: float = 0.1
    gap_tol: float = 1e-6
    variant: str = "adam"
    alpha: float = 0.0
    gamma: float = 0.5
    epsilon: float = 1.0
    tau1: float = 1.0
    tau2: float = 1.0
    policy: KinkPolicy = DEFAULT_POLICY

    def __post_init__(self) -> None:
        if not 0.0 < self.dt <= 1e-2:
            raise ValueError(f"dt must lie in (0, 1e-2], got {self.dt}")
        if not self.T > 0.0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if self.snapshot_every < self.dt:
            raise ValueError("snapshot_every must be >= dt")
        if self.dt * self.tau1 > 1.0 or self.dt * self.tau2 > 1.0:
            raise ValueError("need dt*tau1 <= 1 and dt*tau2 <= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.gap_tol < 0.0:
            raise ValueError(f"gap_tol must be >= 0, got {self.gap_tol}")


def simulate_di(problem: Problem, init: OptimizerState,
                sim: DiSimConfig) -> Trajectory:
    """Explicit-Euler integration of the limit flow from init.

    Records a snapshot every sim.snapshot_every time units (always
    including t = 0) and stops at T ("horizon"), when the stationarity
    gap falls under sim.gap_tol ("converged"), or on the boundedness
    guard ("diverged"). The gap is checked every step so convergence is
    caught between snapshots; the final state is recorded either way.
    """
    cfg = AfmConfig(variant=sim.variant, alpha=sim.alpha, gamma=sim.gamma,
                    epsilon=sim.epsilon, tau1=sim.tau1, tau2=sim.tau2)
    x = init.x.astype(np.float64).copy()
    m = init.m.astype(np.float64).copy()
    v = init.v.astype(np.float64).copy()
    n_steps = int(round(sim.T / sim.dt))
    stride = max(1, int(round(sim.snapshot_every / sim.dt)))

    traj = Trajectory(meta={
        "problem": problem.name, "kind": "flow", "dt": sim.dt, "T": sim.T,
        "variant": sim.variant, "snapshot_every": sim.snapshot_every,
        "config_hash": config_hash({
            "dt": sim.dt, "T": sim.T, "variant": sim.variant,
            "alpha": sim.alpha, "gamma": sim.gamma, "epsilon": sim.epsilon,
            "tau1": sim.tau1, "tau2": sim.tau2, "gap_tol": sim.gap_tol,
        }),
    })

    def snap(k: int) -> float:
        rec = {"k": k, "t": k * sim.dt, "f": float(problem.objective(x)),
               "phi": lyapunov(x, m, v, cfg, problem)}
        g = problem.gap(x) if problem.has_gap else problem.surrogate_gap(x, sim.policy)
        rec["gap" if problem.has_gap else "surrogate_gap"] = float(g)
        rec["m_inf"] = float(np.max(np.abs(m))) if m.size else 0.0
        rec["v_inf"] = float(np.max(np.abs(v))) if v.size else 0.0
        rec["x_inf"] = float(np.max(np.abs(x))) if x.size else 0.0
        traj.append(rec)
        return float(g)

    snap(0)
    status = "horizon"
    comps = range(problem.N)
    for k in range(1, n_steps + 1):
        d_each = np.stack([problem.subgrad(i, x, sim.policy) for i in comps])
        d = d_each.mean(axis=0)
        u = u_selection(sim.variant, v, d_each, m)
        w = (np.abs(v) + sim.epsilon) ** (-sim.gamma)
        x = x - sim.dt * w * (m + sim.alpha * d)
        m = m - sim.dt * sim.tau1 * (m - d)
        v = v - sim.dt * sim.tau2 * (v - u)
        if not float(np.max(np.abs(x))) <= 1e8:
            status = "diverged"
            break
        if problem.has_gap and sim.gap_tol > 0.0:
            if problem.gap(x) < sim.gap_tol:
                snap(k)
                status = "converged"
                break
        if k % stride == 0:
            snap(k)
    else:
        if n_steps % stride != 0:
            snap(n_steps)
    traj.meta["status"] = status
    traj.meta["final_x"] = x.tolist()
    traj.meta["final_m"] = m.tolist()
    traj.meta["final_v"] = v.tolist()
    return traj


def gap_series(traj: Trajectory) -> dict:
    """Summary statistics of a trajectory's gap and objective columns.

    Needs >= 2 snapshots with a closed-form gap; surrogate-only runs get
    a CapabilityError rather than a silently different quantity. The
    f-limit estimate is the mean of the last 10% of f snapshots and
    f_spread is the max minus min over that same tail.
    """
    gaps = traj.column("gap")
    if gaps.size < 2:
        raise CapabilityError(
            "gap_series needs >= 2 snapshots with a closed-form gap; "
            "this trajectory records "
            + ("surrogate_gap only" if traj.column("surrogate_gap").size
               else "no gap at all")
        )
    ks = traj.column("k")
    fs = traj.column("f")
    tail = max(2, int(np.ceil(0.1 * fs.size)))
    imin = int(np.argmin(gaps))
    return {
        "final_gap": float(gaps[-1]),
        "min_gap": float(gaps[imin]),
        "k_at_min": int(ks[imin]),
        "f_limit_estimate": float(np.mean(fs[-tail:])),
        "f_spread": float(np.max(fs[-tail:]) - np.min(fs[-tail:])),
        "num_snapshots": int(gaps.size),
    }


def _phi_record(method: str, x, m, v, cfg_like, problem: Problem) -> float:
    # clipped methods evaluate phi with their own preconditioner power:
    # -1 for adam-c, identity for sgd / sgd-c
    if method in VARIANTS:
        return lyapunov(x, m, v, cfg_like, problem)
    f = problem.objective(x)
    if not np.any(m):
        return float(f)
    t1 = cfg_like.tau1
    if method == "adam-c":
        w = 1.0 / (np.abs(v) + cfg_like.epsilon)
        return float(f + np.sum(m * m * w) / (2.0 * t1))
    return float(f + np.sum(m * m) / (2.0 * t1))


def run_experiment(problem: Problem, *, method: str = "adam",
                   schedule: StepSchedule, iters: int, seed: int = 0,
                   run_index: int = 0,
                   afm: Optional[AfmConfig] = None,
                   clip_cfg: Optional[ClipConfig] = None,
                   v_variant: str = "first_moment",
                   region: ClipRegion = BALL,
                   cs: Optional[ClipSchedule] = None,
                   clip_c: Optional[float] = None,
                   tt: Optional[TwoTimescale] = None,
                   noise: Optional[NoiseModel] = None,
                   scaling: Optional[ScalingRule] = None,
                   policy: KinkPolicy = DEFAULT_POLICY,
                   batch: str = "single",
                   x0: Optional[Vector] = None,
                   v0: Optional[Vector] = None,
                   snapshot_stride: Optional[int] = None) -> Trajectory:
    """Run one stochastic method for iters steps and record snapshots.

    method is one of the five estimator variants, "sgd" (momentum SGD,
    the unclipped baseline: the clipped scheme with infinite radius),
    "sgd-c", or "adam-c". Clipped methods take their radius from cs
    (schedule) or clip_c (constant); "sgd" needs neither.

    batch "single" (default) samples one component index per step, the
    stochastic subgradient oracle; batch "full" feeds the exact mean
    conservative selection, the zero-noise member of the same oracle
    class, which is what the convergence demonstrations use (additive
    noise still applies on top if a model is given).

    Randomness comes from one private stream seeded by (seed, run_index):
    per step one component index (under batch "single"), then one noise
    vector if a noise model is given. Reruns with the same arguments are
    bitwise identical, and distinct run indexes never share a stream, so
    a sweep gives the same numbers whether runs execute serially or not.

    With a two-timescale rule tt, the momentum weight per step is
    theta_k = eta_k (eta_k log(k+2))^(-s), applied by scaling tau1; the
    weight is capped at 1 where the early iterations would overshoot the
    tau1*eta <= 1 precondition. Divergence does not raise: the run stops,
    keeps its last finite snapshot, and reports status "diverged" plus
    how far the blowup got in meta["max_x_inf"].
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; known: {METHODS}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if batch not in ("single", "full"):
        raise ValueError(f"batch must be 'single' or 'full', got {batch!r}")
    clipped = method in ("sgd", "sgd-c", "adam-c")
    if method in ("sgd-c", "adam-c") and cs is None and clip_c is None:
        raise ValueError(f"{method} needs a clip schedule (cs) or clip_c")
    if clipped:
        cfg = clip_cfg if clip_cfg is not None else ClipConfig()
    else:
        cfg = afm if afm is not None else AfmConfig(variant=method)
        if cfg.variant != method:
            raise ValueError(
                f"afm config is for variant {cfg.variant!r}, method is {method!r}")

    rng = np.random.default_rng([seed, run_index])
    x_init = problem.default_init(rng) if x0 is None else np.asarray(x0, float)
    stride = snapshot_stride if snapshot_stride else max(1, iters // 200)

    conf = {
        "problem": problem.name, "method": method, "iters": iters,
        "schedule": [schedule.family, schedule.eta0, schedule.p],
        "tau1": cfg.tau1, "tau2": cfg.tau2, "alpha": cfg.alpha,
        "epsilon": cfg.epsilon,
        "tt_s": tt.s if tt else None,
        "cs_c0": cs.c0 if cs else None, "clip_c": clip_c,
        "v_variant": v_variant if method == "adam-c" else None,
        "region": region.shape if clipped else None,
        "noise": [noise.kind, noise.sigma, noise.bound, noise.alpha,
                  noise.beta, noise.scale] if noise else None,
        "scaling": scaling.mode if scaling else None, "batch": batch,
        "seed": seed, "run_index": run_index,
    }
    traj = Trajectory(meta={
        "problem": problem.name, "method": method, "kind": "stochastic",
        "seed": seed, "run_index": run_index, "iters": iters,
        "snapshot_stride": stride, "config_hash": config_hash(conf),
    })

    if clipped:
        state = ClippedState.fresh(x_init, v0)
    else:
        state = OptimizerState.fresh(x_init, v0)
    base_tau1 = cfg.tau1
    add_noise = noise is not None and noise.kind != "none"
    max_x = float(np.max(np.abs(state.x)))
    status = "max_iter"

    def snap(k: int) -> None:
        rec = {"k": k, "f": float(problem.objective(state.x)),
               "phi": _phi_record(method, state.x, state.m, state.v, cfg, problem)}
        if problem.has_gap:
            rec["gap"] = float(problem.gap(state.x))
        else:
            rec["surrogate_gap"] = float(problem.surrogate_gap(state.x, policy))
        rec["m_inf"] = float(np.max(np.abs(state.m)))
        rec["v_inf"] = float(np.max(np.abs(state.v)))
        rec["x_inf"] = float(np.max(np.abs(state.x)))
        traj.append(rec)

    snap(0)
    k_done = 0
    try:
        for k in range(iters):
            eta_k = eta(schedule, k)
            if tt is not None:
                th = min(theta(tt, schedule, k), 1.0)
                cfg.tau1 = min(th / eta_k, 1.0 / eta_k)
            if batch == "single":
                i = int(rng.integers(problem.N))
                g = problem.subgrad(i, state.x, policy)
            else:
                g = problem.mean_subgrad(state.x, policy)
            if add_noise:
                g = g + sample_noise(noise, rng, g.shape[-1])
            if method == "sgd":
                state = sgdc_step(state, g, eta_k, np.inf, cfg, region)
            elif method == "sgd-c":
                ck = clip_radius(cs, schedule, k) if cs else clip_c
                state = sgdc_step(state, g, eta_k, ck, cfg, region)
            elif method == "adam-c":
                ck = clip_radius(cs, schedule, k) if cs else clip_c
                state = adamc_step(state, g, eta_k, ck, cfg, scaling,
                                   region, v_variant)
            else:
                state = step(state, g, eta_k, cfg, scaling)
            k_done = k + 1
            xm = float(np.max(np.abs(state.x)))
            if xm > max_x:
                max_x = xm
            if k_done % stride == 0:
                snap(k_done)
    except DivergenceError as err:
        status = "diverged"
        if np.isfinite(err.x_inf) and err.x_inf > max_x:
            max_x = err.x_inf
        if k_done % stride != 0:
            snap(k_done)
    else:
        if iters % stride != 0:
            snap(iters)
    finally:
        cfg.tau1 = base_tau1

    traj.meta["status"] = status
    traj.meta["iters_done"] = k_done
    traj.meta["max_x_inf"] = max_x
    traj.meta["final_x"] = np.asarray(state.x).tolist()
    return traj


def spurious_avoidance_experiment(num_runs: int = 100,
                                  c_range=(0.5, 1.5),
                                  nu0: float = 0.1, p: float = 0.6,
                                  iters: int = 5000,
                                  variant: str = "adam",
                                  master_seed: int = 0) -> dict:
    """Randomized-initialization runs on the spurious-point problem.

    The objective is the identity written as relu(x) - relu(-x); with the
    mainstream relu'(0) = 0 selection the point x = 0 is stationary for
    the selection field but not for the function (slope 1 everywhere).
    Each run draws x0 uniform in [-1, 1] \\ {0} and a stepsize scale c
    uniform in c_range, then runs the chosen variant with
    eta_k = c * nu0 / (k+1)^p. Reported per the random draws: the
    fraction of runs whose iterates ever hit x = 0 exactly, and the
    fraction whose final state is spurious-stationary (gap 0). Both are
    expected to be exactly 0: from a random start the iterates cross the
    kink without ever landing on it.

    One extra adversarial run starts at exactly x0 = 0 and is reported
    separately: the selection there is 0, so the state never moves. That
    run documents that the spurious point really is a fixed point; it is
    excluded from the fractions.
    """
    from .problems import spurious_problem

    problem = spurious_problem()
    rng = np.random.default_rng([master_seed, 9999])
    lo, hi = c_range
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < c_min < c_max, got {c_range}")
    hits = 0
    spurious_final = 0
    finals = []
    for _ in range(num_runs):
        x0 = 0.0
        while x0 == 0.0:
            x0 = float(rng.uniform(-1.0, 1.0))
        c = float(rng.uniform(lo, hi))
        sched = StepSchedule("power", c * nu0, p)
        cfg = AfmConfig(variant=variant)
        state = OptimizerState.fresh(np.array([x0]))
        hit = False
        for k in range(iters):
            g = problem.subgrad(0, state.x)
            state = step(state, g, eta(sched, k), cfg)
            if state.x[0] == 0.0:
                hit = True
        hits += hit
        spurious_final += problem.gap(state.x) == 0.0
        finals.append(float(state.x[0]))

    adv = OptimizerState.fresh(np.array([0.0]))
    cfg = AfmConfig(variant=variant)
    sched = StepSchedule("power", nu0, p)
    for k in range(iters):
        g = problem.subgrad(0, adv.x)
        adv = step(adv, g, eta(sched, k), cfg)
    return {
        "num_runs": num_runs,
        "hit_zero_fraction": hits / num_runs,
        "spurious_convergence_fraction": spurious_final / num_runs,
        "adversarial_stays_fixed": bool(adv.x[0] == 0.0 and adv.m[0] == 0.0),
        "final_iterates": finals,
    }
