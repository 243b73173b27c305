"""Stepsize, two-timescale, and clip-radius schedules, plus noise models.

The decaying-stepsize analysis needs, writing L_k = eta_k * log(k+2):

    sum(eta_k) = infinity          (enough total movement)
    L_k -> 0                       (stepsize beats the log factor)
    theta_k^2 / eta_k * log(k+2) -> 0   (momentum timescale separation)
    C_k -> infinity with C_k^2 * L_k -> 0   (clip radius grows slowly)

The derived schedules theta_k = eta_k * L_k^(-s) with s in (0, 1/2) and
C_k = C0 * L_k^(-1/3) satisfy all of these whenever eta_k does its part,
e.g. the power family eta0 / (k+1)^p with p in (0, 1]. The log argument
is offset to k+2 so every expression is defined and positive from k = 0;
any positive offset leaves the asymptotics untouched.

validate_schedules checks these conditions numerically at the checkpoints
k in {1e3, 1e4, 1e5, 1e6} rather than symbolically; see its docstring for
the exact thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import Vector

FAMILIES = ("power", "sqrt_epoch", "constant")
NOISE_KINDS = ("none", "gaussian", "uniform", "stable")

# validation checkpoints: three decades, far enough out that transient
# growth of log(k+2)/(k+1)^p has died off for any p down to ~0.15
CHECKPOINTS = (1_000, 10_000, 100_000, 1_000_000)

KType = Union[int, np.ndarray]


@dataclass(frozen=True)
class StepSchedule:
    """eta_k family: power eta0/(k+1)^p, sqrt_epoch eta0/sqrt(epoch+1)
    with epoch = k // steps_per_epoch, or constant eta0.

    The guarantees cover the power family with p in (0, 1]; any p > 0 is
    constructible so that validate_schedules can demonstrate WHY a bad
    exponent fails (p > 1 gives a convergent stepsize sum). The constant
    family likewise constructs fine and deliberately fails validation
    (its L_k grows like log k); running with it requires an explicit
    override at the experiment layer, matching its role as a
    fixed-stepsize equivalence mode rather than a convergent schedule.
    """

    family: str = "power"
    eta0: float = 0.1
    p: float = 0.5
    steps_per_epoch: int = 1000

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; known: {FAMILIES}")
        if not self.eta0 > 0.0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if self.family == "power" and not self.p > 0.0:
            raise ValueError(f"power family needs p > 0, got {self.p}")
        if self.family == "sqrt_epoch" and self.steps_per_epoch < 1:
            raise ValueError(
                f"steps_per_epoch must be >= 1, got {self.steps_per_epoch}")


@dataclass(frozen=True)
class TwoTimescale:
    """theta_k = eta_k * (eta_k * log(k+2))^(-s); s in (0, 1/2) strictly.

    theta_k / eta_k = L_k^(-s) grows without bound while theta_k^2 / eta_k
    * log(k+2) = L_k^(1-2s) still vanishes; that ratio is nondecreasing in
    k once log(k+2) >= 1/p (L_k is monotone decreasing from there on)."""

    s: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 < self.s < 0.5:
            raise ValueError(f"s must lie in (0, 1/2), got {self.s}")


@dataclass(frozen=True)
class ClipSchedule:
    """C_k = c0 * (eta_k * log(k+2))^(-1/3); grows to infinity while
    C_k^2 * eta_k * log(k+2) = c0^2 * L_k^(1/3) vanishes."""

    c0: float = 1.0

    def __post_init__(self) -> None:
        if not self.c0 > 0.0:
            raise ValueError(f"c0 must be > 0, got {self.c0}")


def eta(schedule: StepSchedule, k: KType) -> Union[float, np.ndarray]:
    """Stepsize at iteration k (k >= 0); k may be an integer array."""
    scalar = np.isscalar(k) or np.ndim(k) == 0
    ka = np.asarray(k, dtype=np.float64)
    if np.any(ka < 0):
        raise ValueError("iteration index must be >= 0")
    if schedule.family == "power":
        out = schedule.eta0 / (ka + 1.0) ** schedule.p
    elif schedule.family == "sqrt_epoch":
        epoch = np.floor(ka / schedule.steps_per_epoch)
        out = schedule.eta0 / np.sqrt(epoch + 1.0)
    else:
        out = np.full_like(ka, schedule.eta0)
    return float(out) if scalar else out


def _eta_log(schedule: StepSchedule, k: KType):
    ka = np.asarray(k, dtype=np.float64)
    return eta(schedule, k) * np.log(ka + 2.0)


def theta(tt: TwoTimescale, schedule: StepSchedule, k: KType):
    """Momentum-timescale stepsize theta_k at iteration k."""
    return eta(schedule, k) * _eta_log(schedule, k) ** (-tt.s)


def clip_radius(cs: ClipSchedule, schedule: StepSchedule, k: KType):
    """Clip radius C_k at iteration k."""
    return cs.c0 * _eta_log(schedule, k) ** (-1.0 / 3.0)


@dataclass
class ScheduleReport:
    ok: bool
    failures: list = field(default_factory=list)
    values: dict = field(default_factory=dict)


def validate_schedules(schedule: StepSchedule,
                       tt: Optional[TwoTimescale] = None,
                       cs: Optional[ClipSchedule] = None) -> ScheduleReport:
    """Numerically check the asymptotic schedule conditions.

    At the checkpoints k in {1e3, 1e4, 1e5, 1e6}:

      - eta_k * log(k+2) must fall by at least 10x from first to last
        checkpoint ("must vanish");
      - the partial sums of eta_k must still be growing: sum to 1e6 at
        least 1.5x the sum to 1e3 ("must diverge");
      - with tt: theta_k^2/eta_k * log(k+2) must be strictly decreasing
        across the checkpoints with total decrease >= 2x;
      - with cs: C_k^2 * eta_k * log(k+2) likewise, and C_k itself must
        have grown by >= 2x.

    The vanishing sequences carry different thresholds because they decay
    at different powers of L_k: L_k itself falls fast, while L_k^(1-2s)
    and L_k^(1/3) fall at a fraction of that rate, so demanding 10x from
    them would reject schedules that do satisfy the asymptotics (e.g. the
    power family with p = 0.6, s = 0.25). 10x over three decades for L_k,
    monotone plus 2x for the slower pair, is strict enough to reject
    constant stepsizes and convergent-sum powers.

    Each failure message names the violated condition by content; the ok
    field is True only when every applicable check passed.
    """
    ks = np.asarray(CHECKPOINTS)
    el = _eta_log(schedule, ks)
    failures = []
    values = {"k": list(CHECKPOINTS), "eta_log": el.tolist()}

    if not el[-1] * 10.0 <= el[0]:
        failures.append(
            "eta_k * log(k+2) must vanish: need a >= 10x decrease over "
            f"k in {CHECKPOINTS[0]}..{CHECKPOINTS[-1]}, got "
            f"{el[0]:.4g} -> {el[-1]:.4g}"
        )

    all_k = np.arange(CHECKPOINTS[-1] + 1)
    etas = eta(schedule, all_k)
    s_first = float(np.sum(etas[: CHECKPOINTS[0] + 1]))
    s_last = float(np.sum(etas))
    values["partial_sums"] = [s_first, s_last]
    if not s_last >= 1.5 * s_first:
        failures.append(
            "sum(eta_k) must diverge: partial sums must keep growing, got "
            f"{s_first:.4g} at k={CHECKPOINTS[0]} vs {s_last:.4g} at "
            f"k={CHECKPOINTS[-1]}"
        )

    if tt is not None:
        th = theta(tt, schedule, ks)
        seq = th ** 2 / eta(schedule, ks) * np.log(ks + 2.0)
        values["theta_sq_over_eta_log"] = seq.tolist()
        if not (np.all(np.diff(seq) < 0.0) and seq[0] >= 2.0 * seq[-1]):
            failures.append(
                "theta_k^2 / eta_k * log(k+2) must vanish: need strict "
                f"decrease and >= 2x total, got {seq.tolist()}"
            )

    if cs is not None:
        cr = clip_radius(cs, schedule, ks)
        seq = cr ** 2 * el
        values["clip_sq_eta_log"] = seq.tolist()
        values["clip_radius"] = cr.tolist()
        if not (np.all(np.diff(seq) < 0.0) and seq[0] >= 2.0 * seq[-1]):
            failures.append(
                "C_k^2 * eta_k * log(k+2) must vanish: need strict "
                f"decrease and >= 2x total, got {seq.tolist()}"
            )
        if not cr[-1] >= 2.0 * cr[0]:
            failures.append(
                "C_k must grow without bound: need >= 2x growth over the "
                f"checkpoints, got {cr[0]:.4g} -> {cr[-1]:.4g}"
            )

    return ScheduleReport(ok=not failures, failures=failures, values=values)


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise applied to the subgradient before any clipping.

    kinds: none; gaussian(sigma); uniform(bound) on [-bound, bound];
    stable(alpha, beta, scale) with alpha in (1, 2], beta in [-1, 1].
    gaussian and uniform are mean-zero with finite variance. The stable
    kind uses the parameterization whose location-0 member has mean 0 for
    alpha > 1 (exact, not empirically centered), so every kind gives a
    martingale difference sequence; variance is infinite for alpha < 2.
    alpha <= 1 is rejected: the mean does not exist there, so the
    zero-mean noise contract cannot hold.
    """

    kind: str = "none"
    sigma: float = 1.0
    bound: float = 1.0
    alpha: float = 1.5
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; known: {NOISE_KINDS}")
        if self.kind == "gaussian" and not self.sigma > 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.kind == "uniform" and not self.bound > 0.0:
            raise ValueError(f"bound must be > 0, got {self.bound}")
        if self.kind == "stable":
            if not 1.0 < self.alpha <= 2.0:
                raise ValueError(
                    "stability index must lie in (1, 2]; alpha <= 1 has no "
                    f"mean, got {self.alpha}"
                )
            if not -1.0 <= self.beta <= 1.0:
                raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
            if not self.scale > 0.0:
                raise ValueError(f"scale must be > 0, got {self.scale}")


def sample_noise(model: NoiseModel, rng: np.random.Generator, n: int) -> Vector:
    """Draw one i.i.d. noise vector of length n from the model's stream."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if model.kind == "none":
        return np.zeros(n)
    if model.kind == "gaussian":
        return rng.normal(0.0, model.sigma, size=n)
    if model.kind == "uniform":
        return rng.uniform(-model.bound, model.bound, size=n)
    return model.scale * _standard_stable(model.alpha, model.beta, rng, n)


def _standard_stable(alpha: float, beta: float, rng: np.random.Generator,
                     n: int) -> Vector:
    """Chambers-Mallows-Stuck draw of a standard stable variable.

    Characteristic function exp(-|t|^alpha (1 - i beta sign(t)
    tan(pi alpha / 2))), location 0, which has mean 0 for alpha > 1.
    At alpha = 2 the expression collapses to 2 sin(Phi) sqrt(W), a
    mean-zero normal with variance 2 (so scale sigma gives variance
    2 sigma^2).
    """
    phi = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=n)
    w = rng.exponential(1.0, size=n)
    ta = np.tan(np.pi * alpha / 2.0)
    b = np.arctan(beta * ta) / alpha
    s = (1.0 + (beta * ta) ** 2) ** (1.0 / (2.0 * alpha))
    apb = alpha * (phi + b)
    # the second cosine is nonnegative for valid parameters; clamp the
    # sub-ulp negatives rounding can produce before the fractional power
    c2 = np.maximum(np.cos(phi - apb), 0.0)
    out = s * (np.sin(apb) / np.cos(phi) ** (1.0 / alpha)) \
        * (c2 / w) ** ((1.0 - alpha) / alpha)
    return out
