"""Momentum / second-moment update engine with five estimator rules.

One step with stepsize eta and gradient selection g:

    m' = (1 - tau1*eta) m + tau1*eta g
    v' = estimator rule (variant table below)
    x' = x - eta (rho_v |v'| + epsilon)^(-gamma) * (rho_m m' + alpha g)

Variant table for v':

    adam, nadam   (1 - tau2*eta) v + tau2*eta g^2
    adabelief     (1 - tau2*eta) v + tau2*eta (g - m')^2
    amsgrad       max(v, g^2) elementwise
    yogi          v - tau2*eta sign_tilde(v - g^2) * g^2

nadam differs from adam only through a positive Nesterov weight alpha.
The canonical method uses gamma = 1/2 (inverse square root preconditioner);
gamma is kept general because the continuous-time analysis and the Lyapunov
function use the same family.

All vector updates are elementwise, so state vectors may carry leading
batch axes to advance many independent runs in one call; the scalar
stepsize and scaling factors are shared across the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import OptimizerState, Vector

VARIANTS = ("adam", "adabelief", "amsgrad", "nadam", "yogi")

# variants whose v-update is a tau2*eta convex combination (needs tau2*eta <= 1);
# amsgrad's max rule involves no tau2 and accepts any tau2 > 0
_USES_TAU2 = frozenset({"adam", "nadam", "adabelief", "yogi"})

# variants whose v-update is an exponential moving average; only these get a
# v bias correction (amsgrad and yogi classically run uncorrected v)
_EMA_V = frozenset({"adam", "nadam", "adabelief"})

# boundedness guard: beyond this the run is recorded as diverged
DIVERGENCE_BOUND = 1e8


class DivergenceError(RuntimeError):
    """The iterate left the trust region (or went non-finite).

    x_inf carries the offending max-abs iterate value (NaN if the step
    went non-finite) so callers can record how far the run blew up
    without re-deriving the rejected state."""

    def __init__(self, message: str, state: Optional[OptimizerState] = None,
                 x_inf: float = float("nan")):
        super().__init__(message)
        self.state = state
        self.x_inf = x_inf


@dataclass
class AfmConfig:
    """Hyperparameters of the update family.

    alpha >= 0 weighs the Nesterov-style raw-gradient term in the x update
    (default 0.1 for nadam, 0 otherwise). gamma >= 0 is the preconditioner
    power. kappa is the variant constant appearing in the stability
    condition (1 - kappa) * gamma * tau2 <= 2 * tau1; it defaults to 1 for
    amsgrad and 0 for the rest.
    """

    variant: str = "adam"
    alpha: Optional[float] = None
    gamma: float = 0.5
    epsilon: float = 1e-8
    tau1: float = 1.0
    tau2: float = 1.0
    kappa: Optional[float] = None

    def __post_init__(self) -> None:
        v = self.variant.lower()
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; known: {VARIANTS}")
        self.variant = v
        if self.alpha is None:
            self.alpha = 0.1 if v == "nadam" else 0.0
        if self.kappa is None:
            self.kappa = 1.0 if v == "amsgrad" else 0.0


@dataclass
class ConfigReport:
    ok: bool
    warnings: list = field(default_factory=list)


def validate_config(cfg: AfmConfig) -> ConfigReport:
    """Check hyperparameters; hard errors raise, guarantee gaps only warn.

    The convergence guarantee needs (1 - kappa) * gamma * tau2 <= 2 * tau1
    (at gamma = 1/2: (1 - kappa) * tau2 <= 4 * tau1). amsgrad carries
    kappa = 1, so any tau1, tau2 > 0 is accepted for it. Violation for the
    kappa = 0 variants loses the guarantee but does not imply divergence,
    so it surfaces as a warning, not an error.
    """
    for name in ("tau1", "tau2", "epsilon"):
        if not getattr(cfg, name) > 0.0:
            raise ValueError(f"{name} must be > 0, got {getattr(cfg, name)}")
    if cfg.alpha < 0.0:
        raise ValueError(f"alpha must be >= 0, got {cfg.alpha}")
    if cfg.gamma < 0.0:
        raise ValueError(f"gamma must be >= 0, got {cfg.gamma}")
    if cfg.kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {cfg.kappa}")
    warnings = []
    canonical = 1.0 if cfg.variant == "amsgrad" else 0.0
    if cfg.kappa != canonical:
        warnings.append(
            f"kappa={cfg.kappa} departs from the variant table value "
            f"{canonical} for {cfg.variant}"
        )
    lhs = (1.0 - cfg.kappa) * cfg.gamma * cfg.tau2
    if lhs > 2.0 * cfg.tau1:
        warnings.append(
            "stability condition (1-kappa)*gamma*tau2 <= 2*tau1 violated "
            f"({lhs:.6g} > {2.0 * cfg.tau1:.6g}); the convergence guarantee "
            "is lost but divergence is not implied"
        )
    return ConfigReport(ok=not warnings, warnings=warnings)


@dataclass
class ScalingRule:
    """Scaling factors rho_m, rho_v applied to m' and |v'| in the x update.

    mode "none" emits 1 always. mode "bias_correction" keeps one running
    product p per moment, updates p <- p * (1 - tau*eta) each step, and
    emits 1 / (1 - p); under a constant stepsize this is the classical
    1 / (1 - beta^k) correction, and it tends to 1 whenever the stepsizes
    sum to infinity. The v-side correction only applies to the moving-
    average variants; amsgrad and yogi run with rho_v = 1.
    """

    mode: str = "bias_correction"
    p_m: float = 1.0
    p_v: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("none", "bias_correction"):
            raise ValueError(f"unknown scaling mode {self.mode!r}")

    def reset(self) -> None:
        self.p_m = 1.0
        self.p_v = 1.0


def rho(scaling: Optional[ScalingRule], eta: float, tau: float,
        moment: str = "m") -> float:
    """Advance the running product for one moment and return its rho.

    Stateful: each call advances p once, so call exactly once per moment
    per step. Requires tau*eta in (0, 1] in bias_correction mode; once the
    product underflows to 0 the emitted value is exactly 1 thereafter.
    """
    if scaling is None or scaling.mode == "none":
        return 1.0
    t = tau * eta
    if not 0.0 < t <= 1.0:
        raise ValueError(f"bias correction requires tau*eta in (0, 1], got {t}")
    if moment == "m":
        scaling.p_m *= 1.0 - t
        p = scaling.p_m
    elif moment == "v":
        scaling.p_v *= 1.0 - t
        p = scaling.p_v
    else:
        raise ValueError(f"moment must be 'm' or 'v', got {moment!r}")
    return 1.0 / (1.0 - p)


def v_update(variant: str, v: Vector, g: Vector, m_next: Vector,
             eta: float, tau2: float) -> Vector:
    """Second-moment estimator update; see the variant table in the module
    docstring. Preserves v >= 0 elementwise for every variant."""
    if variant == "amsgrad":
        return np.maximum(v, g * g)
    t2 = tau2 * eta
    if variant == "yogi":
        g2 = g * g
        return v - t2 * np.sign(v - g2) * g2
    if variant == "adabelief":
        r = g - m_next
        return (1.0 - t2) * v + t2 * (r * r)
    # adam / nadam
    return (1.0 - t2) * v + t2 * (g * g)


def step(state: OptimizerState, g: Vector, eta: float, cfg: AfmConfig,
         scaling: Optional[ScalingRule] = None) -> OptimizerState:
    """One update of the (x, m, v) triple with gradient selection g.

    Preconditions: eta > 0, tau1*eta <= 1, and tau2*eta <= 1 for the
    variants whose v-update uses tau2 (amsgrad is exempt, its max rule
    accepts any tau2). v >= 0 elementwise is assumed, not checked.
    Raises DivergenceError when the new iterate exceeds the boundedness
    guard or goes non-finite.
    """
    t1 = cfg.tau1 * eta
    if not 0.0 < t1 <= 1.0:
        raise ValueError(f"need tau1*eta in (0, 1], got {t1}")
    if cfg.variant in _USES_TAU2 and not 0.0 < cfg.tau2 * eta <= 1.0:
        raise ValueError(
            f"need tau2*eta in (0, 1] for {cfg.variant}, got {cfg.tau2 * eta}"
        )
    m1 = (1.0 - t1) * state.m + t1 * g
    v1 = v_update(cfg.variant, state.v, g, m1, eta, cfg.tau2)
    rho_m = rho(scaling, eta, cfg.tau1, "m")
    rho_v = rho(scaling, eta, cfg.tau2, "v") if cfg.variant in _EMA_V else 1.0

    num = rho_m * m1 if cfg.alpha == 0.0 else rho_m * m1 + cfg.alpha * g
    base = rho_v * np.abs(v1) + cfg.epsilon
    if cfg.gamma == 0.5:
        x1 = state.x - eta * (num / np.sqrt(base))
    elif cfg.gamma == 0.0:
        x1 = state.x - eta * num
    else:
        x1 = state.x - eta * (num * base ** (-cfg.gamma))

    xm = float(np.max(np.abs(x1)))
    if not xm <= DIVERGENCE_BOUND:   # catches NaN as well
        bad = OptimizerState(x1, m1, v1, state.k + 1)
        raise DivergenceError(
            f"iterate norm {xm} exceeded the boundedness guard "
            f"{DIVERGENCE_BOUND:g} at step {state.k}", bad, x_inf=xm
        )
    return OptimizerState(x1, m1, v1, state.k + 1)


def u_selection(variant: str, v: Vector, grads: np.ndarray,
                m: Optional[Vector] = None) -> Vector:
    """A selection of the set-valued map U(x, m, v) driving the v-flow.

    grads stacks one conservative-gradient selection per component, shape
    (N, n). The set-valued sign at 0 is resolved by sign_tilde (0 at 0),
    matching the yogi tie rule. For v >= 0 every selection satisfies
    sign_tilde(v) * U >= kappa * |v| elementwise with the variant's kappa.
    """
    grads = np.atleast_2d(grads)
    if variant == "adabelief":
        if m is None:
            raise ValueError("adabelief U needs the momentum m")
        s = np.mean((grads - m) ** 2, axis=0)
        return np.sign(v) * s
    if variant == "amsgrad":
        s = np.mean(np.maximum(np.abs(v)[None, :], grads * grads), axis=0)
        return np.sign(v) * s
    s = np.mean(grads * grads, axis=0)
    if variant == "yogi":
        return v - np.sign(v - s) * s
    if variant in ("adam", "nadam"):
        return np.sign(v) * s
    raise ValueError(f"unknown variant {variant!r}")
