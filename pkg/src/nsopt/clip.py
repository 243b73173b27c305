"""Gradient clipping and the clipped methods SGD-C and ADAM-C.

clip(g, C, region) is the Euclidean projection of g onto the scaled region
C*S: for the ball, g * min(1, C/||g||_2); for the box, the per-coordinate
clamp to [-C, C]. Both methods feed only the clipped gradient into their
moment estimates, which is what makes them robust to heavy-tailed noise:

    SGD-C    m' = (1 - tau1*eta) m + tau1*eta ghat
             x' = x - eta (m' + alpha ghat)

    ADAM-C   m' as above, v' tracks the FIRST moment of |ghat| (variant
             table below), and
             x' = x - eta (rho_v |v'| + epsilon)^(-1) * (rho_m m' + alpha g)

Note two asymmetries of ADAM-C as printed in its defining display: the
preconditioner power is -1 (not -1/2), and the Nesterov term uses the raw
gradient g, not the clipped one. Both are kept; clip_nesterov=True opts
into clipping that term as well.

v' variant table (ghat the clipped gradient):

    first_moment   (1 - tau2*eta) v + tau2*eta |ghat|
    adabelief_c    (1 - tau2*eta) v + tau2*eta |ghat - m'|
    amsgrad_c      max(v, |ghat|) elementwise
    yogi_c         v - tau2*eta sign_tilde(v - |ghat|) * |ghat|

Elementwise throughout, so batched leading axes work as in optim; the
ball projection reduces its norm over the last axis only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Vector
from .optim import DIVERGENCE_BOUND, DivergenceError, ScalingRule, rho

CLIP_VARIANTS = ("first_moment", "adabelief_c", "amsgrad_c", "yogi_c")

# variants whose v-update is a tau2*eta moving average; amsgrad_c's max
# rule involves no tau2, and only the averaged forms get a v correction
_USES_TAU2 = frozenset({"first_moment", "adabelief_c", "yogi_c"})
_EMA_V = frozenset({"first_moment", "adabelief_c"})


@dataclass(frozen=True)
class ClipRegion:
    """Clipping region shape; the scaled set C*S is convex, compact, and
    contains 0 for every C > 0, so the projection is well defined."""

    shape: str = "ball"

    def __post_init__(self) -> None:
        if self.shape not in ("ball", "box"):
            raise ValueError(f"region shape must be 'ball' or 'box', got {self.shape!r}")

    def radius(self, n: int) -> float:
        """Euclidean radius of the unit region in dimension n."""
        return 1.0 if self.shape == "ball" else float(np.sqrt(n))


BALL = ClipRegion("ball")
BOX = ClipRegion("box")


@dataclass
class ClipConfig:
    """Hyperparameters shared by the clipped methods. sgdc_step reads only
    tau1 and alpha; the rest belong to ADAM-C."""

    tau1: float = 1.0
    tau2: float = 1.0
    alpha: float = 0.0
    epsilon: float = 1e-8
    clip_nesterov: bool = False

    def __post_init__(self) -> None:
        if not self.tau1 > 0.0:
            raise ValueError(f"tau1 must be > 0, got {self.tau1}")
        if not self.tau2 > 0.0:
            raise ValueError(f"tau2 must be > 0, got {self.tau2}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass
class ClippedState:
    """Iterate, momentum, and (for ADAM-C) the |ghat| first-moment track.

    SGD-C ignores v; fresh() fills it with zeros so one state type serves
    both methods. v >= 0 is preserved by every ADAM-C variant whenever the
    initial v is nonnegative and tau2*eta <= 1.
    """

    x: Vector
    m: Vector
    v: Vector
    k: int = 0

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.float64)
        self.m = np.asarray(self.m, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if not (self.x.shape == self.m.shape == self.v.shape):
            raise ValueError(
                "state vectors must share one length, got "
                f"{self.x.shape}, {self.m.shape}, {self.v.shape}"
            )
        if self.k < 0:
            raise ValueError(f"iteration counter must be >= 0, got {self.k}")

    @classmethod
    def fresh(cls, x0: Vector, v0: Optional[Vector] = None) -> "ClippedState":
        x0 = np.asarray(x0, dtype=np.float64)
        v = np.zeros_like(x0) if v0 is None else np.asarray(v0, dtype=np.float64)
        return cls(x0, np.zeros_like(x0), v, 0)

    def copy(self) -> "ClippedState":
        return ClippedState(self.x.copy(), self.m.copy(), self.v.copy(), self.k)


def clip(g: Vector, C: float, region: ClipRegion = BALL) -> Vector:
    """Project g onto the scaled region C*S.

    Raw g may be arbitrarily large (heavy-tailed sampling feeds this), but
    NaN is rejected: a NaN coordinate cannot be projected anywhere.

    Exactly idempotent: the ball branch rescales until the recomputed norm
    satisfies norm <= C, so a second application takes the identity path.
    A single rescale can land one ulp above C, which would otherwise make
    clip(clip(g)) differ from clip(g) in the last bit.
    """
    if not C > 0.0:
        raise ValueError(f"clip radius must be > 0, got {C}")
    g = np.asarray(g, dtype=np.float64)
    if np.isnan(g).any():
        raise ValueError("cannot clip a gradient with NaN entries")
    if region.shape == "box":
        return np.clip(g, -C, C)
    out = g.copy()
    if g.ndim == 1:
        for _ in range(8):
            norm = float(np.sqrt(np.sum(out * out)))
            if norm <= C:
                return out
            out *= C / norm
        return out
    for _ in range(8):
        norm = np.sqrt(np.sum(out * out, axis=-1, keepdims=True))
        over = norm > C
        if not over.any():
            return out
        out = np.where(over, out * (C / np.where(over, norm, 1.0)), out)
    return out


def sgdc_step(state: ClippedState, g: Vector, eta: float, C: float,
              cfg: ClipConfig, region: ClipRegion = BALL) -> ClippedState:
    """One SGD-C update; the momentum and the Nesterov term both see the
    clipped gradient, so the displacement obeys
    ||x' - x|| <= eta (||m'|| + alpha * C * radius(S))."""
    t1 = cfg.tau1 * eta
    if not 0.0 < t1 <= 1.0:
        raise ValueError(f"need tau1*eta in (0, 1], got {t1}")
    ghat = clip(g, C, region)
    m1 = (1.0 - t1) * state.m + t1 * ghat
    x1 = state.x - eta * (m1 + cfg.alpha * ghat) if cfg.alpha != 0.0 \
        else state.x - eta * m1
    _guard(x1, state.k)
    return ClippedState(x1, m1, state.v, state.k + 1)


def adamc_step(state: ClippedState, g: Vector, eta: float, C: float,
               cfg: ClipConfig, scaling: Optional[ScalingRule] = None,
               region: ClipRegion = BALL,
               v_variant: str = "first_moment") -> ClippedState:
    """One ADAM-C update. v tracks the first moment of |ghat| (variant
    table in the module docstring) and the preconditioner power is -1.

    tau2*eta <= 1 is required for the variants whose v-update uses tau2;
    amsgrad_c's max rule is exempt. The Nesterov term uses raw g unless
    cfg.clip_nesterov is set.
    """
    if v_variant not in CLIP_VARIANTS:
        raise ValueError(f"unknown v_variant {v_variant!r}; known: {CLIP_VARIANTS}")
    t1 = cfg.tau1 * eta
    if not 0.0 < t1 <= 1.0:
        raise ValueError(f"need tau1*eta in (0, 1], got {t1}")
    t2 = cfg.tau2 * eta
    if v_variant in _USES_TAU2 and not 0.0 < t2 <= 1.0:
        raise ValueError(f"need tau2*eta in (0, 1] for {v_variant}, got {t2}")

    ghat = clip(g, C, region)
    a = np.abs(ghat)
    m1 = (1.0 - t1) * state.m + t1 * ghat
    if v_variant == "first_moment":
        v1 = (1.0 - t2) * state.v + t2 * a
    elif v_variant == "adabelief_c":
        v1 = (1.0 - t2) * state.v + t2 * np.abs(ghat - m1)
    elif v_variant == "amsgrad_c":
        v1 = np.maximum(state.v, a)
    else:   # yogi_c
        v1 = state.v - t2 * np.sign(state.v - a) * a

    rho_m = rho(scaling, eta, cfg.tau1, "m")
    rho_v = rho(scaling, eta, cfg.tau2, "v") if v_variant in _EMA_V else 1.0
    g_nest = ghat if cfg.clip_nesterov else np.asarray(g, dtype=np.float64)
    num = rho_m * m1 if cfg.alpha == 0.0 else rho_m * m1 + cfg.alpha * g_nest
    x1 = state.x - eta * (num / (rho_v * np.abs(v1) + cfg.epsilon))
    _guard(x1, state.k)
    return ClippedState(x1, m1, v1, state.k + 1)


def _guard(x1: Vector, k: int) -> None:
    xm = float(np.max(np.abs(x1)))
    if not xm <= DIVERGENCE_BOUND:   # catches NaN as well
        raise DivergenceError(
            f"iterate norm {xm} exceeded the boundedness guard "
            f"{DIVERGENCE_BOUND:g} at step {k}", x_inf=xm
        )
