"""Dense float64 vectors, elementwise sign selections, and the optimizer state triple.

Every optimizer in this package works on a triple (x, m, v) of equal-length
float64 vectors: the iterate, the momentum estimate, and the second-moment
(or first-absolute-moment) estimate. Vectors are plain 1-D numpy arrays;
the helpers here add the length and finiteness checking that the public
operations promise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# A Vector is a 1-D numpy array of float64. Kept as a plain ndarray so the
# hot loops pay no wrapper cost.
Vector = np.ndarray


class NumericOverflowError(ArithmeticError):
    """A public vector operation produced a NaN or infinity."""


def as_vector(values) -> Vector:
    """Build a float64 vector from any sequence, rejecting non-finite entries."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        v = np.atleast_1d(v.squeeze())
        if v.ndim != 1:
            raise ValueError(f"expected a 1-D vector, got shape {np.shape(values)}")
    if not np.all(np.isfinite(v)):
        raise NumericOverflowError("vector has non-finite entries")
    return v


def _require_same_length(a: Vector, b: Vector) -> None:
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")


def _require_finite(result: Vector, op: str) -> Vector:
    if not np.all(np.isfinite(result)):
        raise NumericOverflowError(f"{op} produced non-finite entries")
    return result


def hadamard(a: Vector, b: Vector) -> Vector:
    """Elementwise product a_i * b_i of two equal-length vectors."""
    _require_same_length(a, b)
    return _require_finite(a * b, "hadamard")


def shifted_power(v: Vector, shift: float, exponent: float) -> Vector:
    """Elementwise (|v_i| + shift) ** exponent with shift > 0.

    The positive shift keeps every base entry strictly positive, so the
    power is defined for any real exponent (exponent 0 gives all ones).
    """
    if not shift > 0.0:
        raise ValueError(f"shift must be > 0, got {shift}")
    base = np.abs(v) + shift
    return _require_finite(base ** exponent, "shifted_power")


def sign_tilde(x: Vector) -> Vector:
    """Strict sign: -1 for negative, +1 for positive, exactly 0 at 0."""
    return np.sign(x)


@dataclass(frozen=True)
class SignSelection:
    """Single-valued selection of the set-valued sign mapping.

    sign(t) is -1 for t < 0 and +1 for t > 0; at t = 0 the set-valued sign
    is the whole interval [-1, 1] and ``at_zero`` picks one value from it.
    Whatever the choice, sign_tilde(x) * selection(x) == sign_tilde(x)**2
    holds elementwise, so downstream quantities that only see the product
    with sign_tilde are selection-independent.
    """

    at_zero: float = 0.0

    def __post_init__(self) -> None:
        if not -1.0 <= self.at_zero <= 1.0:
            raise ValueError(f"at_zero must lie in [-1, 1], got {self.at_zero}")

    def __call__(self, x: Vector) -> Vector:
        s = np.sign(x)
        if self.at_zero != 0.0:
            s = np.where(x == 0.0, self.at_zero, s)
        return s


@dataclass
class OptimizerState:
    """The (x, m, v) triple plus the iteration counter.

    x is the iterate, m the momentum estimate, v the moment estimate used to
    build the diagonal preconditioner. All three share one length. The
    v >= 0 invariant is maintained by every built-in v-update whenever the
    initial v is nonnegative; it is not enforced here because the
    differential-inclusion simulator owns states with the same shape.
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
    def fresh(cls, x0, v0=None) -> "OptimizerState":
        """State at iteration 0 with zero momentum (m0 = 0, v0 = 0 defaults)."""
        x = as_vector(x0)
        m = np.zeros_like(x)
        v = np.zeros_like(x) if v0 is None else as_vector(v0)
        if v.shape != x.shape:
            raise ValueError(f"v0 length {v.shape} does not match x0 length {x.shape}")
        return cls(x=x, m=m, v=v, k=0)

    def copy(self) -> "OptimizerState":
        return OptimizerState(self.x.copy(), self.m.copy(), self.v.copy(), self.k)
