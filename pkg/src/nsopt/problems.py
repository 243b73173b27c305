"""Finite-sum nonsmooth objectives with conservative-gradient selections.

Each problem is a finite sum f(x) = (1/N) * sum_i f_i(x). ``value(i, x)``
evaluates one component and ``subgrad(i, x)`` returns one element of the
conservative gradient field of that component, induced by the chain rule
together with an explicit kink policy (the value the selection takes at
each nonsmooth primitive's kink). At points where a component is
differentiable the selection equals its gradient.

Built-in catalog (addressable by string id from CLI configs):

- ``l1_center``: f(x) = (1/N) sum_i ||x - a_i||_1, closed-form gap.
- ``max_affine``: max of affine pieces, gap via a tiny min-norm-point solve.
- ``spurious``: the 1-D identity written as relu(x) - relu(-x). With
  relu'(0) selected as 0 the chain rule returns 0 at x = 0 even though the
  function has slope 1 everywhere, so x = 0 is a spurious stationary point
  of the selection field.
- ``relu_mlp``: a small ReLU network trained by squared or logistic loss on
  a synthetic two-cluster dataset (or a CSV file); reverse-mode tape
  backprop with per-primitive kink policies; no closed-form gap.
- ``noisy_linear``: least squares (smooth); gap is the full gradient norm.

Vectorized evaluation: every operation is written with broadcasting-safe
numpy, so ``i`` may be an integer array and ``x`` may carry leading batch
axes; batched calls run many independent evaluations in one sweep and
return stacked results. Scalar calls behave exactly as the signatures read.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .core import Vector, as_vector

# A point is treated as "near a kink" when any kink margin is below this;
# finite-difference consistency checks skip such points.
KINK_MARGIN = 1e-3


class CapabilityError(RuntimeError):
    """The problem does not support the requested operation."""


@dataclass(frozen=True)
class KinkPolicy:
    """Values the chain-rule selection takes at nonsmooth primitive kinks.

    relu_at_zero is the selected relu'(0), any value in [0, 1] (mainstream
    reverse-mode frameworks use 0). abs_at_zero is the selected d|t|/dt at
    t = 0, any value in [-1, 1]. max_tie picks the winner among exactly
    tied max inputs: "first" takes the lowest index, "mean" averages the
    tied gradients (both lie in the convex hull of the one-sided choices).
    """

    relu_at_zero: float = 0.0
    abs_at_zero: float = 0.0
    max_tie: str = "first"

    def __post_init__(self) -> None:
        if not 0.0 <= self.relu_at_zero <= 1.0:
            raise ValueError(f"relu_at_zero must lie in [0, 1], got {self.relu_at_zero}")
        if not -1.0 <= self.abs_at_zero <= 1.0:
            raise ValueError(f"abs_at_zero must lie in [-1, 1], got {self.abs_at_zero}")
        if self.max_tie not in ("first", "mean"):
            raise ValueError(f"max_tie must be 'first' or 'mean', got {self.max_tie!r}")


DEFAULT_POLICY = KinkPolicy()


class Problem:
    """Base class: finite-sum objective with a conservative-gradient selection."""

    name: str = "problem"
    n: int = 0
    N: int = 0
    stationary_set: Optional[str] = None
    has_gap: bool = False

    def value(self, i, x):
        raise NotImplementedError

    def subgrad(self, i, x, policy: KinkPolicy = DEFAULT_POLICY):
        raise NotImplementedError

    def gap(self, x) -> float:
        raise CapabilityError(f"{self.name} has no closed-form stationarity gap")

    def kink_margin(self, i, x) -> float:
        """Distance of the evaluation at (i, x) from the nearest kink; inf if smooth."""
        return np.inf

    def objective(self, x) -> float:
        """Full objective f(x) = (1/N) sum_i value(i, x)."""
        idx = np.arange(self.N)
        vals = self.value(idx, np.broadcast_to(x, (self.N,) + np.shape(x)))
        return float(np.mean(vals))

    def mean_subgrad(self, x, policy: KinkPolicy = DEFAULT_POLICY) -> Vector:
        """(1/N) sum_i subgrad(i, x): one element of the field of the full f."""
        total = np.zeros(self.n)
        for i in range(self.N):
            total += self.subgrad(i, x, policy)
        return total / self.N

    def surrogate_gap(self, x, policy: KinkPolicy = DEFAULT_POLICY) -> float:
        """Infinity norm of the mean selection; stationarity surrogate when
        no closed-form gap exists."""
        return float(np.max(np.abs(self.mean_subgrad(x, policy))))

    def default_init(self, rng: np.random.Generator) -> Vector:
        return rng.uniform(-1.0, 1.0, self.n)

    def _check_index(self, i) -> None:
        idx = np.asarray(i)
        if np.any(idx < 0) or np.any(idx >= self.N):
            raise IndexError(f"component index {i} out of range [0, {self.N})")


# ---------------------------------------------------------------------------
# l1_center


class L1CenterProblem(Problem):
    """f(x) = (1/N) sum_i ||x - a_i||_1 over given centers a_i.

    Separable per coordinate; the stationary set is the coordinate-wise set
    of weighted medians of the center coordinates. The gap uses a kink
    tolerance: a coordinate within ``kink_tol`` of a center contributes the
    full interval [-1, 1] to the per-coordinate selection set, so the gap
    reaches exactly 0 once every coordinate settles within tolerance of a
    median. Grids probing "gap == 0 exactly on the stationary set" must use
    spacing coarser than kink_tol.
    """

    name = "l1_center"
    has_gap = True

    def __init__(self, centers, kink_tol: float = KINK_MARGIN):
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        self.centers = centers
        self.N, self.n = centers.shape
        self.kink_tol = float(kink_tol)
        self.stationary_set = (
            "coordinate-wise medians of the center coordinates "
            "(per coordinate, points where the signs of x_j - a_ij sum to zero)"
        )

    def value(self, i, x):
        self._check_index(i)
        u = np.asarray(x) - self.centers[i]
        return np.sum(np.abs(u), axis=-1)

    def subgrad(self, i, x, policy: KinkPolicy = DEFAULT_POLICY):
        self._check_index(i)
        u = np.asarray(x) - self.centers[i]
        s = np.sign(u)
        if policy.abs_at_zero != 0.0:
            s = np.where(u == 0.0, policy.abs_at_zero, s)
        return s

    def kink_margin(self, i, x) -> float:
        u = np.asarray(x) - self.centers[i]
        return float(np.min(np.abs(u)))

    def gap(self, x) -> float:
        u = np.asarray(x)[None, :] - self.centers          # (N, n)
        near = np.abs(u) <= self.kink_tol
        s = np.sign(u)
        lo = np.where(near, -1.0, s).mean(axis=0)          # per-coordinate interval
        hi = np.where(near, 1.0, s).mean(axis=0)
        d = np.maximum(np.maximum(lo, -hi), 0.0)           # dist(0, [lo, hi])
        return float(np.sqrt(np.sum(d * d)))

    def default_init(self, rng: np.random.Generator) -> Vector:
        return self.centers.mean(axis=0) + rng.uniform(-1.0, 1.0, self.n)


# ---------------------------------------------------------------------------
# max_affine


def _min_norm_in_hull(points: np.ndarray) -> float:
    """Euclidean distance from 0 to the convex hull of the given row vectors.

    Solves min ||P^T lam|| over the simplex via a penalized nonnegative
    least-squares formulation: the simplex constraint sum(lam) = 1 enters as
    a heavily weighted extra row, and the active-set NNLS solve is exact for
    these tiny instances.
    """
    P = np.atleast_2d(points)
    if P.shape[0] == 1:
        return float(np.linalg.norm(P[0]))
    scale = max(1.0, float(np.max(np.abs(P))))
    rho = 1e7 * scale
    A = np.vstack([P.T, np.full((1, P.shape[0]), rho)])
    b = np.concatenate([np.zeros(P.shape[1]), [rho]])
    lam, _ = nnls(A, b)
    total = lam.sum()
    if total <= 0.0:
        return float(np.min(np.linalg.norm(P, axis=1)))
    lam = lam / total
    dist = float(np.linalg.norm(P.T @ lam))
    # below the solve's own precision the point is in the hull; report 0 exactly
    return 0.0 if dist <= 1e-8 * scale else dist


class MaxAffineProblem(Problem):
    """f(x) = max_j (<w_j, x> + b_j), a single-component (N = 1) problem.

    The selection at a point returns the gradient of an achieving piece
    (ties broken by the max_tie policy). The gap treats every piece within
    ``active_tol`` of the max as active and returns the distance from 0 to
    the convex hull of the active gradients.
    """

    name = "max_affine"
    has_gap = True

    def __init__(self, weights, offsets, active_tol: float = KINK_MARGIN):
        self.weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
        self.offsets = np.asarray(offsets, dtype=np.float64)
        if self.weights.shape[0] != self.offsets.shape[0]:
            raise ValueError("weights and offsets must list the same number of pieces")
        self.J, self.n = self.weights.shape
        self.N = 1
        self.active_tol = float(active_tol)
        self.stationary_set = (
            "points where 0 lies in the convex hull of the gradients of the "
            "active affine pieces"
        )

    def _scores(self, x):
        return np.asarray(x) @ self.weights.T + self.offsets

    def value(self, i, x):
        self._check_index(i)
        return np.max(self._scores(x), axis=-1)

    def subgrad(self, i, x, policy: KinkPolicy = DEFAULT_POLICY):
        self._check_index(i)
        scores = self._scores(x)
        if scores.ndim != 1:
            raise ValueError("max_affine subgrad supports a single point at a time")
        top = np.max(scores)
        if policy.max_tie == "mean":
            tied = scores == top
            return self.weights[tied].mean(axis=0)
        return self.weights[int(np.argmax(scores))].copy()

    def kink_margin(self, i, x) -> float:
        scores = np.sort(self._scores(x))
        if scores.size < 2:
            return np.inf
        return float(scores[-1] - scores[-2])

    def gap(self, x) -> float:
        scores = self._scores(x)
        active = scores >= np.max(scores) - self.active_tol
        return _min_norm_in_hull(self.weights[active])


# ---------------------------------------------------------------------------
# spurious


class SpuriousProblem(Problem):
    """The 1-D identity f(x) = relu(x) - relu(-x), which equals x everywhere.

    The honest generalized gradient is {1} at every point, yet the chain
    rule applied to the relu composition returns relu'(x) + relu'(-x); with
    the selection relu'(0) = 0 this is 0 at x = 0, making the origin a
    stationary point of the selection field that the function itself does
    not have. At x = 0 the full selection set is [0, 2], so the gap there is
    0; everywhere else the field is {1} and the gap is 1. No kink tolerance
    is applied: only an exact hit of x = 0 counts as spurious-stationary.
    """

    name = "spurious"
    has_gap = True

    def __init__(self):
        self.n = 1
        self.N = 1
        self.stationary_set = "the single spurious point {0}"

    def value(self, i, x):
        self._check_index(i)
        x = np.asarray(x)
        return (np.maximum(x, 0.0) - np.maximum(-x, 0.0)).sum(axis=-1)

    def subgrad(self, i, x, policy: KinkPolicy = DEFAULT_POLICY):
        self._check_index(i)
        x = np.asarray(x, dtype=np.float64)
        p = policy.relu_at_zero
        d_pos = np.where(x > 0.0, 1.0, np.where(x < 0.0, 0.0, p))   # relu'(x)
        d_neg = np.where(-x > 0.0, 1.0, np.where(-x < 0.0, 0.0, p)) # relu'(-x)
        return d_pos + d_neg

    def kink_margin(self, i, x) -> float:
        return float(np.min(np.abs(x)))

    def gap(self, x) -> float:
        x = np.asarray(x)
        return 0.0 if float(x.reshape(-1)[0]) == 0.0 else 1.0


# ---------------------------------------------------------------------------
# relu_mlp: tape-based conservative backprop


@dataclass(frozen=True)
class MlpSpec:
    """Architecture plus dataset for the small nonsmooth network.

    widths lists layer sizes input..output. activation is "relu" or
    "leaky_relu" (with leaky_slope in (0, 1)). loss is "squared" (targets
    are vectors of the output width, e.g. one-hot rows) or "logistic"
    (binary margin form, output width must be 1, labels in {-1, +1}).
    """

    widths: tuple
    activation: str = "relu"
    leaky_slope: float = 0.01
    loss: str = "squared"
    features: np.ndarray = field(default=None, repr=False)
    labels: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.widths) < 2:
            raise ValueError("widths must list at least input and output sizes")
        if self.activation not in ("relu", "leaky_relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must lie in (0, 1)")
        if self.loss not in ("squared", "logistic"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "logistic" and self.widths[-1] != 1:
            raise ValueError("logistic loss requires output width 1")
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[1] != self.widths[0]:
            raise ValueError("features must be (samples, input width)")
        labels = np.asarray(self.labels, dtype=np.float64)
        if self.loss == "squared":
            if labels.ndim != 2 or labels.shape != (feats.shape[0], self.widths[-1]):
                raise ValueError("squared loss labels must be (samples, output width)")
        else:
            labels = labels.reshape(-1)
            if labels.shape[0] != feats.shape[0] or not np.all(np.abs(labels) == 1.0):
                raise ValueError("logistic labels must be one of {-1, +1} per sample")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def num_params(self) -> int:
        return sum(
            o * i + o for i, o in zip(self.widths[:-1], self.widths[1:])
        )


def synthetic_two_cluster(samples: int = 256, seed: int = 0, loss: str = "squared"):
    """2-D features in two Gaussian clusters with a fixed seed.

    Returns (features, labels) where labels are one-hot rows for squared
    loss and {-1, +1} for logistic loss.
    """
    rng = np.random.default_rng(seed)
    half = samples // 2
    a = rng.normal(loc=(1.0, 1.0), scale=0.7, size=(half, 2))
    b = rng.normal(loc=(-1.0, -1.0), scale=0.7, size=(samples - half, 2))
    feats = np.vstack([a, b])
    if loss == "squared":
        labels = np.zeros((samples, 2))
        labels[:half, 0] = 1.0
        labels[half:, 1] = 1.0
    else:
        labels = np.concatenate([np.ones(half), -np.ones(samples - half)])
    perm = rng.permutation(samples)
    return feats[perm], labels[perm]


def load_dataset_csv(path, loss: str = "squared", output_width: int = 2):
    """Load (features, labels) from a CSV with rows: feature..., label.

    The final column is an integer class id; squared loss gets one-hot rows
    of the given output width, logistic loss maps classes {0, 1} to -1/+1.
    """
    raw = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    feats, cls = raw[:, :-1], raw[:, -1].astype(int)
    if loss == "squared":
        if np.any(cls < 0) or np.any(cls >= output_width):
            raise ValueError(f"class ids must lie in [0, {output_width})")
        labels = np.zeros((len(cls), output_width))
        labels[np.arange(len(cls)), cls] = 1.0
    else:
        if not np.all((cls == 0) | (cls == 1)):
            raise ValueError("logistic loss expects class ids in {0, 1}")
        labels = np.where(cls == 1, 1.0, -1.0)
    return feats, labels


def _relu_mask(z, at_zero: float):
    if at_zero == 0.0:
        # exact zeros fall into the 'not > 0' branch, which is the 0 selection
        return (z > 0.0).astype(np.float64)
    return np.where(z > 0.0, 1.0, np.where(z < 0.0, 0.0, at_zero))


def _leaky_mask(z, slope: float, at_zero: float):
    sel0 = slope + (1.0 - slope) * at_zero   # a point of [slope, 1]
    return np.where(z > 0.0, 1.0, np.where(z < 0.0, slope, sel0))


class MlpProblem(Problem):
    """Component i is the loss of the network on sample i; the optimization
    variable is the flattened parameter vector (row-major weight matrices
    followed by biases, layer by layer).

    Differentiation is reverse-mode over an explicit tape: the forward pass
    records one entry per primitive (affine, activation, loss) with the
    values the backward rules need, and the backward pass walks the tape in
    reverse, resolving each activation kink through the policy mask. All
    tape operations broadcast, so a batch of parameter vectors and sample
    indices is swept in one pass.
    """

    name = "relu_mlp"

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        self.n = spec.num_params
        self.N = spec.features.shape[0]
        self.stationary_set = None
        # flat-slice table: (offset, size, shape) per parameter tensor
        self._slices = []
        off = 0
        for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
            self._slices.append((off, fan_out * fan_in, (fan_out, fan_in)))
            off += fan_out * fan_in
            self._slices.append((off, fan_out, (fan_out,)))
            off += fan_out

    def _unpack(self, x):
        """Views (W, b) per layer over the trailing axis of x."""
        x = np.asarray(x)
        lead = x.shape[:-1]
        return [
            x[..., off : off + size].reshape(lead + shape)
            for off, size, shape in self._slices
        ]

    def _forward(self, i, x, policy: KinkPolicy):
        """Run the network forward, recording the tape.

        Returns (loss value, tape). Tape entries are (kind, saved...) in
        execution order; backward consumes them in reverse.
        """
        self._check_index(i)
        params = self._unpack(x)
        inp = self.spec.features[i]            # (..., d) after fancy indexing
        tape = []
        a = inp
        L = len(self.spec.widths) - 1
        for layer in range(L):
            W, b = params[2 * layer], params[2 * layer + 1]
            z = (W @ a[..., None])[..., 0] + b
            tape.append(("affine", W, a))
            if layer < L - 1:
                if self.spec.activation == "relu":
                    mask = _relu_mask(z, policy.relu_at_zero)
                else:
                    mask = _leaky_mask(z, self.spec.leaky_slope, policy.relu_at_zero)
                a = z * mask
                tape.append(("act", mask))
            else:
                a = z
        y = self.spec.labels[i]
        if self.spec.loss == "squared":
            r = a - y
            val = 0.5 * np.sum(r * r, axis=-1)
            tape.append(("sq_loss", r))
        else:
            t = -y * a[..., 0]
            val = np.logaddexp(0.0, t)
            sig = 1.0 / (1.0 + np.exp(-t))     # d val / d t
            tape.append(("logistic", -y * sig))
        return val, tape

    def value(self, i, x):
        val, _ = self._forward(i, x, DEFAULT_POLICY)
        return val if np.ndim(val) else float(val)

    def subgrad(self, i, x, policy: KinkPolicy = DEFAULT_POLICY):
        _, tape = self._forward(i, x, policy)
        x = np.asarray(x)
        out = np.empty(x.shape, dtype=np.float64)
        layer = len(self.spec.widths) - 2
        grad = None
        for entry in reversed(tape):
            kind = entry[0]
            if kind == "sq_loss":
                grad = entry[1]
            elif kind == "logistic":
                grad = entry[1][..., None]
            elif kind == "act":
                grad = grad * entry[1]
            else:  # affine: grad wrt output -> (dW, db, grad wrt input)
                W, a = entry[1], entry[2]
                dW = grad[..., :, None] * a[..., None, :]
                off_w, size_w, shape_w = self._slices[2 * layer]
                off_b, size_b, _ = self._slices[2 * layer + 1]
                out[..., off_w : off_w + size_w] = dW.reshape(x.shape[:-1] + (size_w,))
                out[..., off_b : off_b + size_b] = grad
                if layer > 0:
                    grad = (np.swapaxes(W, -1, -2) @ grad[..., None])[..., 0]
                layer -= 1
        return out

    def kink_margin(self, i, x) -> float:
        """Smallest |pre-activation| over all hidden units for sample i."""
        params = self._unpack(np.asarray(x))
        a = self.spec.features[i]
        margin = np.inf
        L = len(self.spec.widths) - 1
        for layer in range(L - 1):
            W, b = params[2 * layer], params[2 * layer + 1]
            z = (W @ a[..., None])[..., 0] + b
            margin = min(margin, float(np.min(np.abs(z))))
            a = np.maximum(z, 0.0) if self.spec.activation == "relu" else np.where(
                z > 0.0, z, self.spec.leaky_slope * z
            )
        return margin

    def objective(self, x) -> float:
        idx = np.arange(self.N)
        vals = self.value(idx, np.asarray(x))
        return float(np.mean(vals))

    def mean_subgrad(self, x, policy: KinkPolicy = DEFAULT_POLICY) -> Vector:
        idx = np.arange(self.N)
        grads = self.subgrad(idx, np.broadcast_to(np.asarray(x), (self.N, self.n)), policy)
        return grads.mean(axis=0)

    def default_init(self, rng: np.random.Generator) -> Vector:
        x = np.empty(self.n)
        for (off_w, size_w, shape_w), (off_b, size_b, _) in zip(
            self._slices[0::2], self._slices[1::2]
        ):
            fan_in = shape_w[1]
            x[off_w : off_w + size_w] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size_w)
            x[off_b : off_b + size_b] = 0.0
        return x


# ---------------------------------------------------------------------------
# noisy_linear


class NoisyLinearProblem(Problem):
    """Least squares f(x) = (1/N) sum_i 0.5 (<a_i, x> - b_i)^2.

    Smooth, so the conservative field is the gradient and the gap is the
    full gradient norm. The rows are seeded Gaussian, the target is pure
    residual (the generating x* is 0), and the attained minimum is solved
    once at construction; ``noiseless_optimum`` is the reference level for
    robustness experiments under injected gradient noise.
    """

    name = "noisy_linear"
    has_gap = True

    def __init__(self, n: int = 20, rows: int = 64, seed: int = 0,
                 residual_scale: float = 3.0, row_scale: float = 1.0):
        rng = np.random.default_rng(seed)
        # row_scale sets the curvature (and so the gradient-to-noise ratio)
        # without touching the attainable residual level
        self.A = row_scale * rng.normal(size=(rows, n))
        self.b = rng.normal(scale=residual_scale, size=rows)
        self.n = n
        self.N = rows
        sol, *_ = np.linalg.lstsq(self.A, self.b, rcond=None)
        self.solution = sol
        self.noiseless_optimum = float(
            0.5 * np.mean((self.A @ sol - self.b) ** 2)
        )
        self.stationary_set = "the unique least-squares solution"

    def value(self, i, x):
        self._check_index(i)
        r = np.sum(self.A[i] * np.asarray(x), axis=-1) - self.b[i]
        return 0.5 * r * r

    def subgrad(self, i, x, policy: KinkPolicy = DEFAULT_POLICY):
        self._check_index(i)
        r = np.sum(self.A[i] * np.asarray(x), axis=-1) - self.b[i]
        return r[..., None] * self.A[i] if np.ndim(r) else r * self.A[i]

    def gap(self, x) -> float:
        g = self.A.T @ (self.A @ np.asarray(x) - self.b) / self.N
        return float(np.linalg.norm(g))

    def default_init(self, rng: np.random.Generator) -> Vector:
        return np.zeros(self.n)


# ---------------------------------------------------------------------------
# catalog and free-function forms of the operations


def spurious_problem() -> SpuriousProblem:
    """The 1-D problem whose selection field has a spurious zero at x = 0."""
    return SpuriousProblem()


def _build_l1_center(n: int = 10, num_centers: int = 5, seed: int = 0,
                     centers=None, kink_tol: float = KINK_MARGIN):
    if centers is None:
        rng = np.random.default_rng(seed)
        centers = rng.normal(size=(num_centers, n))
    return L1CenterProblem(centers, kink_tol=kink_tol)


def _build_max_affine(weights=None, offsets=None, active_tol: float = KINK_MARGIN):
    if weights is None:
        # max(x1, -x1, x2, -x2): the infinity norm in the plane
        weights = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
        offsets = [0.0, 0.0, 0.0, 0.0]
    return MaxAffineProblem(weights, offsets, active_tol=active_tol)


def _build_relu_mlp(widths=(2, 16, 2), activation: str = "relu",
                    leaky_slope: float = 0.01, loss: str = "squared",
                    samples: int = 256, seed: int = 0, csv_path=None):
    if csv_path is not None:
        feats, labels = load_dataset_csv(csv_path, loss=loss, output_width=widths[-1])
    else:
        feats, labels = synthetic_two_cluster(samples=samples, seed=seed, loss=loss)
    spec = MlpSpec(widths=tuple(widths), activation=activation,
                   leaky_slope=leaky_slope, loss=loss,
                   features=feats, labels=labels)
    return MlpProblem(spec)


PROBLEMS = {
    "l1_center": _build_l1_center,
    "max_affine": _build_max_affine,
    "spurious": spurious_problem,
    "relu_mlp": _build_relu_mlp,
    "noisy_linear": NoisyLinearProblem,
}


def make_problem(name: str, **params) -> Problem:
    """Build a catalog problem by string id."""
    if name not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}")
    return PROBLEMS[name](**params)


def eval(problem: Problem, i, x):
    """Component value f_i(x)."""
    return problem.value(i, x)


def subgrad(problem: Problem, i, x, policy: KinkPolicy = DEFAULT_POLICY):
    """One element of the conservative gradient field of f_i at x."""
    return problem.subgrad(i, x, policy)


def gap(problem: Problem, x) -> float:
    """Distance from 0 to the full-objective selection set, when closed-form."""
    return problem.gap(x)


def finite_diff(problem: Problem, i, x, h: float) -> Vector:
    """Central finite-difference estimate of the gradient of f_i at x."""
    if not h > 0.0:
        raise ValueError(f"h must be > 0, got {h}")
    x = as_vector(x)
    n = x.shape[0]
    shifts = np.concatenate([np.eye(n) * h, -np.eye(n) * h])
    pts = x[None, :] + shifts                 # (2n, n)
    vals = problem.value(i, pts) if getattr(problem, "batch_ok", True) else np.array(
        [problem.value(i, p) for p in pts]
    )
    vals = np.asarray(vals, dtype=np.float64)
    return (vals[:n] - vals[n:]) / (2.0 * h)
