"""Loss oracles, synthetic problems, and dataset ingestion.

An oracle maps (round t, point x, seeded source) to (loss, subgradient).
Draws inside an oracle depend only on (seed, t) — never on evaluation order —
so a round can be replayed at a different point (e.g. the fixed comparator)
with the identical realization.  Returned gradient arrays may be shared;
callers must not mutate them.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    LabelOutOfRange,
    MagicMismatch,
    NonFiniteInput,
    ParseError,
    ShapeMismatch,
)
from .numerics import as_vector

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


class RoundRng:
    """Counter-based random source.

    ``uniform(t)`` is the t-th value of a fixed Philox stream keyed by the
    seed, served from a lazily grown cache, so it is a pure function of
    (seed, t).  ``child(k)`` derives an independent generator keyed by
    (seed, k) for bulk draws such as epoch permutations.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0:
            raise ValueError(f"seed must be >= 0, got {seed}")
        self.seed = seed
        self._uniforms = np.empty(0)

    def uniform(self, t: int) -> float:
        if t < 1:
            raise ValueError(f"round index must be >= 1, got {t}")
        if t > self._uniforms.size:
            n = 1 << 16
            while n < t:
                n <<= 1
            gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, 0])))
            self._uniforms = gen.random(n)
        return self._uniforms[t - 1]

    def child(self, k: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(np.random.SeedSequence([self.seed, 1, int(k)]))
        )


class LossOracle:
    """Base class.  Subclasses set:

    dim             parameter dimension
    stochastic      draws randomness through the per-round source
    linear          round-t loss is g_t . x with g_t independent of x
    time_invariant  the same deterministic loss every round
    known_optimum   fixed comparator x* when one is known, else None
    """

    dim: int = 0
    stochastic = False
    linear = False
    time_invariant = False
    known_optimum: np.ndarray | None = None

    def evaluate(self, t: int, x: np.ndarray, rng: RoundRng | None = None):
        raise NotImplementedError


class ReddiStochastic(LossOracle):
    """Linear losses on [-1, 1]: slope 1010 with probability 1/100, else -10.

    The expected subgradient is 0.01 * 1010 - 0.99 * 10 = 0.2 > 0, so the
    expected loss is minimized at the left endpoint x* = -1, even though 99%
    of rounds push toward +1.
    """

    dim = 1
    stochastic = True
    linear = True

    def __init__(self):
        self.known_optimum = np.array([-1.0])
        self._g_hi = np.array([1010.0])
        self._g_lo = np.array([-10.0])

    def evaluate(self, t, x, rng):
        g = self._g_hi if rng.uniform(t) < 0.01 else self._g_lo
        return g[0] * x[0], g


class ReddiOnline(LossOracle):
    """Deterministic variant: slope 1010 when t % 101 == 1, else -10.

    Any 101 consecutive rounds accumulate slope 1010 - 100 * 10 = 10 > 0,
    so x* = -1 again minimizes the cumulative loss.
    """

    dim = 1
    linear = True

    def __init__(self):
        self.known_optimum = np.array([-1.0])
        self._g_hi = np.array([1010.0])
        self._g_lo = np.array([-10.0])

    def evaluate(self, t, x, rng=None):
        g = self._g_hi if t % 101 == 1 else self._g_lo
        return g[0] * x[0], g


class Quadratic(LossOracle):
    """f(x) = 0.5 * sum_i a_i (x_i - x*_i)^2 with a_i > 0, identical every round."""

    time_invariant = True

    def __init__(self, a_diag, x_star):
        a = as_vector(a_diag)
        xs = as_vector(x_star)
        if a.shape != xs.shape:
            raise ShapeMismatch(f"curvature {a.shape} vs optimum {xs.shape}")
        if (a <= 0.0).any():
            raise ValueError("quadratic curvatures must be strictly positive")
        self.a = a
        self.known_optimum = xs
        self.dim = a.shape[0]

    def evaluate(self, t, x, rng=None):
        diff = x - self.known_optimum
        g = self.a * diff
        return 0.5 * float(g @ diff), g


def quadratic(a_diag, x_star) -> Quadratic:
    return Quadratic(a_diag, x_star)


# ---------------------------------------------------------------------------
# datasets


@dataclass
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64 in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ShapeMismatch(f"features must be 2-d, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ShapeMismatch(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.isfinite(X).all():
            raise NonFiniteInput("features contain NaN or Inf")
        if y.size and (not np.issubdtype(y.dtype, np.integer)):
            raise LabelOutOfRange("labels must be integers")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise LabelOutOfRange(
                f"labels must lie in [0, {self.num_classes}), got range "
                f"[{y.min()}, {y.max()}]"
            )
        self.features = X
        self.labels = y.astype(np.int64)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def gaussian_blobs(n: int, d: int, k: int, seed: int, spread: float = 1.0,
                   center_scale: float = 1.0) -> Dataset:
    """Synthetic k-class dataset: class centers ~ N(0, center_scale^2 I),
    points = center + spread * N(0, I), labels balanced (round-robin, then
    shuffled)."""
    if n < k:
        raise ValueError(f"need at least one point per class: n={n}, k={k}")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 2])))
    centers = center_scale * gen.standard_normal((k, d))
    labels = gen.permutation(np.arange(n) % k)
    X = centers[labels] + spread * gen.standard_normal((n, d))
    return Dataset(X, labels, k)


def _read_idx_labels(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ParseError(f"{path}: truncated IDX header")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != _IDX_LABELS_MAGIC:
        raise MagicMismatch(
            f"{path}: magic 0x{magic:08x}, expected 0x{_IDX_LABELS_MAGIC:08x}"
        )
    if len(raw) < 8 + n:
        raise ParseError(f"{path}: expected {n} labels, file holds {len(raw) - 8}")
    return np.frombuffer(raw, dtype=np.uint8, count=n, offset=8).astype(np.int64)


def _read_idx_images(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ParseError(f"{path}: truncated IDX header")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != _IDX_IMAGES_MAGIC:
        raise MagicMismatch(
            f"{path}: magic 0x{magic:08x}, expected 0x{_IDX_IMAGES_MAGIC:08x}"
        )
    need = n * rows * cols
    if len(raw) < 16 + need:
        raise ParseError(f"{path}: expected {need} pixels, file holds {len(raw) - 16}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=need, offset=16)
    return pixels.reshape(n, rows * cols).astype(np.float64) / 255.0


def load_dataset(path: str, format: str = "csv") -> Dataset:
    """Load a labeled dataset.

    ``csv``: one sample per row, features then an integer class label in the
    last column; the class count is inferred as max label + 1.
    ``idx``: standard big-endian IDX pair given as "images_file,labels_file";
    pixel bytes are rescaled to [0, 1].
    """
    if format == "csv":
        return _load_csv(path)
    if format == "idx":
        parts = str(path).split(",")
        if len(parts) != 2:
            raise ParseError(
                'idx format expects "images_file,labels_file", got ' + repr(path)
            )
        X = _read_idx_images(parts[0])
        y = _read_idx_labels(parts[1])
        if y.shape[0] != X.shape[0]:
            raise ParseError(
                f"images hold {X.shape[0]} samples but labels hold {y.shape[0]}"
            )
        return Dataset(X, y, int(y.max()) + 1 if y.size else 1)
    raise ValueError(f"unknown dataset format {format!r}")


def _load_csv(path) -> Dataset:
    rows = []
    labels = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
                if width < 2:
                    raise ParseError(f"{path}:{lineno}: need features plus a label column")
            elif len(parts) != width:
                raise ParseError(
                    f"{path}:{lineno}: expected {width} columns, got {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts[:-1]]
                lab = float(parts[-1])
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from None
            if not lab.is_integer():
                raise ParseError(f"{path}:{lineno}: label {parts[-1]!r} is not an integer")
            rows.append(vals)
            labels.append(int(lab))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    y = np.array(labels, dtype=np.int64)
    if y.min() < 0:
        raise LabelOutOfRange(f"{path}: negative class label {y.min()}")
    return Dataset(np.array(rows, dtype=np.float64), y, int(y.max()) + 1)


# ---------------------------------------------------------------------------
# softmax regression


def _softmax_core(W, b, X, y, reg):
    """Loss and (dW, db) of the multinomial logistic loss on (X, y) plus
    reg * sum(W**2); the mean is over the given rows."""
    m = X.shape[0]
    Z = X @ W.T + b
    Z -= Z.max(axis=1, keepdims=True)
    expZ = np.exp(Z)
    denom = expZ.sum(axis=1)
    idx = np.arange(m)
    # cross-entropy: mean of log(denom) - z_y  (after max shift)
    loss = float(np.mean(np.log(denom) - Z[idx, y]))
    P = expZ / denom[:, None]
    P[idx, y] -= 1.0
    P /= m
    dW = P.T @ X
    db = P.sum(axis=0)
    if reg:
        loss += reg * float(np.sum(W * W))
        dW += (2.0 * reg) * W
    return loss, dW, db


def softmax_objective(W: np.ndarray, b: np.ndarray, data: Dataset, reg: float):
    """Full-batch softmax regression objective.

    loss = mean cross-entropy + reg * sum_k ||w_k||^2 (biases unpenalized);
    returns (loss, gradient) with the gradient flattened as [dW rows..., db].
    """
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    K = data.num_classes
    if W.shape != (K, data.d) or b.shape != (K,):
        raise ShapeMismatch(
            f"want W ({K}, {data.d}) and b ({K},), got {W.shape} and {b.shape}"
        )
    if not (np.isfinite(W).all() and np.isfinite(b).all()):
        raise NonFiniteInput("parameters contain NaN or Inf")
    loss, dW, db = _softmax_core(W, b, data.features, data.labels, reg)
    return loss, np.concatenate([dW.ravel(), db])


def pack_params(W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(W).ravel(), np.asarray(b)])


def unpack_params(x: np.ndarray, k: int, d: int):
    if x.shape != (k * d + k,):
        raise ShapeMismatch(f"flat parameters must have shape ({k * d + k},), got {x.shape}")
    return x[: k * d].reshape(k, d), x[k * d :]


class SoftmaxObjective(LossOracle):
    """Full-batch softmax regression as a deterministic oracle over the
    flattened parameter vector [w_1 ... w_K, b]."""

    time_invariant = True

    def __init__(self, data: Dataset, reg: float = 0.0):
        if reg < 0.0:
            raise ValueError(f"reg must be >= 0, got {reg}")
        self.data = data
        self.reg = reg
        self.dim = data.num_classes * (data.d + 1)

    def loss_and_grad(self, x: np.ndarray, idx: np.ndarray | None = None):
        W, b = unpack_params(x, self.data.num_classes, self.data.d)
        X = self.data.features
        y = self.data.labels
        if idx is not None:
            X = X[idx]
            y = y[idx]
        loss, dW, db = _softmax_core(W, b, X, y, self.reg)
        return loss, np.concatenate([dW.ravel(), db])

    def evaluate(self, t, x, rng=None):
        return self.loss_and_grad(x)


class MinibatchOracle(LossOracle):
    """Minibatch view of a finite-sum objective.

    Round t maps to (epoch, slot) with batches_per_epoch = ceil(n / batch);
    each epoch draws a fresh permutation from the run's seeded source and
    slices it without replacement, so batch contents are a pure function of
    (seed, t).  The final slot of an epoch may be smaller than ``batch``.
    """

    stochastic = True

    def __init__(self, objective: SoftmaxObjective, batch_size: int):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.objective = objective
        self.batch_size = min(batch_size, objective.data.n)
        self.batches_per_epoch = math.ceil(objective.data.n / self.batch_size)
        self.dim = objective.dim
        self._perm_key = None
        self._perm = None

    def evaluate(self, t, x, rng):
        epoch, slot = divmod(t - 1, self.batches_per_epoch)
        key = (rng.seed, epoch)
        if key != self._perm_key:
            self._perm = rng.child(epoch).permutation(self.objective.data.n)
            self._perm_key = key
        idx = self._perm[slot * self.batch_size : (slot + 1) * self.batch_size]
        return self.objective.loss_and_grad(x, idx)

    def full_loss(self, x) -> float:
        return self.objective.loss_and_grad(x)[0]


def minibatch_oracle(objective: SoftmaxObjective, batch_size: int) -> MinibatchOracle:
    return MinibatchOracle(objective, batch_size)
