"""Float64 vector helpers: elementwise integer powers and roots, and
diagonally weighted norms.

Vectors are plain one-dimensional ``numpy.float64`` arrays throughout the
package; a diagonal metric is a vector of strictly positive entries standing
in for the diagonal matrix it parameterizes.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, NegativeRadicand, NonFiniteInput, ShapeMismatch


def as_vector(values) -> np.ndarray:
    """Coerce ``values`` to a finite float64 1-d array.

    Raises ShapeMismatch for non-1-d input and NonFiniteInput when any entry
    is NaN or Inf.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeMismatch(f"expected a 1-d vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise NonFiniteInput("vector entries must be finite")
    return v


def as_metric(diag) -> np.ndarray:
    """Coerce ``diag`` to a valid diagonal metric (finite, strictly positive)."""
    d = as_vector(diag)
    if (d <= 0.0).any():
        raise ValueError("diagonal metric entries must be strictly positive")
    return d


def elem_pow(v: np.ndarray, p: int) -> np.ndarray:
    """Elementwise integer power v**p (p >= 1).

    Odd powers preserve sign; even powers are non-negative.
    """
    if p < 1:
        raise ValueError(f"power must be a positive integer, got {p}")
    if p == 1:
        return np.array(v, dtype=np.float64, copy=True)
    if p == 2:
        return v * v
    return np.power(v, p)


def _is_pow2(p: int) -> bool:
    return p >= 1 and (p & (p - 1)) == 0


def elem_root(v: np.ndarray, p: int) -> np.ndarray:
    """Elementwise real p-th root.

    For even p every entry must be non-negative (NegativeRadicand otherwise);
    for odd p the real root is used, so sign is preserved.  Roots of order a
    power of two go through repeated ``sqrt`` — one correctly rounded op per
    halving — instead of ``v ** (1/p)``, which keeps ``elem_root(elem_pow(v,
    p), p)`` within a few ulps of ``|v|``.
    """
    if p < 1:
        raise ValueError(f"root order must be a positive integer, got {p}")
    v = np.asarray(v, dtype=np.float64)
    if p == 1:
        return np.array(v, copy=True)
    if p % 2 == 0:
        if (v < 0.0).any():
            raise NegativeRadicand(f"even root ({p}) of a negative entry")
        if _is_pow2(p):
            out = np.sqrt(v)
            k = p // 2
            while k > 1:
                np.sqrt(out, out=out)
                k //= 2
            return out
        return np.power(v, 1.0 / p)
    # odd order: real root, sign carried through
    return np.sign(v) * np.power(np.abs(v), 1.0 / p)


def weighted_norm_sq(x: np.ndarray, diag: np.ndarray) -> float:
    """Squared weighted norm  sum_i diag[i] * x[i]**2.

    ``diag`` is the diagonal of a positive-definite metric; raises DimMismatch
    when shapes disagree.
    """
    x = np.asarray(x, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    if x.shape != diag.shape:
        raise DimMismatch(f"vector has shape {x.shape}, metric diagonal {diag.shape}")
    return float(np.sum(diag * x * x))
