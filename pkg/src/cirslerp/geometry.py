"""Hypersphere math: normalization, cosine similarity, angles, and slerp.

All functions operate on 1-d float64 numpy arrays and are pure; unit
embeddings are plain arrays whose L2 norm is 1 within 1e-6. Accumulation is
always double precision, regardless of how vectors are stored on disk.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import Antipodal, DimMismatch, NonFinite, ZeroVector

# Norm below this is treated as the zero vector.
ZERO_NORM_THRESHOLD = 1e-12

# Unit-norm tolerance for constructed embeddings.
UNIT_NORM_TOL = 1e-6

# Below this angle the sin(theta) division is ill-conditioned; slerp falls
# back to normalized linear interpolation (error at the switch is O(theta^2)).
THETA_MIN = 1e-4


def as_vector(raw) -> np.ndarray:
    """Coerce input to a 1-d float64 array without copying when possible."""
    v = np.asarray(raw, dtype=np.float64)
    if v.ndim != 1:
        v = v.reshape(-1)
    return v


def normalize(raw) -> np.ndarray:
    """Return the unit-norm float64 vector pointing along `raw`.

    Raises NonFinite if any component is NaN/Inf, ZeroVector if the norm is
    at or below 1e-12.
    """
    v = as_vector(raw)
    if v.size == 0:
        raise ZeroVector("cannot normalize an empty vector")
    if not np.isfinite(v).all():
        raise NonFinite("vector has NaN or Inf components")
    n = float(np.linalg.norm(v))
    if n <= ZERO_NORM_THRESHOLD:
        raise ZeroVector(f"vector norm {n:.3e} is at or below {ZERO_NORM_THRESHOLD:.0e}")
    return v / n


def _check_dims(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape[0] != v.shape[0]:
        raise DimMismatch(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def cosine(u, v) -> float:
    """Dot product of two unit embeddings, clamped to [-1, 1]."""
    u = as_vector(u)
    v = as_vector(v)
    _check_dims(u, v)
    d = float(np.dot(u, v))
    return max(-1.0, min(1.0, d))


def angle(v, w) -> float:
    """Angle in radians between two unit embeddings, in [0, pi]."""
    return math.acos(cosine(v, w))


def slerp(v, w, alpha: float) -> np.ndarray:
    """Spherical linear interpolation between unit embeddings v and w.

    Walks the great circle from v (alpha=0) to w (alpha=1) at constant
    angular velocity and re-normalizes the result as a numerical safeguard.
    For angles below THETA_MIN the normalized-lerp fallback is used; for
    near-antipodal inputs the interpolation path is undefined and Antipodal
    is raised (unless alpha is exactly an endpoint).
    """
    v = as_vector(v)
    w = as_vector(w)
    _check_dims(v, w)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")

    # Endpoints are exact by contract.
    if alpha == 0.0:
        return v.copy()
    if alpha == 1.0:
        return w.copy()

    theta = angle(v, w)
    if theta > math.pi - THETA_MIN:
        raise Antipodal(
            f"angle {theta:.6f} rad is within {THETA_MIN:.0e} of pi; "
            "interpolation path is undefined"
        )
    if theta < THETA_MIN:
        return normalize((1.0 - alpha) * v + alpha * w)

    s = math.sin(theta)
    c = (math.sin((1.0 - alpha) * theta) / s) * v + (math.sin(alpha * theta) / s) * w
    return normalize(c)
