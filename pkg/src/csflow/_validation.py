"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DegenerateEdge, InvalidCurve

MIN_VERTICES = 16


def edge_threshold(vertices):
    """Smallest admissible edge length for a vertex array (machine-scaled)."""
    scale = max(float(np.max(np.abs(vertices))), float(np.ptp(vertices)), 1e-300)
    return 64.0 * np.finfo(float).eps * scale


def check_vertices(X, closed=True, min_vertices=MIN_VERTICES):
    """Validate a vertex array and return it as a float ``(M, n)`` array.

    Raises
    ------
    InvalidCurve
        Wrong shape, too few vertices, or non-finite coordinates.
    DegenerateEdge
        Two consecutive vertices (cyclically, when ``closed``) coincide.
    """
    try:
        X = check_array(X, dtype=np.float64, ensure_2d=True,
                        ensure_all_finite=True, copy=True)
    except ValueError as exc:
        raise InvalidCurve(str(exc)) from exc
    m, n = X.shape
    if n < 2:
        raise InvalidCurve(f"ambient dimension must be >= 2, got {n}")
    if m < min_vertices:
        raise InvalidCurve(f"curve needs at least {min_vertices} vertices, got {m}")
    edges = np.diff(X, axis=0, append=X[:1]) if closed else np.diff(X, axis=0)
    lengths = np.linalg.norm(edges, axis=1)
    bad = np.flatnonzero(lengths <= edge_threshold(X))
    if bad.size:
        raise DegenerateEdge(f"edge {int(bad[0])} has length {lengths[bad[0]]:.3g}")
    return X


def check_positive(value, name, allow_none=False):
    if value is None and allow_none:
        return None
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_int(value, name, minimum):
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
