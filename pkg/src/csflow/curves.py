"""Initial-curve generators used by the CLI, the estimators and the tests."""

import math

import numpy as np

from ._validation import check_int, check_positive
from .geometry import DiscreteCurve, random_rotation


def _params(M):
    check_int(M, "M", 16)
    return 2.0 * np.pi * np.arange(M) / M


def ellipse(a=2.0, b=1.0, dim=2, M=256):
    check_positive(a, "a")
    check_positive(b, "b")
    check_int(dim, "dim", 2)
    p = _params(M)
    X = np.zeros((M, dim))
    X[:, 0] = a * np.cos(p)
    X[:, 1] = b * np.sin(p)
    return DiscreteCurve(X)


def perturbed_circle(amplitudes=(0.1, 0.1), modes=(2, 3), dim=4, M=256):
    """(cos p, sin p, a_1 sin(m_1 p), a_2 cos(m_2 p), ...) padded with zeros to ``dim``.

    Extra coordinates alternate sin, cos, sin, ...
    """
    amplitudes = tuple(float(a) for a in np.atleast_1d(amplitudes))
    modes = tuple(int(m) for m in np.atleast_1d(modes))
    if len(amplitudes) != len(modes):
        raise ValueError("amplitudes and modes must have the same length")
    if dim < 2 + len(modes):
        raise ValueError(f"dim must be >= {2 + len(modes)}")
    p = _params(M)
    X = np.zeros((M, dim))
    X[:, 0] = np.cos(p)
    X[:, 1] = np.sin(p)
    for j, (a, m) in enumerate(zip(amplitudes, modes)):
        X[:, 2 + j] = a * (np.sin(m * p) if j % 2 == 0 else np.cos(m * p))
    return DiscreteCurve(X)


def random_low_entropy(dim=5, seed=0, amplitude=0.08, max_mode=4, M=256):
    """Unit circle plus small random Fourier modes in every coordinate, randomly rotated.

    Mode k carries amplitude ``amplitude / k``; with the default the
    entropy stays well below 2.
    """
    check_int(dim, "dim", 2)
    check_int(max_mode, "max_mode", 1)
    rng = np.random.default_rng(seed)
    p = _params(M)
    X = np.zeros((M, dim))
    X[:, 0] = np.cos(p)
    X[:, 1] = np.sin(p)
    for k in range(1, max_mode + 1):
        c = rng.standard_normal((2, dim)) * amplitude / k
        X += np.cos(k * p)[:, None] * c[0] + np.sin(k * p)[:, None] * c[1]
    X = X @ random_rotation(dim, rng).T
    return DiscreteCurve(X)


def figure_eight(scale=1.0, dim=2, M=256):
    """Lemniscate of Gerono (sin p, sin p cos p); crosses itself at the origin."""
    check_positive(scale, "scale")
    p = _params(M) + math.pi / M  # keep the crossing off the vertices
    X = np.zeros((M, dim))
    X[:, 0] = scale * np.sin(p)
    X[:, 1] = scale * np.sin(p) * np.cos(p)
    return DiscreteCurve(X)
