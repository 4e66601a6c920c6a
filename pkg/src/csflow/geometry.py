"""Discrete closed and open curves in R^n.

Curves are stored as polylines. All derivative-based quantities are taken
with respect to the polygonal arclength, using finite-difference weights
computed for the actual vertex spacing (central stencils on closed curves,
shifted stencils near the ends of open curves).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.distance import directed_hausdorff

from ._validation import check_vertices, edge_threshold
from .exceptions import DegenerateEdge

# scale-relative cutoff below which a frame vector is flagged undefined
FRAME_TOL = 1e-6
MAX_ORDER = 4


class Curve:
    """Immutable polyline in R^n.

    Parameters
    ----------
    vertices : array-like of shape (M, n)
        Vertex coordinates in order along the curve.
    closed : bool
        Whether the last vertex connects back to the first.
    """

    closed = True

    def __init__(self, vertices, closed=None):
        if closed is not None:
            self.closed = bool(closed)
        X = check_vertices(vertices, closed=self.closed)
        X.setflags(write=False)
        self._vertices = X

    @property
    def vertices(self):
        return self._vertices

    @property
    def n_vertices(self):
        return self._vertices.shape[0]

    @property
    def ambient_dim(self):
        return self._vertices.shape[1]

    def __len__(self):
        return self.n_vertices

    def __repr__(self):
        kind = "closed" if self.closed else "open"
        return f"{type(self).__name__}(M={self.n_vertices}, n={self.ambient_dim}, {kind})"

    def with_vertices(self, vertices):
        """New curve of the same kind with replaced vertices."""
        return _make(vertices, self.closed)

    def transformed(self, A=None, b=None, scale=1.0):
        """Return ``scale * (A @ x + b)`` applied to every vertex."""
        X = self._vertices
        if A is not None:
            X = X @ np.asarray(A, dtype=float).T
        if b is not None:
            X = X + np.asarray(b, dtype=float)
        return self.with_vertices(scale * X)

    def embedded(self, n):
        """Embed into R^n (n >= ambient_dim) by zero padding."""
        pad = n - self.ambient_dim
        if pad < 0:
            raise ValueError("cannot embed into a lower dimension")
        return self.with_vertices(np.pad(self._vertices, ((0, 0), (0, pad))))


class DiscreteCurve(Curve):
    """Closed polyline (cyclic vertex list)."""

    closed = True

    def __init__(self, vertices):
        super().__init__(vertices)


class OpenCurve(Curve):
    """Open polyline, used for Grim Reaper arcs and rescaled pieces."""

    closed = False

    def __init__(self, vertices):
        super().__init__(vertices)


def _make(vertices, closed):
    return DiscreteCurve(vertices) if closed else OpenCurve(vertices)


@dataclass(frozen=True)
class ArclengthTable:
    edge_lengths: np.ndarray
    cumulative: np.ndarray
    total_length: float

    @property
    def spacing_ratio(self):
        return float(self.edge_lengths.max() / self.edge_lengths.min())

    @property
    def vertex_weights(self):
        """Dual lengths: half of each incident edge, summing to the total length."""
        h = self.edge_lengths
        m = self.cumulative.size
        w = np.zeros(m)
        if h.size == m:
            w = 0.5 * (h + np.roll(h, 1))
        else:
            w[:-1] += 0.5 * h
            w[1:] += 0.5 * h
        return w


def arclength(curve):
    """Exact polygonal arclength table of ``curve``."""
    X = curve.vertices
    edges = np.diff(X, axis=0, append=X[:1]) if curve.closed else np.diff(X, axis=0)
    h = np.linalg.norm(edges, axis=1)
    bad = np.flatnonzero(h <= edge_threshold(X))
    if bad.size:
        raise DegenerateEdge(f"edge {int(bad[0])} has length {h[bad[0]]:.3g}")
    cum = np.zeros(X.shape[0])
    cum[1:] = np.cumsum(h[: X.shape[0] - 1])
    return ArclengthTable(h, cum, float(h.sum()))


def _interpolant(curve, table):
    """Cubic spline through the vertices, parametrized by cumulative chord length."""
    X = curve.vertices
    if curve.closed:
        u = np.append(table.cumulative, table.total_length)
        return CubicSpline(u, np.vstack([X, X[:1]]), bc_type="periodic", axis=0)
    return CubicSpline(table.cumulative, X, bc_type="not-a-knot", axis=0)


def resample(curve, m, tol=1e-13, max_iter=100):
    """Redistribute ``m`` vertices along ``curve`` with equal chord lengths.

    New vertices lie on the cubic spline through the input vertices
    (periodic for closed curves), so second differences of the output stay
    accurate. The first vertex (and, for open curves, the last) is kept.
    Positions start at equal parameter spacing and are corrected until all
    chords agree, which makes the operation idempotent.
    """
    if m < 16:
        raise ValueError(f"m must be >= 16, got {m}")
    table = arclength(curve)
    X = curve.vertices
    spline = _interpolant(curve, table)
    n_chords = m if curve.closed else m - 1
    L = table.total_length
    sigma = np.arange(m) * (L / n_chords)
    k = np.arange(m)

    def points(sig):
        P = spline(sig)
        P[0] = X[0]
        if not curve.closed:
            P[-1] = X[-1]
        return P

    for _ in range(max_iter):
        P = points(sigma)
        nxt = np.roll(P, -1, axis=0) if curve.closed else P[1:]
        chords = np.linalg.norm(nxt - P[: len(nxt)], axis=1)
        C = np.concatenate([[0.0], np.cumsum(chords)[: m - 1]])
        delta = k * (chords.sum() / n_chords) - C
        if not curve.closed:
            delta[-1] = 0.0
        sigma = sigma + delta * (L / chords.sum())
        if np.max(np.abs(delta)) <= tol * L:
            break
    return curve.with_vertices(points(sigma))


def fd_weights(offsets, order):
    """Finite-difference weights for the ``order``-th derivative at 0.

    ``offsets`` has shape (w, M): the stencil node positions relative to the
    evaluation point, one column per evaluation point. Fornberg's recursion,
    vectorized over columns.
    """
    x = np.asarray(offsets, dtype=float)
    w, ncol = x.shape
    c = np.zeros((w, order + 1, ncol))
    c[0, 0] = 1.0
    c1 = np.ones(ncol)
    c4 = x[0].copy()
    for i in range(1, w):
        mn = min(i, order)
        c2 = np.ones(ncol)
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _stencil(table, closed, half):
    """Stencil indices (w, M) and offsets (w, M) in arclength."""
    m = table.cumulative.size
    s = table.cumulative
    i = np.arange(m)
    shifts = np.arange(-half, half + 1)
    if closed:
        idx = (i[None, :] + shifts[:, None]) % m
        L = table.total_length
        offs = s[idx] - s[None, :]
        wrap = (i[None, :] + shifts[:, None])
        offs = offs + L * np.floor_divide(wrap, m)
    else:
        start = np.clip(i - half, 0, m - 2 * half - 1)
        idx = start[None, :] + np.arange(2 * half + 1)[:, None]
        offs = s[idx] - s[None, :]
    return idx, offs


def derivatives(curve, table=None, order=1):
    """Arclength derivative of the given order (1..4) at every vertex."""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
    return derivative_stack(curve, table, order)[order - 1]


def derivative_stack(curve, table=None, max_order=MAX_ORDER):
    """Derivatives of orders 1..max_order, shape (max_order, M, n).

    Orders 1-2 use three-point stencils, orders 3-4 five-point stencils,
    giving second-order accuracy on uniform grids.
    """
    if table is None:
        table = arclength(curve)
    X = curve.vertices
    out = np.empty((max_order,) + X.shape)
    cache = {}
    for k in range(1, max_order + 1):
        half = 1 if k <= 2 else 2
        if half not in cache:
            cache[half] = _stencil(table, curve.closed, half)
        idx, offs = cache[half]
        w = fd_weights(offs, k)
        out[k - 1] = np.einsum("wm,wmn->mn", w, X[idx])
    return out


@dataclass(frozen=True)
class FrenetData:
    """Per-vertex Frenet-Serret data.

    ``frame[i, j]`` is the j-th frame vector (T, N, B1, B2) at vertex i; rows
    beyond ``frame_rank[i]`` are NaN. ``torsion[:, j]`` holds tau_{j+1}: it is
    NaN where the frame vector it rotates out of is undefined and 0 where that
    vector is defined but the next one is not.
    """

    frame: np.ndarray
    kappa: np.ndarray
    torsion: np.ndarray
    frame_rank: np.ndarray
    derivs: np.ndarray = field(repr=False)
    table: ArclengthTable = field(repr=False)

    @property
    def T(self):
        return self.frame[:, 0]

    @property
    def N(self):
        return self.frame[:, 1]

    def binormal(self, i):
        return self.frame[:, i + 1]

    @property
    def tau1(self):
        """First torsion with undefined entries read as zero."""
        if self.torsion.shape[1] == 0:
            return np.zeros_like(self.kappa)
        return np.nan_to_num(self.torsion[:, 0], nan=0.0)


def frenet_frame(curve, table=None, tol=FRAME_TOL):
    """Gram-Schmidt Frenet frame from the arclength derivatives.

    kappa is |d^2 gamma/ds^2|. Torsions are read off the derivative
    expansion gamma''' = -k^2 T + k_s N + k tau_1 B_1 (and the analogous
    fourth-order relation for tau_2), so that positive orientation is used
    for every vector except the last one in R^n, whose sign completes a
    right-handed frame; the matching torsion then carries the sign.
    """
    if table is None:
        table = arclength(curve)
    D = derivative_stack(curve, table, MAX_ORDER)
    m, n = curve.vertices.shape
    L = table.total_length
    n_vec = min(n, MAX_ORDER)
    frame = np.full((m, n_vec, n), np.nan)
    rank = np.ones(m, dtype=int)
    coef = np.zeros((m, n_vec))  # |component of gamma^(k) along the new vector|

    T = D[0] / np.linalg.norm(D[0], axis=1, keepdims=True)
    frame[:, 0] = T
    kappa = np.linalg.norm(D[1], axis=1)
    defined = np.ones(m, dtype=bool)
    basis = [T]
    for j in range(1, n_vec):
        v = D[j].copy()
        for e in basis:
            v -= np.sum(v * e, axis=1, keepdims=True) * e
        # second pass for numerical orthogonality
        for e in basis:
            v -= np.sum(v * e, axis=1, keepdims=True) * e
        r = np.linalg.norm(v, axis=1)
        if j == 1:
            ok = defined & (kappa * L >= tol) & (r > 0)
        else:
            ok = defined & (r * L ** j >= tol)
        e_new = np.where(ok[:, None], v / np.where(r > 0, r, 1.0)[:, None], np.nan)
        frame[:, j] = e_new
        coef[:, j] = np.where(ok, r, 0.0)
        rank += ok
        defined = ok
        basis.append(np.nan_to_num(e_new))

    if n_vec == n and n >= 3:
        full = rank == n
        if full.any():
            det = np.linalg.det(frame[full])
            flip = np.zeros(m, dtype=bool)
            flip[np.flatnonzero(full)[det < 0]] = True
            frame[flip, n - 1] *= -1.0
            coef[flip, n - 1] *= -1.0

    torsion = np.full((m, max(n - 2, 0)), np.nan)
    if n >= 3:
        has_N = rank >= 2
        tau1 = np.where(has_N, coef[:, 2] / np.where(kappa > 0, kappa, 1.0), np.nan)
        torsion[:, 0] = tau1
        if n >= 4 and n_vec >= 4:
            has_B1 = rank >= 3
            denom = kappa * np.abs(tau1)
            denom = np.where(has_B1 & (denom > 0), denom, 1.0)
            torsion[:, 1] = np.where(has_B1, coef[:, 3] / denom, np.nan)
    return FrenetData(frame, kappa, torsion, rank, D, table)


def total_absolute_curvature(curve, frenet=None):
    """Discrete integral of |kappa| ds using dual vertex lengths."""
    if frenet is None:
        frenet = frenet_frame(curve)
    return float(np.sum(np.abs(frenet.kappa) * frenet.table.vertex_weights))


def principal_axes(vertices):
    """Centroid, eigenvalues (descending) and eigenvectors of the second moment."""
    c = vertices.mean(axis=0)
    Y = vertices - c
    # SVD keeps small singular values accurate, unlike eigh of Y^T Y
    _, sv, vt = np.linalg.svd(Y, full_matrices=True)
    vals = np.zeros(vertices.shape[1])
    vals[: len(sv)] = sv ** 2 / len(Y)
    return c, vals, vt.T


def diameter(vertices):
    from scipy.spatial.distance import pdist
    return float(pdist(vertices).max())


def planarity_defect(curve, frenet=None):
    """Return ``(pca_residual, sup_tau1)``.

    ``pca_residual`` is the RMS distance of the vertices from their best-fit
    2-plane through the centroid, divided by the curve diameter.
    ``sup_tau1`` is max |tau_1| over vertices whose frame reaches B_1.
    """
    X = curve.vertices
    if X.shape[1] <= 2:
        pca = 0.0
    else:
        _, vals, _ = principal_axes(X)
        pca = float(np.sqrt(max(vals[2:].sum(), 0.0)) / diameter(X))
    if frenet is None:
        frenet = frenet_frame(curve)
    mask = frenet.frame_rank >= 3
    sup_tau = float(np.max(np.abs(frenet.torsion[mask, 0]))) if mask.any() else 0.0
    return pca, sup_tau


def project_to_plane(curve):
    """Coordinates of the vertices in their best-fit 2-plane."""
    c, _, vecs = principal_axes(curve.vertices)
    return _make((curve.vertices - c) @ vecs[:, :2], curve.closed)


def frenet_residual(curve, frenet=None):
    """Max deviation between d/ds of the computed frame and the Frenet system.

    Row j (the equation for d E_j/ds) is evaluated at vertices where every
    vector it involves is defined on the whole differencing stencil.
    """
    if frenet is None:
        frenet = frenet_frame(curve)
    m, n_vec, n = frenet.frame.shape
    idx, offs = _stencil(frenet.table, curve.closed, 1)
    w = fd_weights(offs, 1)
    E = np.nan_to_num(frenet.frame)
    dE = np.einsum("wm,wmjn->mjn", w, E[idx])
    stencil_rank = frenet.frame_rank[idx].min(axis=0)
    c = np.zeros((m, n_vec))
    c[:, 0] = frenet.kappa
    nt = min(frenet.torsion.shape[1], n_vec - 1)
    c[:, 1: 1 + nt] = np.nan_to_num(frenet.torsion[:, :nt])
    res = 0.0
    for j in range(n_vec):
        need = j + 1 if j == n - 1 else j + 2
        mask = stencil_rank >= need
        if not mask.any():
            continue
        rhs = np.zeros((m, n))
        if j + 1 < n_vec:
            rhs += c[:, j, None] * E[:, j + 1]
        if j > 0:
            rhs -= c[:, j - 1, None] * E[:, j - 1]
        err = np.linalg.norm(dE[:, j] - rhs, axis=1)[mask]
        res = max(res, float(err.max()))
    return res


def sample_polyline(curve, per_edge=8):
    """Dense points along the polyline, for distance computations."""
    X = curve.vertices
    Q = np.vstack([X, X[:1]]) if curve.closed else X
    u = np.arange(per_edge) / per_edge
    pts = Q[:-1, None, :] + u[None, :, None] * (Q[1:] - Q[:-1])[:, None, :]
    pts = pts.reshape(-1, X.shape[1])
    if not curve.closed:
        pts = np.vstack([pts, X[-1:]])
    return pts


def hausdorff_distance(a, b, per_edge=8):
    """Symmetric Hausdorff distance between two curves or point sets."""
    A = sample_polyline(a, per_edge) if isinstance(a, Curve) else np.asarray(a, float)
    B = sample_polyline(b, per_edge) if isinstance(b, Curve) else np.asarray(b, float)
    return max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0])


def distance_to_unit_circle(curve, per_edge=4):
    """Hausdorff distance to the unit circle about the origin in the best-fit plane.

    The plane is the span of the two leading principal directions of the
    vertices (taken about the origin, not the centroid).
    """
    X = curve.vertices
    cov = X.T @ X
    vals, vecs = np.linalg.eigh(cov)
    P = vecs[:, np.argsort(vals)[::-1][:2]]
    theta = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    circle = np.cos(theta)[:, None] * P[:, 0] + np.sin(theta)[:, None] * P[:, 1]
    return hausdorff_distance(curve, circle, per_edge)


def random_rotation(n, rng):
    """Haar-distributed rotation in SO(n)."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
