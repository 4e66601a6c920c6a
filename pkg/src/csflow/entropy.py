"""Gaussian-weighted length of discrete curves and its supremum.

F(x0, t0) = (4 pi t0)^(-1/2) * int exp(-|x - x0|^2 / (4 t0)) ds

The entropy is the supremum of F over all centers and scales. It is
estimated from below by a coarse grid followed by a derivative-free local
ascent, so every returned value is a lower bound up to quadrature error.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ._validation import check_int, check_positive
from .exceptions import PointTooFar
from .geometry import arclength, diameter, principal_axes

X0_CANDIDATES = ("curve_vertices", "centroid_plus_vertices")


@dataclass(frozen=True)
class GaussianSpec:
    x0: np.ndarray
    t0: float

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be finite")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "t0", check_positive(self.t0, "t0"))

    def to_dict(self):
        return {"x0": self.x0.tolist(), "t0": self.t0}


@dataclass(frozen=True)
class EntropySearchConfig:
    """Search settings. ``t0_min``/``t0_max`` default to curve-adapted bounds."""

    t0_min: float = None
    t0_max: float = None
    t0_grid: int = 24
    x0_candidates: str = "centroid_plus_vertices"
    refine_iters: int = 200
    refine_tol: float = 1e-9

    def __post_init__(self):
        check_int(self.t0_grid, "t0_grid", 8)
        check_int(self.refine_iters, "refine_iters", 0)
        check_positive(self.refine_tol, "refine_tol")
        if self.x0_candidates not in X0_CANDIDATES:
            raise ValueError(f"x0_candidates must be one of {X0_CANDIDATES}")
        check_positive(self.t0_min, "t0_min", allow_none=True)
        check_positive(self.t0_max, "t0_max", allow_none=True)
        if self.t0_min is not None and self.t0_max is not None and self.t0_min >= self.t0_max:
            raise ValueError("t0_min must be < t0_max")

    def bounds_for(self, curve, table=None):
        table = table or arclength(curve)
        lo = self.t0_min
        hi = self.t0_max
        if lo is None:
            lo = 1e-3 * (table.total_length / curve.n_vertices) ** 2
        if hi is None:
            hi = 1e2 * diameter(curve.vertices) ** 2
        # below ~h^2/4 the midpoint sum stops resolving the Gaussian and a
        # center on an edge midpoint sends F to infinity as t0 -> 0
        lo = max(lo, 0.25 * float(table.edge_lengths.max()) ** 2)
        if lo >= hi:
            raise ValueError(f"empty t0 range [{lo}, {hi}]")
        return lo, hi

    def to_dict(self):
        return {"t0_min": self.t0_min, "t0_max": self.t0_max, "t0_grid": self.t0_grid,
                "x0_candidates": self.x0_candidates, "refine_iters": self.refine_iters,
                "refine_tol": self.refine_tol}


@dataclass(frozen=True)
class EntropyResult:
    value: float
    maximizer: GaussianSpec
    evaluations: int
    converged: bool
    coarse_value: float
    t0_range: tuple

    @property
    def lambda_(self):
        return self.value

    def to_dict(self):
        return {"lambda": self.value, "x0": self.maximizer.x0.tolist(),
                "t0": self.maximizer.t0, "evaluations": self.evaluations,
                "converged": self.converged, "coarse_lambda": self.coarse_value,
                "t0_range": list(self.t0_range)}


def _edge_quadrature(curve, table):
    X = curve.vertices
    nxt = np.roll(X, -1, axis=0) if curve.closed else X[1:]
    mids = 0.5 * (X[: len(nxt)] + nxt)
    return mids, table.edge_lengths


def _f_many(mids, weights, x0s, t0s):
    """F for every pair in x0s (P, n) x t0s (Q,); returns (Q, P)."""
    d2 = np.sum((x0s[:, None, :] - mids[None, :, :]) ** 2, axis=2)
    t0s = np.asarray(t0s, dtype=float)
    out = np.empty((len(t0s), len(x0s)))
    for q, t in enumerate(t0s):
        out[q] = np.exp(-d2 / (4.0 * t)) @ weights / math.sqrt(4.0 * math.pi * t)
    return out


def f_functional(curve, table=None, spec=None):
    """Midpoint-rule F on the edges of ``curve`` for the Gaussian ``spec``."""
    if spec is None:
        raise ValueError("a GaussianSpec is required")
    table = table or arclength(curve)
    mids, w = _edge_quadrature(curve, table)
    if spec.x0.shape != (curve.ambient_dim,):
        raise ValueError("x0 dimension does not match the curve")
    d2 = np.sum((mids - spec.x0) ** 2, axis=1)
    return float(np.exp(-d2 / (4.0 * spec.t0)) @ w / math.sqrt(4.0 * math.pi * spec.t0))


def f_grid(curve, x0s, t0s, table=None):
    table = table or arclength(curve)
    mids, w = _edge_quadrature(curve, table)
    return _f_many(mids, w, np.atleast_2d(np.asarray(x0s, dtype=float)), t0s)


def _search_frame(X):
    # principal axes with signs pinned by vertex 0, so that rigid motions
    # of the input give the same search path
    c, _, vecs = principal_axes(X)
    signs = np.sign(vecs.T @ (X[0] - c))
    signs[signs == 0] = 1.0
    return c, vecs * signs


def _ascend(fun, p, steps, iters, tol):
    """Coordinate-wise quadratic-fit ascent; returns (p, value, evals, converged)."""
    best = fun(p)
    evals = 1
    stalls = 0
    for _ in range(iters):
        start = best
        for i in range(len(p)):
            d = steps[i]
            e = np.zeros_like(p)
            e[i] = d
            fp, fm = fun(p + e), fun(p - e)
            evals += 2
            trial = [(fp, d), (fm, -d)]
            curv = fp + fm - 2.0 * best
            if curv < 0:
                move = 0.5 * d * (fp - fm) / -curv
                move = float(np.clip(move, -4 * d, 4 * d))
                if move != 0.0:
                    e[i] = move
                    trial.append((fun(p + e), move))
                    evals += 1
            val, move = max(trial, key=lambda vm: vm[0])
            if val > best:
                p = p.copy()
                p[i] += move
                best = val
                steps[i] = float(np.clip(abs(move), 0.25 * d, 2.0 * d))
            else:
                steps[i] = 0.25 * d
        # a failed sweep shrinks every step by 4; two in a row means the
        # quadratic model no longer finds progress at a much finer scale
        stalls = stalls + 1 if best - start < tol else 0
        if stalls == 2:
            return p, best, evals, True
    return p, best, evals, False


def entropy(curve, table=None, config=None):
    """Lower estimate of the entropy with its maximizing Gaussian."""
    config = config or EntropySearchConfig()
    table = table or arclength(curve)
    lo, hi = config.bounds_for(curve, table)
    mids, w = _edge_quadrature(curve, table)
    X = curve.vertices

    cands = X
    if config.x0_candidates == "centroid_plus_vertices":
        cands = np.vstack([X.mean(axis=0), X])
    t_grid = np.geomspace(lo, hi, config.t0_grid)
    grid = _f_many(mids, w, cands, t_grid)
    # first maximum in (t0, candidate index) order
    q, k = np.unravel_index(int(np.argmax(grid)), grid.shape)
    coarse = float(grid[q, k])
    evals = grid.size

    c, axes = _search_frame(X)
    n = curve.ambient_dim
    log_lo, log_hi = math.log(lo), math.log(hi)

    def fun(p):
        x0 = c + axes @ p[:n]
        t0 = math.exp(min(max(p[n], log_lo), log_hi))
        return float(_f_many(mids, w, x0[None, :], [t0])[0, 0])

    p0 = np.append(axes.T @ (cands[k] - c), math.log(t_grid[q]))
    dlog = math.log(t_grid[1] / t_grid[0])
    steps = [0.5 * math.sqrt(t_grid[q])] * n + [0.5 * dlog]
    p, best, more, converged = _ascend(fun, p0, steps, config.refine_iters,
                                       config.refine_tol)
    evals += more
    if best < coarse - 1e-12 * abs(coarse):
        raise AssertionError("ascent lost the coarse maximum")
    spec = GaussianSpec(c + axes @ p[:n], math.exp(min(max(p[n], log_lo), log_hi)))
    return EntropyResult(best, spec, evals, converged, coarse, (lo, hi))


# Grim Reaper y = -log cos x, |x| < pi/2

def _reaper_tail(y0, N):
    """Exact F-integral of both branches beyond height y0, in y-parametrization."""
    t0 = float(N)

    def integrand(y):
        u = math.exp(-y)
        x = math.acos(u)
        ds = 1.0 / math.sqrt(-math.expm1(-2.0 * y))
        return math.exp(-(x * x + (y - N) ** 2) / (4.0 * t0)) * ds

    edges = [y0, N, np.inf] if N > y0 else [y0, np.inf]
    val = sum(integrate.quad(integrand, a, b, limit=400)[0]
              for a, b in zip(edges, edges[1:]))
    return 2.0 * val / math.sqrt(4.0 * math.pi * t0)


def _reaper_tail_bound(y0, x_w, N):
    """Upper bound for the tail: |x| >= x_w and ds/dy <= ds/dy(y0) beyond y0."""
    t0 = float(N)
    slope = 1.0 / math.sqrt(-math.expm1(-2.0 * y0))
    # int_{y0}^inf exp(-(y-N)^2/4t0) dy = sqrt(pi t0) erfc((y0-N)/(2 sqrt t0))
    gauss = math.sqrt(math.pi * t0) * special.erfc((y0 - N) / (2.0 * math.sqrt(t0)))
    return 2.0 * slope * math.exp(-x_w ** 2 / (4.0 * t0)) * gauss / math.sqrt(4.0 * math.pi * t0)


def grim_reaper_limit_check(window_margin, N_list, n_vertices=4097, details=False):
    """F_{(0,N),N} of the Grim Reaper for each N.

    The window |x| <= pi/2 - window_margin is a polyline evaluated with the
    same midpoint rule as :func:`f_functional`; the two tails are integrated
    in y. With ``details`` each entry is a dict that also carries the window
    and tail parts and the analytic tail bound.
    """
    from .reference import grim_reaper

    check_positive(window_margin, "window_margin")
    N_list = [float(N) for N in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    half = 0.5 * math.pi - window_margin
    curve = grim_reaper(half, 0.0, n_vertices)
    table = arclength(curve)
    y0 = -math.log(math.cos(half))
    out = []
    for N in N_list:
        window = f_functional(curve, table, GaussianSpec([0.0, N], N))
        tail = _reaper_tail(y0, N)
        bound = _reaper_tail_bound(y0, half, N)
        value = window + tail
        if details:
            out.append({"N": N, "value": value, "window": window, "tail": tail,
                        "tail_bound": bound})
        else:
            out.append(value)
    return out


def _length_in_ball(X, closed, x, r):
    a = X
    b = np.roll(X, -1, axis=0) if closed else X[1:]
    a = a[: len(b)]
    d = b - a
    f = a - x
    A = np.sum(d * d, axis=1)
    B = 2.0 * np.sum(f * d, axis=1)
    C = np.sum(f * f, axis=1) - r * r
    disc = B * B - 4 * A * C
    ok = disc > 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    s0 = np.clip((-B - sq) / (2 * A), 0.0, 1.0)
    s1 = np.clip((-B + sq) / (2 * A), 0.0, 1.0)
    return float(np.sum(np.where(ok, (s1 - s0) * np.sqrt(A), 0.0)))


def euclidean_density(curve, x, r_list):
    """Density Theta(x) = lim length(B_r(x) cap curve) / (2r).

    The ratios for each radius are extrapolated to r = 0 by a least-squares
    fit linear in r^2.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r_list, dtype=float)
    if r.ndim != 1 or len(r) < 1 or np.any(r <= 0):
        raise ValueError("r_list must be a non-empty list of positive radii")
    if np.any(np.diff(r) >= 0):
        raise ValueError("r_list must be decreasing")
    X = curve.vertices
    # distance from x to the polyline
    a = X
    b = np.roll(X, -1, axis=0) if curve.closed else X[1:]
    a = a[: len(b)]
    d = b - a
    s = np.clip(np.sum((x - a) * d, axis=1) / np.sum(d * d, axis=1), 0.0, 1.0)
    dist = float(np.min(np.linalg.norm(a + s[:, None] * d - x, axis=1)))
    if dist > r.max():
        raise PointTooFar(f"point is {dist:.3g} from the curve, beyond r = {r.max():.3g}")
    ratios = np.array([_length_in_ball(X, curve.closed, x, ri) / (2 * ri) for ri in r])
    if len(r) == 1:
        return float(ratios[0])
    coef = np.polyfit(r ** 2, ratios, 1)
    return float(coef[1])
