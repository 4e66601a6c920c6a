"""Blow-up analysis near the singular time.

Classification uses the product K_t (omega - t), which stays bounded for a
type-I singularity and blows up for type II. Rescalings come in two kinds:
anchored at a curvature maximum (translate, rotate the Frenet frame onto
the standard basis, scale by the curvature there) and continuous, about a
fixed limit point with factor (2 (omega - t))^(-1/2).
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .exceptions import DegenerateFrame, InsufficientBlowupData, NotNearPlanar
from .flow import estimate_singular_time
from .geometry import (_make, arclength, derivatives, frenet_frame,
                       planarity_defect, project_to_plane,
                       total_absolute_curvature)
from .reference import FAMILY_ORDER, ReferenceLibrary

SLOPE_TOL = 0.2
FIT_MIN = 0.99
GROWTH_MIN = 3.0
NONE_RESIDUAL = 0.3
PLANAR_MAX = 0.1
SIGNATURE_SAMPLES = 256


@dataclass(frozen=True)
class Classification:
    type: str
    omega_hat: float
    limsup_estimate: float
    fit_quality: float
    relative_slope: float
    growth: float

    def __iter__(self):
        return iter((self.type, self.omega_hat, self.limsup_estimate))

    def to_dict(self):
        return {"type": self.type, "omega_hat": self.omega_hat,
                "limsup_estimate": self.limsup_estimate, "fit_quality": self.fit_quality,
                "relative_slope": self.relative_slope, "growth": self.growth,
                "thresholds": {"slope": SLOPE_TOL, "fit": FIT_MIN, "growth": GROWTH_MIN}}


def _final_decade(traj):
    K = traj.series("sup_kappa_sq")
    return np.flatnonzero(K >= K.max() / 10.0)


def classify(traj):
    """Type of the singularity from the final decade of curvature growth."""
    omega, fit = estimate_singular_time(traj)
    idx = _final_decade(traj)
    t = traj.times[idx]
    K = traj.series("sup_kappa_sq")[idx]
    keep = t < omega
    if keep.sum() < 3:
        raise InsufficientBlowupData("too few snapshots before the estimated singular time")
    t, K = t[keep], K[keep]
    q = K * (omega - t)
    # slope of q against decades of K, relative to its mean
    slope = np.polyfit(np.log10(K), q, 1)[0]
    span = math.log10(K[-1] / K[0])
    rel = float(abs(slope) * min(span, 1.0) / q.mean())
    growth = float(q[-1] / q[0])
    if growth > GROWTH_MIN:
        kind = "II"
    elif rel < SLOPE_TOL and fit > FIT_MIN:
        kind = "I"
    else:
        kind = "undetermined"
    return Classification(kind, omega, float(q.max()), fit, rel, growth)


@dataclass(frozen=True)
class BlowupPoint:
    p: float
    t_j: float
    lambda_j: float
    snapshot: int
    vertex: int
    rho_measured: float
    essential: bool

    def to_dict(self):
        return {"p": self.p, "t": self.t_j, "lambda": self.lambda_j,
                "snapshot": self.snapshot, "vertex": self.vertex,
                "rho_measured": self.rho_measured, "essential": self.essential}


TIE_RTOL = 1e-9


def _argmax_first(kappa, rtol=TIE_RTOL):
    # maxima equal up to round-off go to the smallest vertex index
    return int(np.flatnonzero(kappa >= kappa.max() * (1.0 - rtol))[0])


def select_blowup_sequence(traj, rho=1.0, count=10):
    """Curvature maxima of the last ``count`` snapshots.

    ``rho_measured`` is kappa^2 at the selected point over the largest K_t
    recorded up to that time; the point is essential when it is >= rho,
    up to the round-off band used to break ties between maxima.
    """
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    K = traj.series("sup_kappa_sq")
    running = np.maximum.accumulate(K)
    out = []
    n = len(traj)
    for j in range(max(0, n - count), n):
        s = traj[j]
        f = s.frenet
        i = _argmax_first(f.kappa)
        k = float(f.kappa[i])
        measured = k * k / running[j]
        out.append(BlowupPoint(float(f.table.cumulative[i] / f.table.total_length), s.t,
                               k, j, i, float(measured), bool(measured >= rho * (1 - 2 * TIE_RTOL))))
    return out


@dataclass(frozen=True)
class RescaledSnapshot:
    curve: object
    source_time: float
    frame_anchored: bool
    scale: float
    t_tilde: float = None
    source_index: int = None

    def to_dict(self):
        return {"source_time": self.source_time, "frame_anchored": self.frame_anchored,
                "scale": self.scale, "t_tilde": self.t_tilde,
                "source_index": self.source_index}


def _complete_basis(rows, n):
    """Extend orthonormal rows to a basis of R^n with canonical vectors in order."""
    basis = [r for r in rows]
    for e in np.eye(n):
        if len(basis) == n:
            break
        v = e - sum(np.dot(e, b) * b for b in basis)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    A = np.array(basis)
    if len(rows) < n and np.linalg.det(A) < 0:
        A[-1] = -A[-1]
    return A


def rescale_at(traj, bp):
    """Anchor the snapshot of ``bp``: point to origin, frame to e_1, e_2, ..., scale lambda."""
    s = traj[bp.snapshot]
    f = s.frenet
    i = bp.vertex
    rank = int(f.frame_rank[i])
    if rank < 2:
        raise DegenerateFrame(f"frame rank {rank} at vertex {i}")
    n = s.curve.ambient_dim
    A = _complete_basis(list(f.frame[i, :rank]), n)
    lam = float(f.kappa[i])
    X = s.curve.vertices
    Y = lam * (X - X[i]) @ A.T
    return RescaledSnapshot(_make(Y, s.curve.closed), s.t, True, lam, None, bp.snapshot)


def continuous_rescaling(traj, omega_hat):
    """Every snapshot scaled by (2 (omega_hat - t))^(-1/2) about the final centroid."""
    if not omega_hat > traj.times[-1]:
        raise ValueError("omega_hat must exceed the last snapshot time")
    c = traj[-1].curve.vertices.mean(axis=0)
    out = []
    for j, s in enumerate(traj.snapshots):
        gap = omega_hat - s.t
        lam = 1.0 / math.sqrt(2.0 * gap)
        Y = lam * (s.curve.vertices - c)
        out.append(RescaledSnapshot(_make(Y, s.curve.closed), s.t, False, lam,
                                    -0.5 * math.log(gap), j))
    return out


def shrinker_residual(snapshot):
    """RMS over vertices of |gamma_ss + gamma^perp|, gamma^perp = gamma - <gamma, T> T.

    Accepts a :class:`RescaledSnapshot` or a curve. Open curves skip three
    stencil widths at each end.
    """
    curve = getattr(snapshot, "curve", snapshot)
    table = arclength(curve)
    f = frenet_frame(curve, table)
    X = curve.vertices
    T = f.T
    g_ss = derivatives(curve, table, 2)
    perp = X - np.sum(X * T, axis=1)[:, None] * T
    r = np.linalg.norm(g_ss + perp, axis=1)
    if not curve.closed:
        r = r[3:-3]
    return float(np.sqrt(np.mean(r ** 2)))


@lru_cache(maxsize=1)
def _default_library():
    return ReferenceLibrary.default()


@dataclass(frozen=True)
class ProfileMatch:
    family: str
    residual: float
    winding: int
    tag: str = None
    m: int = None
    n: int = None

    def to_dict(self):
        return {"family": self.family, "tag": self.tag or self.family,
                "residual": self.residual, "winding": self.winding, "m": self.m, "n": self.n}


def curvature_signature(curve, samples=SIGNATURE_SAMPLES):
    """kappa * L sampled at equally spaced arclength fractions."""
    table = arclength(curve)
    k = frenet_frame(curve, table).kappa * table.total_length
    frac = table.cumulative / table.total_length
    u = np.arange(samples) / samples if curve.closed else np.linspace(0.0, 1.0, samples)
    if curve.closed:
        spline = CubicSpline(np.append(frac, 1.0), np.append(k, k[0]), bc_type="periodic")
        return spline(u)
    return np.interp(u, frac, k)


def _cyclic_distance(a, b):
    """min over real shifts delta of RMS(a(x) - b(x + delta)), spectrally."""
    S = len(a)
    A = np.fft.rfft(a)
    B = np.fft.rfft(b)
    freq = np.arange(len(A))
    wt = np.full(len(A), 2.0)
    wt[0] = 1.0
    if S % 2 == 0:
        wt[-1] = 1.0

    def msd(delta):
        diff = A - B * np.exp(2j * np.pi * freq * delta / S)
        return float(np.sum(wt * np.abs(diff) ** 2) / S ** 2)

    corr = np.fft.irfft(np.conj(A) * B, S)
    k0 = int(np.argmax(corr))
    best = minimize_scalar(msd, bounds=(k0 - 1.0, k0 + 1.0), method="bounded",
                           options={"xatol": 1e-6})
    return math.sqrt(max(min(best.fun, msd(k0)), 0.0))


def _signature_distance(a, b, closed):
    if closed:
        return min(_cyclic_distance(a, b), _cyclic_distance(a, b[::-1]))
    return min(float(np.sqrt(np.mean((a - b) ** 2))),
               float(np.sqrt(np.mean((a - b[::-1]) ** 2))))


def match_profile(snapshot, library=None):
    """Closest library member by curvature signature."""
    library = library if library is not None else _default_library()
    curve = getattr(snapshot, "curve", snapshot)
    pca, _ = planarity_defect(curve)
    if pca >= PLANAR_MAX:
        raise NotNearPlanar(f"pca_residual {pca:.3g} >= {PLANAR_MAX}")
    flat = project_to_plane(curve) if curve.ambient_dim > 2 else curve
    winding = int(round(total_absolute_curvature(flat) / (2 * math.pi)))
    sig = curvature_signature(flat)
    scored = []
    for prof in library:
        if prof.curve.closed != flat.closed:
            continue
        d = _signature_distance(sig, curvature_signature(prof.curve), flat.closed)
        scored.append((d, FAMILY_ORDER.index(prof.family), prof))
    if not scored:
        return ProfileMatch("none", math.inf, winding, "none")
    d, _, prof = min(scored, key=lambda x: (x[0], x[1]))
    if d > NONE_RESIDUAL:
        return ProfileMatch("none", d, winding, "none")
    m = prof.m if prof.family in ("multi_circle", "abresch_langer") else None
    n = prof.n if prof.family == "abresch_langer" else None
    return ProfileMatch(prof.family, d, winding, prof.tag, m, n)


@dataclass
class SingularityReport:
    type: str
    omega_hat: float
    limsup_estimate: float
    fit_quality: float
    classification: Classification
    blowup_points: list
    snapshots: list
    planarity_series: list
    profile: ProfileMatch
    continuous: list = field(default_factory=list)

    def to_dict(self):
        return {"type": self.type, "omega_hat": self.omega_hat,
                "limsup_estimate": self.limsup_estimate, "fit_quality": self.fit_quality,
                "classification": self.classification.to_dict(),
                "blowup_points": [b.to_dict() for b in self.blowup_points],
                "snapshots": [s.to_dict() for s in self.snapshots],
                "planarity_series": [list(p) for p in self.planarity_series],
                "profile": self.profile.to_dict(),
                "continuous": [s.to_dict() for s in self.continuous]}


def planarity_series(traj, indices=None):
    """(t, pca_residual, sup_tau1) of the curvature-anchored rescalings.

    Defaults to every snapshot in the final decade of K_t.
    """
    if indices is None:
        indices = _final_decade(traj)
    out = []
    for j in indices:
        f = traj[j].frenet
        i = _argmax_first(f.kappa)
        bp = BlowupPoint(0.0, traj[j].t, float(f.kappa[i]), int(j), i, 1.0, True)
        r = rescale_at(traj, bp)
        pca, tau = planarity_defect(r.curve)
        out.append((traj[j].t, pca, tau))
    return out


def analyze(traj, library=None, rho=1.0, count=10):
    """Full blow-up report for a curvature-blowup trajectory."""
    cls = classify(traj)
    points = select_blowup_sequence(traj, rho, count)
    snaps = [rescale_at(traj, bp) for bp in points]
    series = planarity_series(traj)
    try:
        profile = match_profile(snaps[-1], library)
    except NotNearPlanar:
        profile = ProfileMatch("none", math.inf, 0, "none")
    cont = continuous_rescaling(traj, cls.omega_hat) if cls.omega_hat > traj.times[-1] else []
    return SingularityReport(cls.type, cls.omega_hat, cls.limsup_estimate, cls.fit_quality,
                             cls, points, snaps, series, profile, cont)
