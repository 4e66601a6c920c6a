import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from csflow.curves import ellipse
from csflow.exceptions import DegenerateEdge, InvalidCurve
from csflow.geometry import (DiscreteCurve, OpenCurve, arclength, derivatives,
                             frenet_frame, frenet_residual, planarity_defect,
                             random_rotation, resample, total_absolute_curvature)
from csflow.reference import circle


def regular_polygon(m, r=1.0):
    p = 2 * np.pi * np.arange(m) / m
    return DiscreteCurve(np.c_[r * np.cos(p), r * np.sin(p)])


# -- exact parametrization oracle for (cos p, sin p, 0.2 sin 3p) -------------

def _d1(p):
    return np.array([-math.sin(p), math.cos(p), 0.6 * math.cos(3 * p)])


def _d2(p):
    return np.array([-math.cos(p), -math.sin(p), -1.8 * math.sin(3 * p)])


def _d3(p):
    return np.array([math.sin(p), -math.cos(p), -5.4 * math.cos(3 * p)])


def _oracle_kappa_tau(p):
    a, b, c = _d1(p), _d2(p), _d3(p)
    cr = np.cross(a, b)
    kappa = np.linalg.norm(cr) / np.linalg.norm(a) ** 3
    tau = np.dot(cr, c) / np.dot(cr, cr)
    return kappa, tau


def arclength_sampled_space_curve(M):
    """Vertices at exactly equal arclength on the smooth curve, with their parameters."""
    speed = lambda p: np.linalg.norm(_d1(p))
    L = quad(speed, 0, 2 * np.pi, limit=200, epsabs=1e-13)[0]
    ps = [0.0]
    for k in range(1, M):
        target = k * L / M
        ps.append(brentq(lambda p: quad(speed, 0, p, limit=200, epsabs=1e-13)[0] - target,
                         ps[-1], 2 * np.pi))
    ps = np.array(ps)
    X = np.c_[np.cos(ps), np.sin(ps), 0.2 * np.sin(3 * ps)]
    return DiscreteCurve(X), ps


@pytest.fixture(scope="module")
def space_curve_512():
    return arclength_sampled_space_curve(512)


# -- construction -----------------------------------------------------------

def test_rejects_too_few_vertices():
    with pytest.raises(InvalidCurve):
        regular_polygon(8)


def test_rejects_repeated_vertex():
    X = regular_polygon(32).vertices.copy()
    X[5] = X[4]
    with pytest.raises(DegenerateEdge):
        DiscreteCurve(X)


def test_rejects_nonfinite():
    X = regular_polygon(32).vertices.copy()
    X[3, 0] = np.nan
    with pytest.raises(InvalidCurve):
        DiscreteCurve(X)


def test_vertices_are_read_only():
    c = regular_polygon(32)
    with pytest.raises(ValueError):
        c.vertices[0, 0] = 1.0


# -- arclength ----------------------------------------------------------------

def test_polygon_length():
    assert arclength(regular_polygon(64)).total_length == pytest.approx(128 * math.sin(math.pi / 64), abs=1e-13)


def test_unit_segment_length():
    seg = OpenCurve(np.c_[np.linspace(0, 1, 17), np.zeros(17)])
    tab = arclength(seg)
    assert tab.total_length == pytest.approx(1.0, abs=1e-15)
    assert len(tab.edge_lengths) == 16


def test_length_homogeneous():
    c = ellipse(2.0, 1.0, 2, 64)
    assert arclength(c.transformed(scale=3.0)).total_length == pytest.approx(
        3 * arclength(c).total_length, rel=1e-14)


def test_cumulative_table():
    tab = arclength(ellipse(2.0, 1.0, 2, 64))
    assert tab.cumulative[0] == 0.0
    assert np.all(np.diff(tab.cumulative) > 0)
    assert tab.total_length == pytest.approx(tab.edge_lengths.sum(), rel=1e-15)


# -- resample -----------------------------------------------------------------

def test_resample_fixed_point():
    c = regular_polygon(64)
    assert np.max(np.abs(resample(c, 64).vertices - c.vertices)) < 1e-12


def test_resample_refines_equally():
    c = regular_polygon(64)
    r = resample(c, 128)
    e = arclength(r).edge_lengths
    assert e.max() / e.min() - 1 < 1e-9


def test_resample_length_moves_toward_smooth_length():
    # new vertices sit on the interpolating spline, so refining an inscribed
    # polygon lengthens it toward the circumference, never past it
    c = regular_polygon(64)
    L0 = arclength(c).total_length
    L1 = arclength(resample(c, 128)).total_length
    assert L0 < L1 < 2 * math.pi
    assert 2 * math.pi - L1 < (2 * math.pi - L0) / 3


def test_resample_length_drift_shrinks_with_mesh():
    drift = []
    for M in (256, 1024):
        c = ellipse(2.0, 1.0, 2, M)
        L = arclength(c).total_length
        drift.append(abs(arclength(resample(c, M)).total_length - L) / L)
    assert drift[1] < 1e-6
    assert drift[0] / drift[1] > 8


def test_resample_nonuniform_ellipse():
    p = 2 * np.pi * (np.arange(256) / 256) ** 1.3
    c = DiscreteCurve(np.c_[2 * np.cos(p), np.sin(p)])
    e = arclength(resample(c, 256)).edge_lengths
    assert e.max() / e.min() < 1 + 1e-6


def test_resample_idempotent():
    c = resample(ellipse(2.0, 1.0, 2, 100), 128)
    assert np.max(np.abs(resample(c, 128).vertices - c.vertices)) < 1e-9


def test_resample_open_keeps_endpoints():
    x = np.linspace(-1, 1, 40) ** 3
    c = OpenCurve(np.c_[x, x ** 2])
    r = resample(c, 33)
    assert np.allclose(r.vertices[[0, -1]], c.vertices[[0, -1]], atol=0, rtol=0)
    e = arclength(r).edge_lengths
    assert e.max() / e.min() - 1 < 1e-9


# -- derivatives ----------------------------------------------------------------

def test_circle_unit_tangent():
    c = circle(2, 1.0, 1, 256)
    d1 = derivatives(c, arclength(c), 1)
    assert np.max(np.abs(np.linalg.norm(d1, axis=1) - 1)) < 1e-4


def test_circle_second_derivative():
    c = circle(2, 1.0, 1, 256)
    d2 = derivatives(c, arclength(c), 2)
    assert np.max(np.abs(d2 + c.vertices)) < 1e-3


def test_radius_two_curvature():
    c = circle(2, 2.0, 1, 256)
    d2 = derivatives(c, arclength(c), 2)
    assert np.max(np.abs(np.linalg.norm(d2, axis=1) - 0.5)) < 1e-3


def test_derivative_order_bounds():
    c = circle(2, 1.0, 1, 64)
    with pytest.raises(ValueError):
        derivatives(c, arclength(c), 5)


def test_circle_third_and_fourth_derivatives():
    c = circle(2, 1.0, 1, 256)
    tab = arclength(c)
    X = c.vertices
    T = np.c_[-X[:, 1], X[:, 0]]
    # gamma''' = -T and gamma'''' = gamma for the unit circle
    assert np.max(np.abs(derivatives(c, tab, 3) + T)) < 1e-3
    assert np.max(np.abs(derivatives(c, tab, 4) - X)) < 1e-3


# -- Frenet frame -------------------------------------------------------------

def test_planar_circle_in_r4():
    f = frenet_frame(circle(4, 1.0, 1, 256))
    assert np.max(np.abs(f.kappa - 1)) < 1e-3
    assert np.all(f.frame_rank == 2)
    assert np.max(np.abs(f.tau1)) < 1e-2
    assert np.all(np.isnan(f.frame[:, 2:]))


def test_segment_frame_rank_one():
    seg = OpenCurve(np.c_[np.linspace(0, 1, 33), np.linspace(0, 2, 33), np.zeros(33)])
    f = frenet_frame(seg)
    assert np.all(f.frame_rank[1:-1] == 1)
    assert np.max(np.abs(f.kappa)) < 1e-6
    assert np.all(np.isnan(f.N))


def test_space_curve_against_oracle(space_curve_512):
    curve, ps = space_curve_512
    f = frenet_frame(curve)
    ok = np.array([_oracle_kappa_tau(p) for p in ps])
    k_err = np.max(np.abs(f.kappa - ok[:, 0]) / ok[:, 0])
    tau_err = np.max(np.abs(f.torsion[:, 0] - ok[:, 1])) / np.max(np.abs(ok[:, 1]))
    assert k_err < 1e-2
    assert tau_err < 1e-2


def test_frame_orthonormal(space_curve_512):
    curve, _ = space_curve_512
    f = frenet_frame(curve.embedded(5))
    for i in range(curve.n_vertices):
        r = f.frame_rank[i]
        F = f.frame[i, :r]
        assert np.max(np.abs(F @ F.T - np.eye(r))) < 1e-8


def test_full_frame_right_handed():
    curve, _ = arclength_sampled_space_curve(128)
    f = frenet_frame(curve)
    full = f.frame_rank == 3
    # torsion vanishes at isolated points, where B_1 is not defined
    assert full.mean() > 0.9
    assert np.allclose(np.linalg.det(f.frame[full]), 1.0, atol=1e-10)


def test_frenet_residual_second_order():
    res = [frenet_residual(arclength_sampled_space_curve(M)[0]) for M in (128, 256, 512)]
    assert res[0] / res[1] >= 3
    assert res[1] / res[2] >= 3


# -- functionals ----------------------------------------------------------------

def test_tac_circle():
    assert total_absolute_curvature(circle(2, 1.0, 1, 256)) == pytest.approx(2 * math.pi, abs=1e-3)


def test_tac_double_cover():
    assert total_absolute_curvature(circle(4, 1.0, 2, 256)) == pytest.approx(4 * math.pi, abs=1e-2)


def test_tac_ellipse():
    assert total_absolute_curvature(ellipse(2.0, 1.0, 2, 256)) == pytest.approx(2 * math.pi, abs=1e-2)


def test_planar_ellipse_in_r5_rotated():
    rng = np.random.default_rng(7)
    c = ellipse(2.0, 1.0, 5, 256)
    Q = random_rotation(5, rng)
    pca, tau = planarity_defect(c.transformed(Q, b=rng.standard_normal(5)))
    assert pca < 1e-10


def test_space_curve_pca(space_curve_512):
    pca, tau = planarity_defect(space_curve_512[0])
    assert pca > 0.05
    assert tau > 0


def test_planarity_rigid_motion(space_curve_512):
    rng = np.random.default_rng(3)
    c = space_curve_512[0].embedded(4)
    moved = c.transformed(random_rotation(4, rng), b=rng.standard_normal(4))
    a, b = planarity_defect(c), planarity_defect(moved)
    assert abs(a[0] - b[0]) < 1e-10
    assert abs(a[1] - b[1]) < 1e-8 * max(1.0, a[1])
