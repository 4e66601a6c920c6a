import math

import numpy as np
import pytest

from csflow.curves import perturbed_circle
from csflow.exceptions import DegenerateFrame, InsufficientBlowupData, NotNearPlanar
from csflow.flow import FlowConfig, FlowState, Trajectory, evolve
from csflow.geometry import (OpenCurve, arclength, frenet_frame, hausdorff_distance,
                             random_rotation, resample)
from csflow.reference import abresch_langer, circle, grim_reaper
from csflow.singularity import (BlowupPoint, analyze, classify, continuous_rescaling,
                                curvature_signature, match_profile, planarity_series,
                                rescale_at, select_blowup_sequence, shrinker_residual)


def single(curve):
    return Trajectory([FlowState(0.0, curve)], FlowConfig(stop_time=1.0), "time_wall")


def anchored_unit_circle(dim=2, M=512):
    c = circle(dim, 1.0, 1, M).vertices.copy()
    c[:, 1] += 1.0
    return c


# -- classification -----------------------------------------------------------------

def test_classify_circle(circle_traj):
    kind, omega, limsup = classify(circle_traj)
    assert kind == "I"
    assert abs(limsup - 0.5) < 0.05
    assert abs(omega - 0.5) < 1e-3


def test_classify_ellipse(ellipse_traj):
    c = classify(ellipse_traj)
    assert c.type == "I"
    assert abs(c.limsup_estimate - 0.5) < 0.1
    assert c.fit_quality > 0.99


def test_classify_time_wall():
    tr = evolve(circle(2, 1.0, 1, 64), FlowConfig(resample_count=64, stop_time=0.2))
    with pytest.raises(InsufficientBlowupData):
        classify(tr)


# -- blow-up sequence --------------------------------------------------------------------

def test_blowup_sequence_circle(circle_traj):
    pts = select_blowup_sequence(circle_traj, rho=1.0)
    assert len(pts) == 10
    for bp in pts:
        k = circle_traj[bp.snapshot].frenet.kappa
        assert k[bp.vertex] >= k.max() * (1 - 1e-9)
        assert np.all(k[: bp.vertex] < k.max() * (1 - 1e-9))
        assert bp.lambda_j == pytest.approx((2 * (0.5 - bp.t_j)) ** -0.5, rel=1e-2)
        assert bp.essential
        assert 0 <= bp.p < 1


def test_blowup_sequence_ellipse_localizes(ellipse_traj):
    for bp in select_blowup_sequence(ellipse_traj)[-3:]:
        x, y = ellipse_traj[bp.snapshot].curve.vertices[bp.vertex]
        assert abs(y) < 0.1 * abs(x)


def test_blowup_sequence_rho_validation(circle_traj):
    with pytest.raises(ValueError):
        select_blowup_sequence(circle_traj, rho=0.0)


# -- rescale_at ---------------------------------------------------------------------------

def test_rescale_circle_radius_two():
    tr = single(circle(3, 2.0, 1, 512))
    bp = select_blowup_sequence(tr)[-1]
    r = rescale_at(tr, bp)
    Y = r.curve.vertices
    assert np.all(Y[bp.vertex] == 0)
    assert r.frame_anchored
    target = np.zeros(3)
    target[1] = 1.0
    assert np.max(np.abs(np.linalg.norm(Y - target, axis=1) - 1)) < 1e-4
    f = frenet_frame(r.curve)
    assert abs(f.kappa[bp.vertex] - 1) < 1e-6
    assert np.allclose(f.T[bp.vertex], [1, 0, 0], atol=1e-6)
    assert np.allclose(f.N[bp.vertex], [0, 1, 0], atol=1e-6)


def test_rescale_normalizes_curvature(nonplanar_traj):
    for bp in select_blowup_sequence(nonplanar_traj, count=4):
        r = rescale_at(nonplanar_traj, bp)
        f = frenet_frame(r.curve)
        assert abs(f.kappa[bp.vertex] - 1) < 1e-6
        assert np.linalg.norm(r.curve.vertices[bp.vertex]) < 1e-9


def test_rescale_ellipse_late_is_round(ellipse_traj):
    bp = select_blowup_sequence(ellipse_traj)[-1]
    r = rescale_at(ellipse_traj, bp)
    ref = OpenCurve(anchored_unit_circle())
    assert hausdorff_distance(r.curve, ref) < 0.05


def test_rescale_equivariance(nonplanar_traj):
    rng = np.random.default_rng(2)
    Q = random_rotation(4, rng)
    moved = nonplanar_traj.transformed(Q, rng.normal(size=4))
    for bp in select_blowup_sequence(nonplanar_traj, count=3):
        a = rescale_at(nonplanar_traj, bp).curve.vertices
        b = rescale_at(moved, bp).curve.vertices
        assert np.max(np.abs(a - b)) < 1e-8


def test_rescale_degenerate_frame():
    X = np.c_[np.linspace(0, 1, 33), np.zeros(33)]
    tr = single(OpenCurve(X))
    with pytest.raises(DegenerateFrame):
        rescale_at(tr, BlowupPoint(0.5, 0.0, 1.0, 0, 16, 1.0, True))


# -- continuous rescaling ---------------------------------------------------------------

def test_continuous_rescaling_circle():
    r0 = 1.5
    tr = evolve(circle(2, r0, 1, 256), FlowConfig(stop_kappa_sq=100.0))
    snaps = continuous_rescaling(tr, r0 ** 2 / 2)
    for s in snaps:
        r = np.linalg.norm(s.curve.vertices, axis=1)
        assert np.max(np.abs(r - 1)) < 1e-2
    tt = [s.t_tilde for s in snaps]
    assert np.all(np.diff(tt) > 0)


def test_continuous_rescaling_ellipse(ellipse_traj):
    omega = classify(ellipse_traj).omega_hat
    final = continuous_rescaling(ellipse_traj, omega)[-1]
    assert hausdorff_distance(final.curve, circle(2, 1.0, 1, 1024)) < 2e-2


def test_continuous_rescaling_requires_future_omega(circle_traj):
    with pytest.raises(ValueError):
        continuous_rescaling(circle_traj, circle_traj.times[-1])


# -- shrinker residual ---------------------------------------------------------------------

def test_shrinker_unit_circle():
    assert shrinker_residual(circle(2, 1.0, 1, 256)) < 2e-3


def test_shrinker_radius_two():
    assert shrinker_residual(circle(2, 2.0, 1, 256)) == pytest.approx(1.5, abs=1e-2)


def test_shrinker_translated():
    assert shrinker_residual(circle(2, 1.0, 1, 256).transformed(b=[5.0, 0.0])) > 1


# -- profile matching --------------------------------------------------------------------

def test_match_circle():
    m = match_profile(circle(2, 1.0, 1, 300))
    assert m.family == "circle" and m.residual < 1e-2 and m.winding == 1


def test_match_double_circle():
    m = match_profile(circle(3, 1.0, 2, 300))
    assert m.family == "multi_circle" and m.m == 2 and m.winding == 2


def test_match_abresch_langer():
    m = match_profile(abresch_langer(2, 3, 512).transformed(scale=0.3))
    assert (m.family, m.m, m.n, m.winding) == ("abresch_langer", 2, 3, 2)


def test_match_grim_reaper():
    c = resample(grim_reaper(0.5 * math.pi - 0.05, 3.0, 2001), 1500)
    m = match_profile(c)
    assert m.family == "grim_reaper" and m.residual < 5e-2


def test_match_dilation_invariant():
    c = abresch_langer(2, 3, 256).transformed(scale=1.3)
    a = match_profile(c).residual
    b = match_profile(c.transformed(scale=7.3)).residual
    assert abs(a - b) < 1e-8


def test_match_reflection_and_shift():
    c = abresch_langer(2, 3, 512)
    X = np.roll(c.vertices[::-1], 37, axis=0) * [1.0, -1.0]
    assert match_profile(c.with_vertices(X)).residual < 1e-2


def test_match_not_planar():
    with pytest.raises(NotNearPlanar):
        match_profile(perturbed_circle((0.6,), (3,), 3, 256))


def test_signature_scale_free():
    c = circle(2, 3.0, 1, 256)
    assert np.allclose(curvature_signature(c), 2 * math.pi, rtol=1e-3)


# -- trajectory-level properties -------------------------------------------------------------

def test_torsion_killing(nonplanar_traj):
    t = nonplanar_traj.times
    tors = nonplanar_traj.series("tac_torsion")
    tac = nonplanar_traj.series("tac")
    integral = float(np.sum(0.5 * (tors[1:] + tors[:-1]) * np.diff(t)))
    assert integral > 0
    assert integral <= tac[0] - tac[-1] + 5e-2


def test_planarity_trend(perturbed_traj):
    series = planarity_series(perturbed_traj)
    pca = np.array([p for _, p, _ in series])
    assert pca[-1] < 1e-2
    half = len(pca) // 2
    assert np.all(np.diff(pca[half:]) <= 1e-12)


def test_analyze_ellipse(ellipse_traj):
    rep = analyze(ellipse_traj)
    assert rep.type == "I"
    assert 0.8 <= 2 * rep.limsup_estimate <= 1.2
    assert rep.profile.family == "circle"
    assert rep.snapshots
    d = rep.to_dict()
    assert d["classification"]["thresholds"]["slope"] == 0.2
