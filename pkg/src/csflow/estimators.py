"""scikit-learn style wrappers around the functional API.

Each estimator takes a vertex array ``X`` of shape (M, n) in ``fit`` and
stores its results in trailing-underscore attributes.
"""

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_vertices
from .entropy import EntropySearchConfig, entropy
from .flow import FlowConfig, estimate_singular_time, evolve
from .geometry import _make, arclength
from .singularity import analyze


def _curve(X, closed):
    return _make(check_vertices(X, closed=closed), closed)


class CurveShorteningFlow(TransformerMixin, BaseEstimator):
    """Evolve a curve by curve shortening flow.

    ``transform`` returns the vertices of the final snapshot.
    """

    def __init__(self, resample_count=256, cfl_safety=0.25, resample_trigger=1.05,
                 stop_kappa_sq=100.0, stop_time=None, snapshot_stride=100, closed=True):
        self.resample_count = resample_count
        self.cfl_safety = cfl_safety
        self.resample_trigger = resample_trigger
        self.stop_kappa_sq = stop_kappa_sq
        self.stop_time = stop_time
        self.snapshot_stride = snapshot_stride
        self.closed = closed

    def _config(self):
        return FlowConfig(resample_count=self.resample_count, cfl_safety=self.cfl_safety,
                          resample_trigger=self.resample_trigger,
                          stop_kappa_sq=self.stop_kappa_sq, stop_time=self.stop_time,
                          snapshot_stride=self.snapshot_stride)

    def fit(self, X, y=None):
        self.trajectory_ = evolve(_curve(X, self.closed), self._config())
        self.termination_reason_ = self.trajectory_.termination_reason
        self.final_time_ = float(self.trajectory_.times[-1])
        self.n_features_in_ = self.trajectory_[0].curve.ambient_dim
        if self.termination_reason_ == "curvature_blowup":
            self.omega_hat_, self.fit_quality_ = estimate_singular_time(self.trajectory_)
        return self

    def transform(self, X=None):
        check_is_fitted(self, "trajectory_")
        return self.trajectory_[-1].curve.vertices.copy()


class EntropyEstimator(BaseEstimator):
    """Lower estimate of the entropy of a closed or open curve."""

    def __init__(self, t0_min=None, t0_max=None, t0_grid=24,
                 x0_candidates="centroid_plus_vertices", refine_iters=200,
                 refine_tol=1e-9, closed=True):
        self.t0_min = t0_min
        self.t0_max = t0_max
        self.t0_grid = t0_grid
        self.x0_candidates = x0_candidates
        self.refine_iters = refine_iters
        self.refine_tol = refine_tol
        self.closed = closed

    def fit(self, X, y=None):
        curve = _curve(X, self.closed)
        cfg = EntropySearchConfig(self.t0_min, self.t0_max, self.t0_grid,
                                  self.x0_candidates, self.refine_iters, self.refine_tol)
        self.result_ = entropy(curve, arclength(curve), cfg)
        self.lambda_ = self.result_.value
        self.x0_ = self.result_.maximizer.x0
        self.t0_ = self.result_.maximizer.t0
        self.converged_ = self.result_.converged
        self.n_features_in_ = curve.ambient_dim
        return self

    def predict(self, X):
        """Entropy of ``X`` (refits on the given curve)."""
        return self.fit(X).lambda_


class SingularityAnalyzer(BaseEstimator):
    """Evolve to blow-up, then classify and match the singularity."""

    def __init__(self, resample_count=256, stop_kappa_sq=1e4, snapshot_stride=100, rho=1.0):
        self.resample_count = resample_count
        self.stop_kappa_sq = stop_kappa_sq
        self.snapshot_stride = snapshot_stride
        self.rho = rho

    def fit(self, X, y=None):
        cfg = FlowConfig(resample_count=self.resample_count, stop_kappa_sq=self.stop_kappa_sq,
                         snapshot_stride=self.snapshot_stride)
        self.trajectory_ = evolve(_curve(X, True), cfg)
        self.report_ = analyze(self.trajectory_, rho=self.rho)
        self.type_ = self.report_.type
        self.omega_hat_ = self.report_.omega_hat
        self.profile_ = self.report_.profile
        self.n_features_in_ = self.trajectory_[0].curve.ambient_dim
        return self

    def predict(self, X=None):
        """Singularity type of the fitted run ("I", "II" or "undetermined")."""
        check_is_fitted(self, "report_")
        return self.type_
