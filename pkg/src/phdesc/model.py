"""Ridge regression on descriptor grids, and PCA of descriptor space."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .descriptor import DescriptorHistogram, GridSpec, StandardizationStats, standardize
from .errors import InputError, ParameterError, ShapeError, SolverError

DEFAULT_LAMBDA = 200.0


@dataclass(eq=False)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float = DEFAULT_LAMBDA
    stats: Optional[StandardizationStats] = None
    spec: Optional[GridSpec] = None
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.spec is not None and self.weights.size != self.spec.bins ** 2:
            raise ShapeError(f"{self.weights.size} weights for a {self.spec.bins}x{self.spec.bins} grid")

    @property
    def weight_grid(self) -> np.ndarray:
        if self.spec is None:
            raise ShapeError("model has no grid spec")
        return self.weights.reshape(self.spec.shape)


def _as_matrix(features):
    if len(features) and isinstance(features[0], DescriptorHistogram):
        spec = features[0].spec
        for h in features:
            if h.spec != spec:
                raise ShapeError(f"mixed grid specs: {spec} vs {h.spec}")
        x = np.stack([h.vector for h in features])
    else:
        spec = None
        x = np.asarray(features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"features must form a 2D design matrix, got shape {x.shape}")
    bad = ~np.isfinite(x).all(axis=1)
    if bad.any():
        raise InputError(f"non-finite feature entries in sample {int(np.nonzero(bad)[0][0])}")
    return x, spec


def ridge_solve(x, y, lam, method="auto"):
    """Weights and intercept minimizing ``|y - Xw - b|^2 + lam |w|^2``, intercept unpenalized.

    ``method`` is ``"dual"`` (an n x n system, for n < p), ``"primal"`` (p x p)
    or ``"auto"``. Both factorize with Cholesky; ``lam == 0`` falls back to a
    minimum-norm least-squares solve and rejects rank-deficient designs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, p = x.shape
    if len(y) != n:
        raise ShapeError(f"{n} samples but {len(y)} labels")
    if not np.all(np.isfinite(y)):
        raise InputError("labels must be finite")
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    xm, ym = x.mean(axis=0), y.mean()
    xc, yc = x - xm, y - ym
    if method == "auto":
        method = "dual" if n < p else "primal"
    if method not in ("dual", "primal"):
        raise ParameterError(f"unknown ridge method {method!r}")

    if lam == 0:
        w, _, rank, _ = np.linalg.lstsq(xc, yc, rcond=None)
        if rank < min(n - 1, p):
            raise SolverError("design is rank deficient at lambda=0 (duplicate samples?); use lambda > 0")
        return w, float(ym - xm @ w)

    try:
        if method == "dual":
            gram = xc @ xc.T
            gram[np.diag_indices_from(gram)] += lam
            alpha = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram, lower=True), yc)
            w = xc.T @ alpha
        else:
            cov = xc.T @ xc
            cov[np.diag_indices_from(cov)] += lam
            w = scipy.linalg.cho_solve(scipy.linalg.cho_factor(cov, lower=True), xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"ridge system is not positive definite ({exc}); use a larger lambda") from exc
    return w, float(ym - xm @ w)


def fit_ridge(features, labels, lam=DEFAULT_LAMBDA, stats=None, method="auto", seed=None) -> RidgeModel:
    """Fit on standardized histograms (or a plain design matrix).

    Pass the :class:`StandardizationStats` used to build ``features`` so that
    :func:`predict` can take raw normalized histograms.
    """
    x, spec = _as_matrix(features)
    if len(x) < 2:
        raise ParameterError("ridge regression needs at least 2 samples")
    if spec is not None and not all(h.standardized for h in features):
        raise ParameterError("fit_ridge expects standardized histograms")
    w, b = ridge_solve(x, labels, lam, method)
    return RidgeModel(w, b, float(lam), stats, spec, seed)


def stationarity_residual(x, y, w, b, lam) -> float:
    """Max-norm of the gradient of the ridge objective in ``w`` at the centered optimum."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc, yc = x - x.mean(axis=0), y - y.mean()
    return float(np.max(np.abs(2 * xc.T @ (xc @ w - yc) + 2 * lam * w)))


def predict(model: RidgeModel, hist) -> float:
    """Energy per atom for one normalized (not yet standardized) histogram."""
    return float(predict_many(model, [hist])[0])


def predict_many(model: RidgeModel, hists) -> np.ndarray:
    if len(hists) and isinstance(hists[0], DescriptorHistogram):
        rows = []
        for h in hists:
            if model.spec is not None and h.spec != model.spec:
                raise ShapeError(f"histogram spec {h.spec} does not match model spec {model.spec}")
            if not h.standardized:
                if model.stats is None:
                    raise ParameterError("model has no standardization stats")
                h = standardize(h, model.stats)
            rows.append(h.vector)
        x = np.stack(rows)
    else:
        x = np.asarray(hists, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[1] != model.weights.size:
            raise ShapeError(f"{x.shape[1]} features for a model with {model.weights.size} weights")
    return x @ model.weights + model.intercept


def rmse(predictions, labels) -> float:
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape or p.size == 0:
        raise ShapeError("predictions and labels must have equal, nonzero length")
    return float(np.sqrt(np.mean((p - y) ** 2)))


def r2_score(predictions, labels) -> float:
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=float)
    ss_res = np.sum((y - p) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - ss_res / ss_tot)


def train_test_split(n, train_fraction=0.8, seed=0):
    """Seeded shuffle of ``range(n)`` split into (train, test) index arrays."""
    if not 0 < train_fraction < 1:
        raise ParameterError(f"train fraction must be in (0, 1), got {train_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(train_fraction * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


@dataclass(eq=False)
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray  # (k, p)
    explained_variance_ratio: np.ndarray
    coordinates: np.ndarray  # (n, k)

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T


def fit_pca(features, k=2) -> PcaProjection:
    """Top-``k`` principal axes of the sample covariance.

    Computed from the thin SVD of the centered data, which avoids forming the
    p x p covariance for 128*128-dimensional grids. Each component is signed so
    its largest-magnitude entry is positive.
    """
    x, _ = _as_matrix(features)
    n, p = x.shape
    if k < 1 or k > p:
        raise ParameterError(f"k must be in [1, {p}], got {k}")
    if n < k + 1:
        raise ParameterError(f"PCA with k={k} needs at least {k + 1} samples, got {n}")
    mean = x.mean(axis=0)
    xc = x - mean
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    comps = vt[:k].copy()
    for c in comps:
        if c[np.argmax(np.abs(c))] < 0:
            c *= -1
    total = float(np.sum(s ** 2))
    ratio = (s[:k] ** 2) / total if total > 0 else np.zeros(k)
    if len(ratio) < k:
        ratio = np.concatenate([ratio, np.zeros(k - len(ratio))])
    return PcaProjection(mean, comps, ratio, xc @ comps.T)
