"""scikit-learn style wrapper around the rank-based Luce-Hick fit.

Samples are menus described by their choice-probability vectors (ragged
lists or a zero-padded 2-D array); the target is the decision time.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .estimation import FitConfig, entropy_matrix, fit_isotonic, profile_matrix, rank_fit

__all__ = ["LuceHickRegressor", "check_profiles", "check_times"]


def check_profiles(X) -> np.ndarray:
    """Validate choice-probability vectors and return them zero padded."""
    if isinstance(X, np.ndarray):
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D array of probability vectors, got ndim={X.ndim}")
        rows = list(X)
    else:
        rows = list(X)
    if not rows:
        raise ValueError("no samples")
    P = profile_matrix(np.asarray(row, dtype=float).ravel() for row in rows)
    if not np.all(np.isfinite(P)) or np.any(P < 0) or np.any(P > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-9)
    if bad.size:
        raise ValueError(f"probability vector {int(bad[0])} sums to {sums[bad[0]]!r}")
    return P


def check_times(y, n: int) -> np.ndarray:
    t = np.asarray(y, dtype=float).ravel()
    if t.shape[0] != n:
        raise ValueError(f"got {t.shape[0]} times for {n} samples")
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise ValueError("decision times must be finite and non-negative")
    return t


class LuceHickRegressor(TransformerMixin, RegressorMixin, BaseEstimator):
    """Decision time as an increasing function of the order-``r`` entropy.

    ``fit`` estimates ``r`` by minimizing rank violations and the
    entropy -> seconds map by isotonic regression.  ``transform`` returns
    the fitted entropies, ``predict`` the times.
    """

    def __init__(self, r_min=0.05, r_max=5.0, grid_steps=200, tie_eps=1e-9):
        self.r_min = r_min
        self.r_max = r_max
        self.grid_steps = grid_steps
        self.tie_eps = tie_eps

    def fit(self, X, y):
        P = check_profiles(X)
        t = check_times(y, P.shape[0])
        cfg = FitConfig(r_min=self.r_min, r_max=self.r_max,
                        grid_steps=self.grid_steps, tie_eps=self.tie_eps)
        result = rank_fit(P, t, cfg)
        iso = fit_isotonic(entropy_matrix(P, result.r_hat), t)
        self.r_ = result.r_hat
        self.violation_count_ = result.violation_count
        self.minimizer_set_ = result.minimizer_set
        self.time_of_entropy_ = iso.map
        self.residual_max_ = iso.residual_max
        self.n_features_in_ = P.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "r_")
        return entropy_matrix(check_profiles(X), self.r_).reshape(-1, 1)

    def predict(self, X):
        h = self.transform(X).ravel()
        return np.asarray(self.time_of_entropy_(h), dtype=float).reshape(-1)
