"""Empirical whitened CCA for pairs and collections of views."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_rank, check_views
from .exceptions import DimensionError, InsufficientSamplesError
from .linalg import SubspaceBasis, svd_ordered, sym_inv_sqrt

WHITEN_FLOOR = 1e-10


@dataclass(frozen=True)
class ViewDataset:
    """``n`` samples (rows) of one view's ``d``-dimensional representation."""

    Z: np.ndarray
    view_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "Z", check_matrix(self.Z, f"view {self.view_index}"))
        object.__setattr__(self, "view_index", int(self.view_index))

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def d(self):
        return self.Z.shape[1]


def _as_array(Z):
    return Z.Z if isinstance(Z, ViewDataset) else check_matrix(Z)


@dataclass(frozen=True)
class Moments:
    mean_i: np.ndarray
    cov_ii: np.ndarray
    mean_j: np.ndarray = None
    cov_jj: np.ndarray = None
    cov_ij: np.ndarray = None


def empirical_moments(Zi, Zj=None):
    """Sample means and covariances with the 1/n normalization.

    ``cov_ij = (1/n) sum_t (z_i - zbar_i)(z_j - zbar_j)^T``; not ``1/(n-1)``.
    """
    Zi = _as_array(Zi)
    n = Zi.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"need n >= 2 samples, got {n}")
    mi = Zi.mean(axis=0)
    Ci = Zi - mi
    cov_ii = Ci.T @ Ci / n
    cov_ii = 0.5 * (cov_ii + cov_ii.T)
    if Zj is None:
        return Moments(mi, cov_ii)
    Zj = _as_array(Zj)
    if Zj.shape[0] != n:
        raise DimensionError(f"sample counts differ: {n} vs {Zj.shape[0]}")
    mj = Zj.mean(axis=0)
    Cj = Zj - mj
    cov_jj = Cj.T @ Cj / n
    return Moments(mi, cov_ii, mj, 0.5 * (cov_jj + cov_jj.T), Ci.T @ Cj / n)


@dataclass(frozen=True)
class PairwiseCCAResult:
    """Empirical normalized cross-covariance of a view pair and its full SVD."""

    R_hat: np.ndarray
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    whitener_i: np.ndarray
    whitener_j: np.ndarray
    mean_i: np.ndarray
    mean_j: np.ndarray

    def subspaces(self, r):
        return pairwise_subspaces(self, r)


def _check_whitenable(Z, name):
    n, d = Z.shape
    if n < d + 1:
        raise InsufficientSamplesError(
            f"{name}: n={n} < d+1={d + 1}; the sample covariance is singular")


def empirical_normalized_crosscov(Zi, Zj):
    """``R_hat = cov_ii^{-1/2} cov_ij cov_jj^{-1/2}`` with sign-fixed full SVD.

    Raises
    ------
    NearSingularError
        If either covariance has an eigenvalue at or below 1e-10.
    """
    Zi, Zj = _as_array(Zi), _as_array(Zj)
    _check_whitenable(Zi, "view i")
    _check_whitenable(Zj, "view j")
    m = empirical_moments(Zi, Zj)
    Wi = sym_inv_sqrt(m.cov_ii, floor=WHITEN_FLOOR)
    Wj = sym_inv_sqrt(m.cov_jj, floor=WHITEN_FLOOR)
    R = Wi @ m.cov_ij @ Wj
    U, s, V = svd_ordered(R)
    return PairwiseCCAResult(R, U, s, V, Wi, Wj, m.mean_i, m.mean_j)


def pairwise_subspaces(result, r):
    """Leading rank-``r`` left/right singular subspaces and the gap estimate.

    Returns ``(left, right, gap)`` where ``gap = s_r - s_{r+1}`` and
    ``s_{d+1} := 0``.
    """
    s = result.singular_values
    r = check_rank(r, s.size)
    gap = float(s[r - 1] - (s[r] if r < s.size else 0.0))
    return (SubspaceBasis(result.left[:, :r]),
            SubspaceBasis(result.right[:, :r]), gap)


def gcca_objective(datasets):
    """Sum over view pairs of the nuclear norm of ``R_hat_ij``."""
    Xs = check_views([_as_array(Z) for Z in datasets])
    J = 0.0
    for i in range(len(Xs)):
        for j in range(i + 1, len(Xs)):
            J += float(np.sum(empirical_normalized_crosscov(Xs[i], Xs[j]).singular_values))
    return J


class PairwiseCCA(BaseEstimator, TransformerMixin):
    """Whitened two-view CCA.

    Parameters
    ----------
    n_components : int or None
        Rank of the correlated subspaces kept by ``transform``. ``None``
        keeps ``min(d_x, d_y)`` directions.

    Attributes
    ----------
    result_ : PairwiseCCAResult
    canonical_correlations_ : ndarray
    x_basis_, y_basis_ : SubspaceBasis
        Leading left/right singular subspaces of the whitened cross-covariance.
    gap_ : float
    """

    def __init__(self, n_components=None):
        self.n_components = n_components

    def fit(self, X, Y):
        X, Y = check_views([X, Y])
        self.result_ = empirical_normalized_crosscov(X, Y)
        self.canonical_correlations_ = self.result_.singular_values
        r = self.n_components or self.canonical_correlations_.size
        self.x_basis_, self.y_basis_, self.gap_ = pairwise_subspaces(self.result_, r)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X, Y=None):
        """Canonical variates ``B^T W (x - mean)`` for X (and Y if given)."""
        check_is_fitted(self, "result_")
        res = self.result_
        X = check_matrix(X, "X")
        if X.shape[1] != res.mean_i.size:
            raise DimensionError(f"X has {X.shape[1]} features, fitted on {res.mean_i.size}")
        Zx = (X - res.mean_i) @ res.whitener_i @ self.x_basis_.matrix
        if Y is None:
            return Zx
        Y = check_matrix(Y, "Y")
        if Y.shape[1] != res.mean_j.size:
            raise DimensionError(f"Y has {Y.shape[1]} features, fitted on {res.mean_j.size}")
        return Zx, (Y - res.mean_j) @ res.whitener_j @ self.y_basis_.matrix

    def fit_transform(self, X, Y):
        return self.fit(X, Y).transform(X, Y)

    def score(self, X, Y):
        """Nuclear norm of the whitened cross-covariance of ``(X, Y)``."""
        return float(np.sum(empirical_normalized_crosscov(X, Y).singular_values))
