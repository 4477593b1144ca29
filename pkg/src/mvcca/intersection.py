"""Averaged-projector intersection filter for the jointly correlated subspace.

For view ``i`` the pairwise correlated subspaces ``U_{i|j}`` (j != i) are
averaged as projectors, ``S_i = mean_j P_{i|j}``. A unit vector lies in
every ``U_{i|j}`` iff its Rayleigh quotient under ``S_i`` equals 1, so the
eigenvalue-1 eigenspace of ``S_i`` is exactly the intersection.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_rank, check_views
from .cca import empirical_normalized_crosscov, pairwise_subspaces
from .exceptions import DimensionError, ParameterDomainError
from .linalg import SubspaceBasis, as_basis, eigh_descending, projector
from .spectra import population_normalized_crosscov

LOW_CONFIDENCE_GAP = 0.05
DEFAULT_THRESHOLD = 0.9
EXACT_TOL = 1e-8


def averaged_projector(bases):
    """Mean of the orthogonal projectors onto each basis."""
    bases = [as_basis(B) for B in bases]
    if not bases:
        raise DimensionError("need at least one basis")
    d = bases[0].ambient_dim
    if any(B.ambient_dim != d for B in bases):
        raise DimensionError("bases must share the ambient dimension")
    S = sum(projector(B) for B in bases) / len(bases)
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class IntersectionResult:
    S: np.ndarray
    eigenvalues: np.ndarray
    basis: SubspaceBasis
    gap: float
    rank: int
    low_confidence: bool = field(default=False)


def top_eigenspace(S, r):
    """Top-``r`` eigenspace of ``S`` with gap ``1 - lambda_{r+1}`` (``lambda_{d+1} := 0``)."""
    evals, evecs = eigh_descending(S)
    r = check_rank(r, evals.size)
    nxt = evals[r] if r < evals.size else 0.0
    gap = float(1.0 - nxt)
    return IntersectionResult(np.asarray(S), evals, SubspaceBasis(evecs[:, :r]), gap, r,
                              low_confidence=gap < LOW_CONFIDENCE_GAP)


def select_rank(S, threshold=DEFAULT_THRESHOLD):
    """Number of eigenvalues of ``S`` at or above ``threshold``.

    ``S`` may be the averaged projector or its eigenvalues directly.
    """
    if not 0.5 < threshold < 1:
        raise ParameterDomainError(f"threshold must lie in (0.5, 1), got {threshold}")
    S = np.asarray(S, dtype=np.float64)
    evals = S if S.ndim == 1 else eigh_descending(S)[0]
    return int(np.sum(evals >= threshold))


def _pair_rank(ranks, i, j):
    if np.isscalar(ranks):
        return int(ranks)
    if isinstance(ranks, dict):
        key = (min(i, j), max(i, j))
        return int(ranks[key])
    return int(np.asarray(ranks)[i, j])


@dataclass(frozen=True)
class MultiviewRecovery:
    """Per-view intersection results plus the pairwise estimates behind them.

    ``left_bases[(i, j)]`` is the estimated ``U_{i|j}`` for every ordered
    pair ``i != j``; ``pairwise[(i, j)]`` (``i < j``) the CCA result.
    """

    views: list
    pairwise: dict
    left_bases: dict
    gaps: dict


def multiview_recover(datasets, pairwise_ranks, view_ranks=None,
                      threshold=DEFAULT_THRESHOLD):
    """Estimate the jointly correlated subspace of every view.

    Parameters
    ----------
    datasets : list of (n, d_i) arrays or ViewDataset
    pairwise_ranks : int, dict {(i, j): r} with i < j, or (N, N) array
    view_ranks : int, sequence of int, or None
        ``None`` selects each rank with :func:`select_rank` at ``threshold``.
    """
    Xs = check_views([getattr(Z, "Z", Z) for Z in datasets])
    N = len(Xs)
    pairwise, left_bases, gaps = {}, {}, {}
    for i in range(N):
        for j in range(i + 1, N):
            res = empirical_normalized_crosscov(Xs[i], Xs[j])
            left, right, gap = pairwise_subspaces(res, _pair_rank(pairwise_ranks, i, j))
            pairwise[(i, j)] = res
            left_bases[(i, j)], left_bases[(j, i)] = left, right
            gaps[(i, j)] = gap
    views = []
    for i in range(N):
        S = averaged_projector([left_bases[(i, j)] for j in range(N) if j != i])
        if view_ranks is None:
            r = select_rank(S, threshold)
        elif np.isscalar(view_ranks):
            r = int(view_ranks)
        else:
            r = int(view_ranks[i])
        views.append(top_eigenspace(S, r) if r else _empty_result(S))
    return MultiviewRecovery(views, pairwise, left_bases, gaps)


def _empty_result(S):
    evals, _ = eigh_descending(S)
    gap = float(1.0 - evals[0])
    return IntersectionResult(S, evals, SubspaceBasis(np.zeros((S.shape[0], 0))), gap, 0,
                              low_confidence=gap < LOW_CONFIDENCE_GAP)


@dataclass(frozen=True)
class PopulationTruth:
    """Ground-truth subspaces of a mixing ensemble.

    ``pairwise[(i, j)]`` is the population CCA of ``i < j``;
    ``left_bases[(i, j)]`` the correlated subspace ``U_{i|j}`` for ordered
    pairs; ``views[i]`` the exact intersection (eigenvalue-1 eigenspace).
    """

    pairwise: dict
    left_bases: dict
    views: list

    def pair_ranks(self):
        return {k: v.rank for k, v in self.pairwise.items()}

    def view_ranks(self):
        return [v.rank for v in self.views]


def population_truth(ensemble):
    N = ensemble.n_views
    pairwise, left_bases = {}, {}
    for i in range(N):
        for j in range(i + 1, N):
            pop = population_normalized_crosscov(ensemble, i, j)
            pairwise[(i, j)] = pop
            left_bases[(i, j)] = SubspaceBasis(pop.left_basis)
            left_bases[(j, i)] = SubspaceBasis(pop.right_basis)
    views = []
    for i in range(N):
        S = averaged_projector([left_bases[(i, j)] for j in range(N) if j != i])
        evals, _ = eigh_descending(S)
        r = int(np.sum(evals >= 1.0 - EXACT_TOL))
        views.append(top_eigenspace(S, r) if r else _empty_result(S))
    return PopulationTruth(pairwise, left_bases, views)


class IntersectionFilter(BaseEstimator, TransformerMixin):
    """Multi-view CCA subspace recovery by the averaged-projector filter.

    Parameters
    ----------
    pairwise_ranks : int, dict or array
        Rank ``r_ij`` of each pairwise correlated subspace.
    view_ranks : int, list of int or None
        Rank ``r_i`` of each jointly correlated subspace; ``None`` selects
        it from the eigenvalues of the averaged projector.
    threshold : float
        Eigenvalue threshold for automatic rank selection, in (0.5, 1).

    Attributes
    ----------
    recovery_ : MultiviewRecovery
    bases_ : list of SubspaceBasis
    gaps_ : ndarray
        Estimated eigengaps ``1 - lambda_{r_i + 1}``.
    """

    def __init__(self, pairwise_ranks=1, view_ranks=None, threshold=DEFAULT_THRESHOLD):
        self.pairwise_ranks = pairwise_ranks
        self.view_ranks = view_ranks
        self.threshold = threshold

    def fit(self, Xs, y=None):
        self.recovery_ = multiview_recover(Xs, self.pairwise_ranks, self.view_ranks,
                                           self.threshold)
        self.bases_ = [v.basis for v in self.recovery_.views]
        self.gaps_ = np.array([v.gap for v in self.recovery_.views])
        self.n_views_ = len(self.bases_)
        # whitening from the first pair that contains each view
        self.means_, self.whiteners_ = [], []
        for i in range(self.n_views_):
            j = 1 if i == 0 else 0
            res = self.recovery_.pairwise[(min(i, j), max(i, j))]
            self.means_.append(res.mean_i if i < j else res.mean_j)
            self.whiteners_.append(res.whitener_i if i < j else res.whitener_j)
        return self

    def transform(self, Xs):
        """Whitened coordinates of each view in its jointly correlated subspace."""
        check_is_fitted(self, "bases_")
        if len(Xs) != self.n_views_:
            raise DimensionError(f"expected {self.n_views_} views, got {len(Xs)}")
        out = []
        for X, mu, W, B in zip(Xs, self.means_, self.whiteners_, self.bases_):
            X = check_matrix(getattr(X, "Z", X))
            out.append((X - mu) @ W @ B.matrix)
        return out
