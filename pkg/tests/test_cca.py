import numpy as np
import pytest
from sklearn.base import clone

from mvcca.cca import (PairwiseCCA, ViewDataset, empirical_moments, empirical_normalized_crosscov,
                       gcca_objective, pairwise_subspaces)
from mvcca.exceptions import DimensionError, InsufficientSamplesError, NearSingularError
from mvcca.linalg import random_orthogonal, sin_theta_norm, svd_ordered
from mvcca.priors import PriorSpec, SeededStream, sample_sources
from mvcca.spectra import (MixingEnsemble, TargetSpectra, ensemble_from_targets,
                           population_normalized_crosscov)


def _reference_R(X, Y):
    """Independent route: sklearn-free textbook CCA via Cholesky whitening.

    Singular values are invariant to the choice of whitening square root.
    """
    Xc, Yc = X - X.mean(0), Y - Y.mean(0)
    n = X.shape[0]
    Lx = np.linalg.cholesky(Xc.T @ Xc / n)
    Ly = np.linalg.cholesky(Yc.T @ Yc / n)
    return np.linalg.solve(Lx, Xc.T @ Yc / n) @ np.linalg.inv(Ly).T


def test_moments_example():
    m = empirical_moments(np.array([[0.0, 0.0], [2.0, 2.0]]))
    np.testing.assert_array_equal(m.mean_i, [1.0, 1.0])
    np.testing.assert_array_equal(m.cov_ii, [[1.0, 1.0], [1.0, 1.0]])


def test_moments_use_biased_normalization():
    rng = np.random.default_rng(0)
    X, Y = rng.standard_normal((50, 3)), rng.standard_normal((50, 2))
    m = empirical_moments(X, Y)
    full = np.cov(np.hstack([X, Y]).T, bias=True)
    np.testing.assert_allclose(m.cov_ii, full[:3, :3], atol=1e-14)
    np.testing.assert_allclose(m.cov_jj, full[3:, 3:], atol=1e-14)
    np.testing.assert_allclose(m.cov_ij, full[:3, 3:], atol=1e-14)


def test_moments_need_two_samples():
    with pytest.raises(InsufficientSamplesError):
        empirical_moments(np.zeros((1, 2)))
    with pytest.raises(DimensionError):
        empirical_moments(np.zeros((4, 2)), np.zeros((5, 2)))


def test_identical_views_have_unit_correlations():
    X = np.random.default_rng(1).standard_normal((500, 4))
    np.testing.assert_allclose(empirical_normalized_crosscov(X, X).singular_values, 1.0,
                               atol=1e-10)


def test_independent_views_have_small_correlations():
    rng = np.random.default_rng(2)
    X, Y = rng.standard_normal((10 ** 5, 3)), rng.standard_normal((10 ** 5, 3))
    assert empirical_normalized_crosscov(X, Y).singular_values[0] < 0.1


def test_singular_values_match_cholesky_route():
    rng = np.random.default_rng(3)
    Z = rng.standard_normal((400, 2))
    X = np.hstack([Z, rng.standard_normal((400, 2))]) @ rng.standard_normal((4, 4))
    Y = np.hstack([Z + rng.standard_normal((400, 2)), rng.standard_normal((400, 1))])
    ours = empirical_normalized_crosscov(X, Y).singular_values
    ref = np.linalg.svd(_reference_R(X, Y), compute_uv=False)
    np.testing.assert_allclose(ours, ref, atol=1e-12)


def test_gap_examples():
    class Stub:
        singular_values = np.array([0.9, 0.4, 0.1])
        left = right = np.eye(3)
    assert pairwise_subspaces(Stub, 1)[2] == pytest.approx(0.5)
    # r = d uses s_{d+1} = 0
    assert pairwise_subspaces(Stub, 3)[2] == pytest.approx(0.1)
    with pytest.raises(DimensionError):
        pairwise_subspaces(Stub, 4)


def test_wedin_bound_on_perturbed_matrix():
    # oracle: sin-theta between leading singular subspaces of R and R + E is
    # at most 2 ||E|| / gap
    rng = np.random.default_rng(4)
    for _ in range(50):
        Q1, Q2 = random_orthogonal(5, rng), random_orthogonal(5, rng)
        R = Q1 @ np.diag([0.9, 0.8, 0.3, 0.2, 0.1]) @ Q2.T
        E = 0.02 * rng.standard_normal((5, 5))
        U, _, V = svd_ordered(R)
        Uh, _, Vh = svd_ordered(R + E)
        bound = 2 * np.linalg.norm(E, 2) / 0.5
        assert max(sin_theta_norm(U[:, :2], Uh[:, :2]),
                   sin_theta_norm(V[:, :2], Vh[:, :2])) <= bound


def test_nonfull_rank_covariance_rejected():
    X = np.random.default_rng(5).standard_normal((100, 3))
    X[:, 2] = 7.0
    with pytest.raises(NearSingularError):
        empirical_normalized_crosscov(X, X[:, :2])


def test_too_few_samples_for_whitening():
    with pytest.raises(InsufficientSamplesError):
        empirical_normalized_crosscov(np.ones((3, 3)), np.ones((3, 1)))


def test_gcca_objective_values():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((1000, 5))
    assert gcca_objective([X, X, X]) == pytest.approx(15.0, abs=1e-8)
    Xs = [rng.standard_normal((10 ** 5, 2)) for _ in range(2)]
    assert gcca_objective(Xs) < 0.5


def test_gcca_objective_two_view_population():
    # population correlations (0.9, 0.5): nuclear norm 1.4
    g = np.sqrt([0.9, 0.5])
    sig = g / np.sqrt(1 - g ** 2)
    ens = MixingEnsemble((np.diag(sig), np.diag(sig)))
    assert np.sum(population_normalized_crosscov(ens, 0, 1).singular_values) == pytest.approx(1.4)
    Xs = sample_sources(ens, PriorSpec(), 10 ** 5, SeededStream(6))
    assert gcca_objective(Xs) == pytest.approx(1.4, abs=0.02)


def test_invariance_to_orthogonal_and_affine_maps():
    rng = np.random.default_rng(7)
    ens = ensemble_from_targets(TargetSpectra.uniform(0.7, 2, (4, 4, 4)), SeededStream(7))
    X, Y, _ = sample_sources(ens, PriorSpec(), 2000, SeededStream(7, 1))
    base = empirical_normalized_crosscov(X, Y).singular_values
    Q = random_orthogonal(4, rng)
    np.testing.assert_allclose(empirical_normalized_crosscov(X @ Q, Y).singular_values, base,
                               atol=1e-12)
    M = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    np.testing.assert_allclose(
        empirical_normalized_crosscov(X @ M.T + 5.0, Y - 2.0).singular_values, base, atol=1e-10)


def test_empirical_r_concentrates_at_root_n():
    ens = ensemble_from_targets(TargetSpectra.uniform(0.8, 2, (3, 3, 3)), SeededStream(8))
    R = population_normalized_crosscov(ens, 0, 1).R
    errs = []
    for n in (1000, 100000):
        e = []
        for k in range(10):
            X, Y, _ = sample_sources(ens, PriorSpec(), n, SeededStream(8).child(n, k))
            e.append(np.linalg.norm(empirical_normalized_crosscov(X, Y).R_hat - R, 2))
        errs.append(np.mean(e))
    # a factor-100 increase in n shrinks the error about 10x
    assert 5 < errs[0] / errs[1] < 20


def test_view_dataset_wraps_arrays():
    ds = ViewDataset(np.arange(6.0).reshape(3, 2), 1)
    assert (ds.n, ds.d, ds.view_index) == (3, 2, 1)
    m = empirical_moments(ds)
    np.testing.assert_allclose(m.mean_i, [2.0, 3.0])


def test_estimator_api():
    ens = ensemble_from_targets(TargetSpectra.uniform(0.8, 2, (4, 4, 4)), SeededStream(9))
    X, Y, _ = sample_sources(ens, PriorSpec(), 5000, SeededStream(9, 1))
    est = PairwiseCCA(n_components=2)
    assert est.get_params() == {"n_components": 2}
    assert clone(est).get_params() == {"n_components": 2}
    Zx, Zy = est.fit_transform(X, Y)
    assert Zx.shape == (5000, 2) and Zy.shape == (5000, 2)
    np.testing.assert_allclose(est.canonical_correlations_[:2], 0.8, atol=0.03)
    # canonical variates are white and correlated at the canonical correlations
    np.testing.assert_allclose(Zx.T @ Zx / 5000, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(np.diag(Zx.T @ Zy / 5000), est.canonical_correlations_[:2],
                               atol=1e-10)
    assert est.score(X, Y) == pytest.approx(np.sum(est.canonical_correlations_))
    assert est.gap_ == pytest.approx(est.canonical_correlations_[1]
                                     - est.canonical_correlations_[2])
    with pytest.raises(DimensionError):
        est.transform(X[:, :3])


def test_estimator_requires_fit():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        PairwiseCCA().transform(np.zeros((3, 2)))
