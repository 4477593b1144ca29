import numpy as np
import pytest

from mvcca.exceptions import DimensionError, InfeasibleSpectrumError
from mvcca.priors import SeededStream
from mvcca.spectra import (MixingEnsemble, TargetSpectra, build_mixing, ensemble_from_targets,
                           gains_to_singular_values, planted_overlap_ensemble,
                           population_normalized_crosscov, solve_per_view_gains, view_pairs)


def _brute_force_R(ens, i, j):
    """Independent route: whiteners via scipy.linalg.fractional_matrix_power."""
    from scipy.linalg import fractional_matrix_power
    Ai, Aj = ens.mixings[i], ens.mixings[j]
    Wi = fractional_matrix_power(Ai @ Ai.T + np.eye(Ai.shape[0]), -0.5).real
    Wj = fractional_matrix_power(Aj @ Aj.T + np.eye(Aj.shape[0]), -0.5).real
    return Wi @ Ai @ Aj.T @ Wj


def test_gains_equal_targets():
    g = solve_per_view_gains(TargetSpectra.uniform(0.8, 2))
    np.testing.assert_allclose(g, np.sqrt(0.8))
    assert g[0, 0] == pytest.approx(0.894427, abs=1e-6)


def test_gain_product_reproduces_targets():
    t = TargetSpectra((0.9, 0.6), (0.8, 0.5), (0.85, 0.45))
    g = solve_per_view_gains(t)
    np.testing.assert_allclose(g[0] * g[1], t.t12, rtol=1e-14)
    np.testing.assert_allclose(g[0] * g[2], t.t13, rtol=1e-14)
    np.testing.assert_allclose(g[1] * g[2], t.t23, rtol=1e-14)
    assert np.all((g > 0) & (g < 1))


def test_boundary_gain_is_infeasible():
    with pytest.raises(InfeasibleSpectrumError) as err:
        solve_per_view_gains(TargetSpectra((0.9,), (0.9,), (0.81,)))
    assert err.value.mode == 0
    assert err.value.view == 0


def test_infeasible_error_names_mode():
    with pytest.raises(InfeasibleSpectrumError) as err:
        solve_per_view_gains(TargetSpectra((0.9, 0.8), (0.9, 0.8), (0.85, 0.3)))
    assert err.value.mode == 1


@pytest.mark.parametrize("bad", [(0.0,), (1.0,), (-0.2,)])
def test_target_entries_must_be_in_open_interval(bad):
    with pytest.raises(InfeasibleSpectrumError):
        TargetSpectra(bad, (0.5,), (0.5,))


def test_targets_must_be_nonincreasing_and_equal_length():
    with pytest.raises(DimensionError):
        TargetSpectra((0.5, 0.6), (0.5, 0.4), (0.5, 0.4))
    with pytest.raises(DimensionError):
        TargetSpectra((0.5,), (0.5, 0.4), (0.5, 0.4))


def test_sigma_from_gain():
    assert gains_to_singular_values(np.sqrt(0.8)) == pytest.approx(2.0, abs=1e-14)


def test_vanishing_gain_limit():
    g = np.full((3, 1), 1e-8)
    ens = build_mixing(g, (2, 2, 2), SeededStream(0))
    np.testing.assert_allclose(ens.singular_values, 1e-8, rtol=1e-12)
    pop = population_normalized_crosscov(ens, 0, 1)
    assert pop.singular_values[0] == pytest.approx(1e-16, rel=1e-6)
    assert pop.rank == 0


def test_dimension_error_when_view_too_small():
    with pytest.raises(DimensionError):
        build_mixing(np.full((3, 3), 0.5), (3, 2, 3), SeededStream(0))


def test_ensemble_invariants():
    t = TargetSpectra((0.9, 0.5), (0.9, 0.5), (0.9, 0.5), (4, 5, 6))
    ens = ensemble_from_targets(t, SeededStream(12))
    P = ens.shared_factor
    np.testing.assert_allclose(P.T @ P, np.eye(P.shape[0]), atol=1e-12)
    for A, U, sig, W in zip(ens.mixings, ens.rotations, ens.singular_values, ens.whiteners):
        np.testing.assert_allclose(U.T @ U, np.eye(U.shape[0]), atol=1e-12)
        recon = (U[:, :2] * sig) @ P[:, :2].T
        assert np.linalg.norm(A - recon) < 1e-12
        np.testing.assert_allclose(W @ (A @ A.T + np.eye(A.shape[0])) @ W.T,
                                   np.eye(A.shape[0]), atol=1e-10)


def test_equal_targets_full_rank_spectrum():
    ens = ensemble_from_targets(TargetSpectra.uniform(0.8, 5, (5, 5, 5)), SeededStream(1))
    pop = population_normalized_crosscov(ens, 0, 1)
    np.testing.assert_allclose(pop.singular_values, 0.8, atol=1e-10)
    assert pop.rank == 5


def test_mixed_spectrum_matches_brute_force():
    t = TargetSpectra((0.9, 0.5), (0.9, 0.5), (0.9, 0.5), (5, 5, 5))
    ens = ensemble_from_targets(t, SeededStream(2))
    for i, j in view_pairs(3):
        pop = population_normalized_crosscov(ens, i, j)
        ref = np.linalg.svd(_brute_force_R(ens, i, j), compute_uv=False)
        np.testing.assert_allclose(pop.singular_values, ref, atol=1e-10)
        np.testing.assert_allclose(pop.singular_values[:2], [0.9, 0.5], atol=1e-10)
        assert pop.rank == 2
        assert pop.gap == pytest.approx(0.5, abs=1e-10)


def test_zero_mixing_population():
    ens = MixingEnsemble((np.zeros((3, 2)), np.zeros((4, 2))))
    pop = population_normalized_crosscov(ens, 0, 1)
    np.testing.assert_array_equal(pop.R, 0.0)
    assert pop.rank == 0


def test_symmetry_and_strict_contraction():
    rng = np.random.default_rng(4)
    for trial in range(20):
        g = np.sort(rng.uniform(0.05, 0.95, size=(3, 3)), axis=1)[:, ::-1]
        ens = build_mixing(g, (3, 5, 4), SeededStream(trial))
        for i, j in view_pairs(3):
            Rij = population_normalized_crosscov(ens, i, j)
            Rji = population_normalized_crosscov(ens, j, i)
            np.testing.assert_allclose(Rji.R, Rij.R.T, atol=1e-14)
            assert Rij.singular_values[0] < 1


def test_targets_json_round_trip():
    t = TargetSpectra((0.9, 0.5), (0.8, 0.4), (0.85, 0.45), (3, 4, 5))
    d = t.to_dict()
    assert d == {"r": 2, "t12": [0.9, 0.5], "t13": [0.8, 0.4], "t23": [0.85, 0.45],
                 "dS": [3, 4, 5]}
    assert TargetSpectra.from_dict(d) == t
    with pytest.raises(DimensionError):
        TargetSpectra.from_dict({**d, "r": 3})


def test_planted_overlap_population_subspaces():
    ens = planted_overlap_ensemble(d=5)
    p12 = population_normalized_crosscov(ens, 0, 1)
    p13 = population_normalized_crosscov(ens, 0, 2)
    assert p12.rank == 2 and p13.rank == 2
    e = np.eye(5)
    # left subspace of (1,2) is span{e1, e2}; of (1,3) span{e1, e3}
    np.testing.assert_allclose(np.abs(p12.left_basis.T @ e[:, 3:]), 0, atol=1e-12)
    np.testing.assert_allclose(np.abs(p12.left_basis.T @ e[:, [2]]), 0, atol=1e-12)
    np.testing.assert_allclose(np.abs(p13.left_basis.T @ e[:, [1]]), 0, atol=1e-12)
    # strength 2 gives canonical correlation g^2 = 4/5
    np.testing.assert_allclose(p12.singular_values[:2], 0.8, atol=1e-12)
