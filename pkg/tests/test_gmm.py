import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cliques
from oracles import gaussian_mixture_loglik
from sbmclust.evaluate import ari
from sbmclust.exceptions import ParameterError, SelectionError
from sbmclust.gmm import (FAMILIES, GmmModel, best_fit, bic, bic_sweep, cluster_vertices,
                          covariance_parameters, fit_gmm, n_parameters, select_model)
from sbmclust.sbm import SbmParams, sample_sbm


def blobs(centres, per, scale, seed):
    rng = np.random.default_rng(seed)
    centres = np.asarray(centres, dtype=float)
    X = np.concatenate([c + scale * rng.standard_normal((per, centres.shape[1]))
                        for c in centres])
    return X, np.repeat(np.arange(len(centres)), per)


class TestParameterCounts:
    @pytest.mark.parametrize("family,expected", [
        ("spherical-equal", 1), ("spherical-varying", 3), ("diagonal-equal", 2),
        ("diagonal-varying", 6), ("full-equal", 3), ("full-varying", 9)])
    def test_covariance_parameters(self, family, expected):
        assert covariance_parameters(family, 3, 2) == expected

    def test_total(self):
        assert n_parameters("full-varying", 3, 2) == 2 + 6 + 9

    def test_unknown_family(self):
        with pytest.raises(ParameterError):
            covariance_parameters("banana", 1, 1)

    def test_bic_arithmetic(self):
        assert bic(0.0, 2, math.e ** 2) == pytest.approx(-4.0)


class TestFit:
    def test_single_spherical_gaussian_closed_form(self):
        X = np.random.default_rng(0).standard_normal((1000, 2))
        m = fit_gmm(X, 1, "spherical-equal")
        mu = X.mean(axis=0)
        var = ((X - mu) ** 2).mean()
        assert np.allclose(m.means[0], mu)
        assert float(m.covariances) == pytest.approx(var)
        ll = -0.5 * X.size * (np.log(2 * np.pi * var) + 1)
        assert m.loglik == pytest.approx(ll, rel=1e-12)
        assert m.bic == pytest.approx(2 * ll - (0 + 2 + 1) * np.log(1000), rel=1e-12)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_loglik_matches_density_oracle(self, family):
        X, _ = blobs([[0, 0], [4, 1]], 40, 0.7, seed=2)
        m = fit_gmm(X, 2, family, seed=1)
        oracle = gaussian_mixture_loglik(X, m.weights, m.means, m.full_covariances())
        assert m.loglik == pytest.approx(oracle, rel=1e-10)

    def test_separated_pair(self):
        X, _ = blobs([[-10, 0], [10, 0]], 100, 0.05, seed=3)
        m = fit_gmm(X, 2, "full-varying", seed=0)
        order = np.argsort(m.means[:, 0])
        assert np.allclose(m.means[order], [[-10, 0], [10, 0]], atol=0.1)
        assert np.allclose(m.weights, 0.5, atol=0.01)

    def test_more_components_than_points(self):
        with pytest.raises(ParameterError):
            fit_gmm(np.zeros((1, 2)), 2)

    def test_nested_families_order_loglik(self):
        X, _ = blobs([[0, 0], [3, 2]], 60, 1.0, seed=4)
        X[:60] = X[:60] @ np.array([[1.0, 0.6], [0.0, 0.5]])
        ll = {f: fit_gmm(X, 2, f, seed=0, restarts=10).loglik for f in FAMILIES}
        assert ll["full-varying"] >= ll["diagonal-varying"] - 1e-9
        assert ll["diagonal-varying"] >= ll["spherical-varying"] - 1e-9
        assert ll["full-equal"] >= ll["diagonal-equal"] - 1e-9 >= ll["spherical-equal"] - 2e-9

    def test_history_is_monotone(self):
        X, _ = blobs([[0, 0], [2, 0], [0, 2]], 50, 0.8, seed=5)
        for fam in FAMILIES:
            m = fit_gmm(X, 3, fam, seed=2)
            assert np.all(np.diff(m.history) >= -1e-9)

    def test_identical_points_only_fit_one_component(self):
        X = np.ones((10, 2))
        assert fit_gmm(X, 2).failed
        assert not fit_gmm(X, 1).failed

    def test_deterministic(self):
        X, _ = blobs([[0, 0], [3, 3]], 30, 1.0, seed=6)
        a, b = fit_gmm(X, 2, seed=9), fit_gmm(X, 2, seed=9)
        assert a.loglik == b.loglik and np.array_equal(a.means, b.means)

    @given(st.integers(0, 10 ** 6), st.sampled_from(FAMILIES), st.integers(1, 3))
    def test_responsibilities_are_distributions(self, seed, family, k):
        X = np.random.default_rng(seed).standard_normal((30, 2))
        m = fit_gmm(X, k, family, seed=seed, restarts=2)
        if not m.failed:
            assert np.allclose(m.responsibilities.sum(axis=1), 1.0)
            assert np.isclose(m.weights.sum(), 1.0)
            assert np.all(np.linalg.eigvalsh(m.full_covariances()) > 0)


class TestSelection:
    def test_single_blob_selects_one(self):
        X = np.random.default_rng(7).standard_normal((300, 2))
        model, part = select_model(X, 5, seed=0)
        assert model.k == 1 and part.k == 1

    def test_three_separated_blobs(self):
        X, y = blobs([[0, 0], [10, 0], [0, 10]], 80, 0.5, seed=8)
        model, part = select_model(X, 6, seed=0)
        assert model.k == 3 and ari(y, part) == 1.0

    def test_kmax_one(self):
        X, _ = blobs([[0, 0], [10, 0]], 40, 0.5, seed=9)
        assert select_model(X, 1)[0].k == 1

    def test_sweep_order_and_size(self):
        fits = bic_sweep(np.random.default_rng(1).standard_normal((50, 2)), 3)
        assert [(m.k, m.family) for m in fits] == [(k, f) for k in (1, 2, 3) for f in FAMILIES]

    def test_ties_prefer_smaller_k_then_simpler_family(self):
        def stub(k, fam):
            return GmmModel(k, fam, np.ones(k) / k, np.zeros((k, 1)), np.ones(k), 0.0, -5.0,
                            True, np.ones((4, k)) / k)
        fits = [stub(2, "full-varying"), stub(2, "spherical-equal"), stub(3, "spherical-equal")]
        chosen = best_fit(fits)
        assert (chosen.k, chosen.family) == (2, "spherical-equal")

    def test_no_converged_fit(self):
        failed = GmmModel(1, "full-varying", np.ones(1), np.zeros((1, 1)), np.ones((1, 1, 1)),
                          -np.inf, -np.inf, False, None)
        with pytest.raises(SelectionError):
            best_fit([failed])


class TestClusterVertices:
    def test_two_block_sbm(self):
        params = SbmParams(2, [0.5, 0.5], [[0.5, 0.1], [0.1, 0.5]])
        for seed in range(20):
            g, y = sample_sbm(400, params, seed=seed)
            res = cluster_vertices(g, dim=2, k_max=4, seed=seed)
            assert res.partition.k == 2
            assert ari(y, res.partition) > 0.9

    def test_complete_graph_is_one_cluster(self):
        res = cluster_vertices(cliques(12), dim=1, k_max=3)
        assert res.partition.k == 1

    def test_two_cliques_auto_dimension(self, two_k5):
        res = cluster_vertices(two_k5, k_max=4)
        assert res.partition.k == 2
        assert ari([0] * 5 + [1] * 5, res.partition) == 1.0
        assert res.scree is not None and res.dim >= 1

    def test_same_seed_same_partition(self):
        g, _ = sample_sbm(150, SbmParams.planted(3, 0.4, 0.05), seed=2)
        a = cluster_vertices(g, "laplacian", dim=3, k_max=4, seed=5)
        b = cluster_vertices(g, "laplacian", dim=3, k_max=4, seed=5)
        assert a.partition == b.partition


def test_point_order_only_permutes_labels():
    X, y = blobs([[0, 0], [5, 0], [0, 5]], 30, 1.0, seed=10)
    perm = np.random.default_rng(0).permutation(X.shape[0])
    a = fit_gmm(X, 3, "full-varying", init_labels=y)
    b = fit_gmm(X[perm], 3, "full-varying", init_labels=y[perm])
    assert np.array_equal(a.labels()[perm], b.labels())
    assert a.loglik == pytest.approx(b.loglik, rel=1e-12)
