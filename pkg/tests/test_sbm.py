import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sbmclust.exceptions import LatentModelError, ParameterError
from sbmclust.graph import Graph
from sbmclust.sbm import (LatentPositionModel, SbmParams, block_edge_counts,
                          edge_probabilities, estimate_block_matrix,
                          sample_latent_position_graph, sample_sbm)


class TestParams:
    def test_pi_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            SbmParams(2, [0.5, 0.6], [[0.1, 0.1], [0.1, 0.1]])

    def test_b_must_be_symmetric(self):
        with pytest.raises(ParameterError):
            SbmParams(2, [0.5, 0.5], [[0.1, 0.2], [0.1, 0.1]])

    def test_b_entries_are_probabilities(self):
        with pytest.raises(ParameterError):
            SbmParams(1, [1.0], [[1.5]])

    def test_shape_checked(self):
        with pytest.raises(ParameterError):
            SbmParams(3, [0.5, 0.5], np.eye(2))

    def test_json_round_trip(self, tmp_path):
        p = SbmParams.planted(3, 0.3, 0.1)
        p.save(tmp_path / "p.json")
        q = SbmParams.load(tmp_path / "p.json")
        assert q.K == 3 and np.array_equal(q.B, p.B) and np.array_equal(q.pi, p.pi)


class TestSample:
    def test_all_ones_is_complete(self):
        g, _ = sample_sbm(4, SbmParams(1, [1.0], [[1.0]]), seed=0)
        assert g.n_edges == 6

    def test_all_zeros_is_empty(self):
        g, _ = sample_sbm(10, SbmParams(2, [0.3, 0.7], np.zeros((2, 2))), seed=0)
        assert g.n_edges == 0

    def test_same_seed_same_graph(self):
        p = SbmParams.planted(3, 0.3, 0.1)
        assert sample_sbm(80, p, seed=4)[0] == sample_sbm(80, p, seed=4)[0]

    def test_block_densities_concentrate(self):
        # 3-sigma binomial bounds are far inside +-0.03 at this size
        p = SbmParams(2, [0.5, 0.5], [[0.8, 0.1], [0.1, 0.8]])
        g, y = sample_sbm(2000, p, seed=11)
        e, pairs, _ = block_edge_counts(g, y)
        dens = e / pairs
        assert abs(dens[0, 0] - 0.8) < 0.03 and abs(dens[1, 1] - 0.8) < 0.03
        assert abs(dens[0, 1] - 0.1) < 0.03

    @given(st.integers(1, 25), st.integers(0, 10 ** 6))
    def test_labels_in_range_and_graph_hollow(self, n, seed):
        g, y = sample_sbm(n, SbmParams.planted(3, 0.5, 0.2), seed=seed)
        assert y.shape == (n,) and set(y.tolist()) <= {0, 1, 2}
        assert np.all(g.edges[:, 0] < g.edges[:, 1])


class TestLatentPosition:
    def test_point_mass_with_unit_link_is_complete(self):
        model = LatentPositionModel(1, lambda rng, n: np.zeros((n, 1)),
                                    lambda X, Y: np.ones(X.shape[0]))
        g, X = sample_latent_position_graph(5, model, seed=0)
        assert g.n_edges == 10 and X.shape == (5, 1)

    def test_zero_link_is_empty(self):
        model = LatentPositionModel(2, lambda rng, n: rng.random((n, 2)),
                                    lambda X, Y: np.zeros(X.shape[0]))
        assert sample_latent_position_graph(7, model, seed=0)[0].n_edges == 0

    def test_invalid_link_names_the_pair(self):
        model = LatentPositionModel(1, lambda rng, n: np.ones((n, 1)),
                                    lambda X, Y: np.full(X.shape[0], 1.2))
        with pytest.raises(LatentModelError, match=r"pair \(0, 1\)"):
            sample_latent_position_graph(3, model, seed=0)

    def test_point_mass_mixture_reproduces_sbm_sampler(self):
        params = SbmParams(3, [0.2, 0.5, 0.3],
                           [[0.6, 0.1, 0.2], [0.1, 0.4, 0.05], [0.2, 0.05, 0.7]])
        model = LatentPositionModel.from_sbm(params)
        for seed in range(200):
            g_sbm, y = sample_sbm(30, params, seed=seed)
            g_lpm, X = sample_latent_position_graph(30, model, seed=seed)
            assert g_sbm == g_lpm
            assert np.array_equal(np.argmax(X, axis=1), y)

    def test_edge_probability_matrix(self):
        params = SbmParams(2, [0.5, 0.5], [[0.9, 0.2], [0.2, 0.4]])
        model = LatentPositionModel.from_sbm(params)
        X = np.eye(2)[[0, 1, 1]]
        P = edge_probabilities(model, X)
        assert np.allclose(P, [[0, 0.2, 0.2], [0.2, 0, 0.4], [0.2, 0.4, 0]])


class TestEstimate:
    def test_two_triangles(self):
        g = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        est = estimate_block_matrix(g, [0, 0, 0, 1, 1, 1])
        assert np.array_equal(est.B, np.eye(2)) and np.allclose(est.pi, [0.5, 0.5])

    def test_empty_graph(self):
        est = estimate_block_matrix(Graph(5, []), [0, 1, 0, 1, 2])
        assert not est.B.any()

    def test_consistent_at_scale(self):
        p = SbmParams.planted(3, 0.3, 0.1)
        g, y = sample_sbm(2000, p, seed=5)
        assert np.abs(estimate_block_matrix(g, y).B - p.B).max() < 0.05
