import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ari_by_pairs, rank_sum_p_by_enumeration
from sbmclust.evaluate import (MetricTable, adjust_pvalues, ari, pairwise_cluster_tests,
                               partition_comparison_matrix, rank_sum_counts,
                               read_metric_table, wilcoxon_rank_sum)
from sbmclust.exceptions import ParameterError
from sbmclust.partition import Partition

labelings = st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n),
                        st.lists(st.integers(0, 5), min_size=n, max_size=n)))


class TestAri:
    def test_hand_contingency_table(self):
        assert ari([0, 0, 1, 1], [0, 1, 1, 1]) == 0.0

    @given(labelings)
    def test_matches_pair_count_oracle(self, ab):
        a, b = ab
        assert abs(ari(a, b) - ari_by_pairs(a, b)) <= 1e-12

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=50))
    def test_self_is_one(self, a):
        assert ari(a, a) == 1.0

    @given(labelings, st.permutations(range(6)))
    def test_relabelling_invariant(self, ab, sigma):
        a, b = ab
        assert ari(a, [sigma[x] for x in b]) == pytest.approx(ari(a, b), abs=1e-12)

    @given(labelings)
    def test_symmetric(self, ab):
        a, b = ab
        assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)

    def test_degenerate_denominator(self):
        assert ari([0, 0, 0], [1, 1, 1]) == 1.0
        assert ari([0, 1, 2], [5, 4, 3]) == 1.0
        assert ari([0, 0, 0], [0, 1, 2]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            ari([0, 1], [0, 1, 1])


class TestComparisonMatrix:
    def test_four_partitions_give_six_pairs(self):
        rng = np.random.default_rng(0)
        ps = [rng.integers(0, 3, 30) for _ in range(4)]
        M = partition_comparison_matrix(ps)
        assert M.shape == (4, 4)
        assert np.array_equal(M, M.T) and np.all(np.diag(M) == 1.0)
        assert len(list(combinations(range(4), 2))) == np.triu(np.ones((4, 4)), 1).sum() == 6

    def test_identical_partitions(self):
        assert np.all(partition_comparison_matrix([[0, 1, 1, 2]] * 3) == 1.0)


class TestWilcoxon:
    def test_fully_separated_triples(self):
        r = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert r.method == "exact" and r.p_value == pytest.approx(0.1, abs=1e-15)
        assert r.statistic == 6

    def test_counts_sum_to_binomial(self):
        for nx in range(1, 7):
            for ny in range(1, 7):
                assert sum(rank_sum_counts(nx, ny).values()) == math.comb(nx + ny, nx)

    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 10 ** 6))
    def test_exact_matches_enumeration(self, nx, ny, seed):
        vals = np.random.default_rng(seed).permutation(nx + ny).astype(float)
        x, y = vals[:nx], vals[nx:]
        assert wilcoxon_rank_sum(x, y).p_value == rank_sum_p_by_enumeration(x, y)

    @given(st.lists(st.integers(0, 20), min_size=1, max_size=15),
           st.lists(st.integers(0, 20), min_size=1, max_size=15))
    def test_swap_symmetric(self, x, y):
        assert wilcoxon_rank_sum(x, y).p_value == pytest.approx(
            wilcoxon_rank_sum(y, x).p_value, abs=1e-12)

    def test_identical_large_samples(self):
        x = list(range(20))
        r = wilcoxon_rank_sum(x, x)
        assert r.method == "normal-approx" and r.p_value == pytest.approx(1.0)

    def test_normal_approx_against_hand_formula(self):
        x, y = np.arange(12.0), np.arange(6.0, 18.0)
        r = wilcoxon_rank_sum(x, y)
        w, mean = r.statistic, 12 * 25 / 2
        # ties: six values appear twice
        var = 12 * 12 / 12 * (25 - 6 * (8 - 2) / (24 * 23))
        z = (abs(w - mean) - 0.5) / math.sqrt(var)
        assert r.p_value == pytest.approx(math.erfc(z / math.sqrt(2)), rel=1e-12)

    def test_empty_sample(self):
        with pytest.raises(ParameterError):
            wilcoxon_rank_sum([], [1.0])


class TestPairwise:
    def table(self, values):
        return MetricTable(len(values), {"m": np.asarray(values, dtype=float)})

    def test_constant_metric(self):
        p = Partition([0] * 5 + [1] * 6)
        rep = pairwise_cluster_tests(p, self.table([3.0] * 11), "m")
        assert rep.n_significant == 0

    def test_disjoint_ranges(self):
        p = Partition([0] * 5 + [1] * 6)
        rep = pairwise_cluster_tests(p, self.table(list(range(1, 6)) + list(range(100, 106))), "m")
        (t,) = rep.tests
        assert t.result.p_value <= 2 / math.comb(11, 5) and t.significant

    @pytest.mark.parametrize("k", [1, 2, 3, 5])
    def test_pair_count(self, k):
        labels = np.arange(4 * k) % k
        rep = pairwise_cluster_tests(Partition(labels), self.table(np.arange(4.0 * k)), "m")
        assert len(rep.tests) == k * (k - 1) // 2
        assert [t.pair for t in rep.tests] == sorted(combinations(range(k), 2))

    def test_missing_values_dropped(self):
        vals = [1, 2, np.nan, 10, 11, np.nan]
        rep = pairwise_cluster_tests(Partition([0, 0, 0, 1, 1, 1]), self.table(vals), "m")
        assert (rep.tests[0].result.n_x, rep.tests[0].result.n_y) == (2, 2)

    def test_all_missing_is_untestable(self):
        vals = [1, 2, 3, np.nan, np.nan, np.nan]
        rep = pairwise_cluster_tests(Partition([0, 0, 0, 1, 1, 1]), self.table(vals), "m")
        assert rep.n_testable == 0 and rep.n_significant == 0

    def test_log_transform_keeps_rank_test_result(self):
        p = Partition([0] * 4 + [1] * 4)
        vals = [1, 5, 2, 8, 30, 40, 10, 60]
        a = pairwise_cluster_tests(p, self.table(vals), "m")
        b = pairwise_cluster_tests(p, self.table(vals), "m", log_transform=True)
        assert a.tests[0].result.p_value == b.tests[0].result.p_value

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            pairwise_cluster_tests(Partition([0, 1]), self.table([1.0, 2.0, 3.0]), "m")

    def test_corrections(self):
        p = np.array([0.01, 0.04, 0.03])
        assert np.allclose(adjust_pvalues(p, "bonferroni"), [0.03, 0.12, 0.09])
        assert np.allclose(adjust_pvalues(p, "bh"), [0.03, 0.04, 0.04])
        assert np.array_equal(adjust_pvalues(p), p)


def test_read_metric_table(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("vertex,revenue,clicks\n0,1.5,3\n2,,4\n")
    t = read_metric_table(f, n=3)
    assert t.names == ["revenue", "clicks"]
    assert np.isnan(t["revenue"][1]) and np.isnan(t["revenue"][2])
    assert t["clicks"][2] == 4.0
    with pytest.raises(ParameterError):
        read_metric_table(f, n=2)
