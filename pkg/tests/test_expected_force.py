import math

import numpy as np
import pytest

from efgraph.expected_force import (
    FLAG_NO_CLUSTERS,
    FLAG_OK,
    FLAG_ZERO_DEGREE_CLUSTERS,
    cluster_degree,
    ef,
    ef_cluster_centric,
    ef_vertex_centric,
    entropy_from_histogram,
)
from efgraph.graph import RmatParams, build_graph, cluster_count, generate_rmat

from conftest import complete_edges, er_edges, path_edges, star_edges
from oracles import adjacency, expected_force


def _assert_matches_oracle(edges, result, g, tol=1e-9):
    oracle = expected_force(adjacency(edges))
    for dense in range(g.n):
        want = oracle[int(g.orig_ids[dense])]
        assert result.ef[dense] == pytest.approx(want, abs=tol)


class TestClusterDegree:
    def test_triangle_is_closed(self):
        g = build_graph([(0, 1), (1, 2), (0, 2)])
        assert cluster_degree(g, 0, 1, 2) == 0

    def test_isolated_path(self):
        g = build_graph(path_edges(3))  # 0-1-2
        assert cluster_degree(g, 0, 1, 2) == 0

    def test_star_with_extra_leaf(self):
        g = build_graph(star_edges(3))  # center 0, leaves 1,2,3
        assert cluster_degree(g, 1, 0, 2) == 1

    def test_rejects_non_triplet(self):
        g = build_graph(path_edges(4))
        with pytest.raises(ValueError):
            cluster_degree(g, 0, 1, 1)
        with pytest.raises(ValueError):
            cluster_degree(g, 0, 1, 3)  # 3 not adjacent to middle 1


class TestEntropy:
    def test_uniform_six(self):
        assert entropy_from_histogram({1: 6}) == pytest.approx(math.log(6), abs=1e-12)

    def test_empty_and_zero_degree(self):
        assert entropy_from_histogram({}) == 0.0
        assert entropy_from_histogram({0: 4}) == 0.0

    def test_mixed_degrees(self):
        assert entropy_from_histogram({1: 2, 2: 1}) == pytest.approx(1.5 * math.log(2), abs=1e-12)

    def test_zero_key_ignored_alongside_mass(self):
        assert entropy_from_histogram({0: 10, 1: 6}) == pytest.approx(math.log(6), abs=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            entropy_from_histogram({-1: 2})


class TestClosedForms:
    def test_star(self):
        edges = star_edges(3)
        g = build_graph(edges)
        res = ef_cluster_centric(g)
        assert res.ef[0] == pytest.approx(math.log(6), abs=1e-12)
        for leaf in (1, 2, 3):
            assert res.ef[leaf] == pytest.approx(math.log(2), abs=1e-12)
        _assert_matches_oracle(edges, res, g)

    def test_path4(self):
        edges = path_edges(4)
        g = build_graph(edges)
        res = ef_vertex_centric(g)
        assert res.ef[0] == 0.0 and res.ef[3] == 0.0
        assert res.ef[1] == pytest.approx(math.log(3), abs=1e-12)
        assert res.ef[2] == pytest.approx(math.log(3), abs=1e-12)
        _assert_matches_oracle(edges, res, g)

    def test_triangle_all_zero(self):
        edges = [(0, 1), (1, 2), (0, 2)]
        g = build_graph(edges)
        for mode in ("cluster_centric", "vertex_centric"):
            assert np.all(ef(g, mode=mode).ef == 0.0)


class TestModeEquivalence:
    def test_small_random_graphs(self):
        for seed in range(20):
            edges = er_edges(80, 0.08, 300 + seed)
            if not edges:
                continue
            g = build_graph(edges)
            a = ef_cluster_centric(g)
            b = ef_vertex_centric(g)
            assert np.max(np.abs(a.ef - b.ef)) < 1e-9
            assert np.array_equal(a.cluster_total, b.cluster_total)
            _assert_matches_oracle(edges, a, g)

    def test_dispatch(self):
        g = build_graph(path_edges(4))
        assert np.array_equal(ef(g, mode="cluster_centric").ef, ef(g, mode="vertex_centric").ef)
        with pytest.raises(ValueError):
            ef(g, mode="edge_centric")


class TestDeterminism:
    def test_workers_and_chunks_bitwise(self):
        g, _ = generate_rmat(RmatParams(scale=9, avg_degree=6, seed=5))
        base = ef_cluster_centric(g, workers=1, chunk_size=4096)
        for workers in (2, 4, 8):
            for chunk in (1, 7, 100):
                other = ef_cluster_centric(g, workers=workers, chunk_size=chunk)
                assert np.array_equal(base.ef, other.ef)
                assert np.array_equal(base.cluster_total, other.cluster_total)

    def test_vertex_workers_bitwise(self):
        g, _ = generate_rmat(RmatParams(scale=8, avg_degree=4, seed=5))
        base = ef_vertex_centric(g, workers=1)
        assert np.array_equal(base.ef, ef_vertex_centric(g, workers=4).ef)

    def test_invalid_worker_args(self):
        g = build_graph(path_edges(3))
        with pytest.raises(ValueError):
            ef_cluster_centric(g, workers=0)
        with pytest.raises(ValueError):
            ef_cluster_centric(g, chunk_size=0)


class TestHistogramInvariants:
    def test_mass_identity(self, small_test_graphs):
        # total multiplicity = 2*C(deg(v),2) + sum over neighbors of (deg-1)
        for g in small_test_graphs:
            res = ef_cluster_centric(g)
            deg = g.degrees()
            for v in range(g.n):
                nbr_deg = deg[g.adjacency(v)]
                want = deg[v] * (deg[v] - 1) + int((nbr_deg - 1).sum())
                assert int(res.cluster_total[v]) == want

    def test_entropy_bound(self, small_test_graphs):
        for g in small_test_graphs:
            res = ef_cluster_centric(g)
            assert np.all(res.ef >= 0.0)
            live = res.cluster_total >= 1
            assert np.all(res.ef[live] <= np.log(res.cluster_total[live]) + 1e-12)

    def test_flags(self):
        res = ef_cluster_centric(build_graph([(0, 1)]))
        assert list(res.flags) == [FLAG_NO_CLUSTERS, FLAG_NO_CLUSTERS]
        res = ef_cluster_centric(build_graph([(0, 1), (1, 2), (0, 2)]))
        assert set(res.flags) == {FLAG_ZERO_DEGREE_CLUSTERS}
        res = ef_cluster_centric(build_graph(star_edges(3)))
        assert set(res.flags) == {FLAG_OK}

    def test_single_cluster_degeneracy(self):
        # endpoint of P4 owns exactly one cluster: entropy must vanish
        res = ef_cluster_centric(build_graph(path_edges(4)))
        assert res.cluster_total[0] == 1 and res.ef[0] == 0.0


class TestProcessedCounts:
    def test_cluster_mode_counts_each_triplet_once(self, small_test_graphs):
        for g in small_test_graphs:
            res = ef_cluster_centric(g)
            assert res.clusters_processed == cluster_count(g)

    def test_vertex_mode_revisits(self):
        g = build_graph(complete_edges(5))
        res = ef_vertex_centric(g)
        assert res.clusters_processed == 3 * cluster_count(g)
