import math

import numpy as np
import pytest

from conftest import chain_graph, random_graph, unit
from core.affinity_graph import (
    build_graph, graph_from_affinity, sparsify_top_k, spectral_radius, temporal_affinity, visual_affinity,
)
from core.config import GraphConfig
from core.error_handler import EmptyGraph, ShapeError


def test_visual_affinity_clips_negative_cosines():
    a = unit([1.0, 0.0])
    b = unit([-0.5, math.sqrt(0.75)])
    w = visual_affinity([a, a, b])
    assert w[0, 1] == pytest.approx(1.0)
    assert w[0, 2] == 0.0
    np.testing.assert_allclose(visual_affinity([a, unit([0.0, 1.0])]), np.eye(2), atol=1e-12)
    with pytest.raises(EmptyGraph):
        visual_affinity([])


@pytest.mark.parametrize("dt, expected", [(0.0, 1.0), (30.0, math.exp(-1)), (60.0, math.exp(-2))])
def test_temporal_kernel(dt, expected):
    assert temporal_affinity([0.0, dt], 30.0)[0, 1] == pytest.approx(expected, abs=1e-6)


def test_temporal_kernel_is_non_increasing_in_distance():
    row = temporal_affinity([0.0, 1.0, 5.0, 20.0, 90.0], 30.0)[0]
    assert np.all(np.diff(row) <= 0)


def test_two_identical_nodes_link_fully():
    e = unit([1.0, 1.0])
    graph = build_graph([e, e], [3.0, 3.0], GraphConfig(alpha=0.6))
    np.testing.assert_allclose(graph.w_sparse.toarray(), [[0, 1], [1, 0]])
    np.testing.assert_allclose(graph.w_norm.toarray(), [[0, 1], [1, 0]])


def test_chain_degrees_and_normalization():
    graph = chain_graph(3, top_k=2)
    np.testing.assert_allclose(graph.degrees, [1.0, 2.0, 1.0])
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / math.sqrt(2)
    np.testing.assert_allclose(graph.w_norm.toarray(), expected)


def test_single_node_graph_is_isolated():
    graph = build_graph([unit([1.0, 0.0])], [0.0])
    assert graph.w_sparse.toarray().tolist() == [[0.0]]
    assert graph.w_norm.toarray().tolist() == [[0.0]]
    assert spectral_radius(graph.w_norm) == 0.0


def test_top_k_ties_prefer_lower_columns():
    kept = sparsify_top_k(np.ones((4, 4)), 2)
    assert kept[0].tolist() == [0.0, 1.0, 1.0, 0.0]
    assert kept[3].tolist() == [1.0, 1.0, 0.0, 0.0]


def test_random_graphs_are_symmetric_sparse_and_bounded():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        k = int(rng.integers(2, 51))
        top_k = int(rng.integers(1, 9))
        graph = random_graph(rng, k, top_k)
        w = graph.w_sparse.toarray()
        norm = graph.w_norm.toarray()
        assert np.all(np.diag(w) == 0)
        np.testing.assert_allclose(w, w.T, atol=1e-9)
        np.testing.assert_allclose(norm, norm.T, atol=1e-9)
        assert np.all(w >= 0) and np.all(norm >= 0)
        assert graph.nnz <= 2 * k * top_k
        assert spectral_radius(graph.w_norm) <= 1.0 + 1e-6


def test_fusion_endpoints():
    rng = np.random.default_rng(8)
    features = [unit(v) for v in rng.standard_normal((6, 4))]
    times = [0.0, 4.0, 9.0, 15.0, 40.0, 41.0]
    visual = visual_affinity(features)
    np.fill_diagonal(visual, 0.0)
    temporal = temporal_affinity(times, 30.0)
    np.fill_diagonal(temporal, 0.0)
    full = build_graph(features, times, GraphConfig(alpha=1.0, top_k=5))
    np.testing.assert_allclose(full.w_sparse.toarray(), visual, atol=1e-12)
    timed = build_graph(features, times, GraphConfig(alpha=0.0, top_k=5))
    np.testing.assert_allclose(timed.w_sparse.toarray(), temporal, atol=1e-12)


def test_shape_errors():
    with pytest.raises(ShapeError):
        build_graph([unit([1.0, 0.0])], [0.0, 1.0])
    with pytest.raises(ShapeError):
        graph_from_affinity(np.ones((2, 3)), 1)
    with pytest.raises(EmptyGraph):
        build_graph([], [])


def test_graph_record_lists_upper_triangle_edges():
    record = chain_graph(3, top_k=2).to_record()
    assert record['nnz'] == 4
    assert record['edges'] == [{'i': 0, 'j': 1, 'weight': 1.0}, {'i': 1, 'j': 2, 'weight': 1.0}]
