import numpy as np
import pytest

from conftest import chain_graph, random_graph
from core.affinity_graph import graph_from_affinity
from core.config import LoopConfig, SelectionConfig
from core.detective_loop import ObservationResult
from core.error_handler import EmptySelection
from core.scoring import EvidenceItem
from core.segmenter import SegmentNode
from core.selection import (
    BELIEF_SELECTED, NO_EVIDENCE, apply_fallbacks, facet_coverage_map, facet_representatives, fallback_mode,
    graph_nms, package_evidence,
)


def test_chain_trace_suppresses_neighbor():
    assert graph_nms(np.array([0.9, 0.8, 0.5]), None, chain_graph(3), m=2, eta=0.2) == [0, 2]


def test_facet_representative_is_always_selected():
    selected = graph_nms(np.array([0.9, 0.8, 0.5]), np.array([[0.0, 1.0, 0.0]]), chain_graph(3), m=2)
    assert selected == [1, 0]


def test_only_facet_picks_when_nothing_positive_remains():
    selected = graph_nms(np.array([0.0, 0.5, 0.0]), np.array([[0.0, 1.0, 0.0]]), chain_graph(3), m=2)
    assert selected == [1]


def test_duplicate_facet_picks_appear_once():
    channels = np.array([[0.0, 1.0, 0.0], [0.1, 0.9, 0.0]])
    assert facet_representatives(np.array([0.2, 0.8, 0.1]), channels) == [1]


def test_everything_selected_when_m_exceeds_node_count():
    assert graph_nms(np.array([0.1, 0.0, 0.3]), None, chain_graph(3), m=8) == [0, 1, 2]


def test_isolated_picks_do_not_suppress_others():
    graph = graph_from_affinity(np.zeros((5, 5)), 2)
    belief = np.array([0.5, 0.9, 0.1, 0.7, 0.3])
    assert graph_nms(belief, None, graph, m=3) == [1, 3, 0]


def test_small_eta_spreads_picks_along_a_path():
    rng = np.random.default_rng(3)
    graph = chain_graph(10, top_k=2)
    for _ in range(50):
        belief = rng.uniform(0.1, 1.0, 10)
        selected = graph_nms(belief, None, graph, m=3, eta=1e-3)
        assert all(abs(a - b) > 1 for a in selected for b in selected if a != b)


def test_selection_size_and_coverage_bounds():
    rng = np.random.default_rng(6)
    for _ in range(100):
        k = int(rng.integers(2, 40))
        r = int(rng.integers(1, 5))
        m = int(rng.integers(1, 10))
        graph = random_graph(rng, k, 4)
        belief = rng.random(k)
        channels = rng.random((r, k))
        selected = graph_nms(belief, channels, graph, m=m)
        assert len(selected) == len(set(selected))
        assert len(selected) <= max(m + r, 0) or m > k
        coverage = facet_coverage_map(belief, channels, [str(i) for i in range(r)])
        assert set(coverage.values()) <= set(selected)


@pytest.mark.parametrize("belief, expected", [
    ([0.05, 0.1, 0.08], [1 / 3, 1 / 3, 1 / 3]),
    ([0.5, 0.45, 0.42], [0.5 * 0.5 + 0.5 / 3, 0.5 * 0.45 + 0.5 / 3, 0.5 * 0.42 + 0.5 / 3]),
    ([0.9, 0.2, 0.1], [0.9, 0.2, 0.1]),
])
def test_fallback_rules(belief, expected):
    np.testing.assert_allclose(apply_fallbacks(np.array(belief), LoopConfig()), expected)


def test_fallback_statistics_can_come_from_observations():
    weak_belief = np.array([0.05, 0.1, 0.08])
    np.testing.assert_allclose(apply_fallbacks(weak_belief, observed_scores=np.array([0.9, 0.1])), weak_belief)
    assert fallback_mode(np.array([]), LoopConfig()) == "uniform"
    assert fallback_mode(np.array([0.9, 0.1]), LoopConfig()) == "none"


def test_weak_observations_override_a_confident_belief():
    belief = np.array([0.9, 0.1, 0.5, 0.6])
    assert fallback_mode(belief, LoopConfig()) == "none"
    np.testing.assert_allclose(apply_fallbacks(belief, LoopConfig(), np.array([0.3, 0.1])), np.full(4, 0.25))
    np.testing.assert_allclose(apply_fallbacks(belief, LoopConfig(), np.array([0.5, 0.45])),
                               0.5 * belief + 0.125)
    np.testing.assert_allclose(apply_fallbacks(belief, LoopConfig(), np.array([])), belief)


def make_nodes(ranges):
    return [SegmentNode(id=i, frame_range=(a, b), center_time=(a + b) / 2.0, feature=np.ones(2) / np.sqrt(2),
                        start_time=float(a), end_time=float(b)) for i, (a, b) in enumerate(ranges)]


def spread_embeddings(count, dim=128, seed=0):
    """Nearly orthogonal unit rows"""
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((dim, dim)))
    return q[:count]


def test_frames_are_spaced_uniformly_and_clamped():
    nodes = make_nodes([(0, 39), (40, 41)])
    package = package_evidence([0, 1], nodes, {}, spread_embeddings(42), np.array([0.7, 0.4]))
    assert package.entries[0].frames == [0, 13, 26, 39]
    assert package.entries[1].frames == [40, 41]
    assert package.total_frames == 6


def test_identical_segments_fall_back_to_node_local_frames():
    nodes = make_nodes([(0, 3), (4, 7)])
    embeddings = np.tile(np.eye(4)[0], (8, 1))
    package = package_evidence([0, 1], nodes, {}, embeddings, np.array([0.5, 0.5]))
    assert [e.frames for e in package.entries] == [[0], [4]]
    assert [e.dedup_mode for e in package.entries] == ["strict", "fallback"]


def test_near_duplicate_segments_use_relaxed_threshold():
    embeddings = np.zeros((8, 8))
    for j in range(4):
        embeddings[j, j] = 1.0
        embeddings[4 + j, j] = 0.93
        embeddings[4 + j, 4 + j] = np.sqrt(1 - 0.93 ** 2)
    package = package_evidence([0, 1], make_nodes([(0, 3), (4, 7)]), {}, embeddings, np.array([0.5, 0.5]))
    assert package.entries[1].frames == [4, 5, 6, 7]
    assert package.entries[1].dedup_mode == "relaxed"


def test_crowded_selection_shares_the_frame_budget():
    nodes = make_nodes([(0, 9), (10, 19), (20, 29)])
    package = package_evidence([0, 1, 2], nodes, {}, spread_embeddings(30), np.zeros(3),
                               SelectionConfig(m=2, n_f=4))
    assert [len(e.frames) for e in package.entries] == [2, 2, 2]
    assert package.total_frames <= 2 * 4


def test_entries_sorted_with_text_and_belief_scores():
    nodes = make_nodes([(0, 3), (4, 7), (8, 11)])
    observed = ObservationResult(
        node_id=2, caption="a chef slices",
        evidence=[EvidenceItem("caption", "a chef slices", 2), EvidenceItem("ocr", "ONION", 2)],
        score=0.7, item_scores=[0.3, 0.7],
    )
    blank = ObservationResult(node_id=0)
    package = package_evidence([2, 1, 0], nodes, {2: observed, 0: blank}, spread_embeddings(12),
                               np.array([0.1, 0.2, 0.3]), facet_coverage={"general": 2, "A": 1})
    assert package.node_ids == [0, 1, 2]
    assert [(e.text, e.source) for e in package.entries] == [
        ("", NO_EVIDENCE), ("", BELIEF_SELECTED), ("ONION", "ocr")]
    assert [e.score for e in package.entries] == [0.1, 0.2, 0.3]
    record = package.to_dict()
    assert list(record['facet_coverage']) == ["A", "general"]
    assert record['entries'][2] == {'node': 2, 'span': [8.0, 11.0], 'frames': [8, 9, 10, 11],
                                    'text': "ONION", 'source': "ocr", 'score': 0.3}


def test_empty_selection_is_rejected():
    with pytest.raises(EmptySelection):
        package_evidence([], make_nodes([(0, 1)]), {}, np.eye(2), np.zeros(1))
