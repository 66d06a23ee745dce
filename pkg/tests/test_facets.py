import json

import numpy as np
import pytest

from core.detective_types import TimelineEvent
from core.error_handler import DecompositionError, InvalidQuery, ResponseFormatError
from core.facets import (
    EventTimeline, Facet, QueryFacets, assign_timeline_to_nodes, extract_json_block, merge_facets,
    parse_decomposition, parse_timeline, prior_scores,
)
from core.segmenter import SegmentNode

OPTIONS = ["potato", "red onion", "carrot", "lemon"]


def planner_json(**overrides):
    data = {
        "query_keywords": ["chef", "slice"],
        "option_keywords": {"A": ["potato"], "B": ["red onion"], "C": ["carrot"], "D": ["lemon"]},
        "semantic_queries": {"A": "a chef cuts a potato", "B": "a chef cuts an onion",
                             "C": "a chef cuts a carrot", "D": "a chef cuts a lemon"},
        "general_semantic_query": "a chef slicing vegetables",
        "temporal_plan": "look for the cutting board",
        "vlm_query": "What is being sliced?",
    }
    data.update(overrides)
    return json.dumps(data)


def node(i, start, end, feature=None):
    return SegmentNode(id=i, frame_range=(i, i), center_time=(start + end) / 2.0,
                       feature=np.asarray(feature if feature is not None else [1.0, 0.0]),
                       start_time=start, end_time=end)


def test_full_mcq_decomposition_yields_option_facets_plus_general():
    facets = parse_decomposition(planner_json(), "What does the chef slice?", OPTIONS)
    assert facets.labels == ["A", "B", "C", "D", "general"]
    assert facets.facets[1].keywords == ["red onion"]
    assert facets.facets[1].descriptions == ["a chef cuts an onion"]
    assert facets.vlm_query == "What is being sliced?"
    assert facets.temporal_plan == "look for the cutting board"


def test_descriptions_alone_keep_a_facet_valid():
    facets = parse_decomposition(planner_json(option_keywords={}), "q", OPTIONS)
    assert facets.facets[0].keywords == []
    assert facets.facets[0].descriptions == ["a chef cuts a potato"]


def test_empty_option_falls_back_to_option_words():
    facets = parse_decomposition(planner_json(option_keywords={}, semantic_queries={}), "q", OPTIONS)
    assert facets.facets[1].keywords == ["red", "onion"]


def test_free_form_query_gets_general_facet_from_query_words():
    facets = parse_decomposition("{}", "Where is the red umbrella?")
    assert facets.labels == ["general"]
    assert facets.facets[0].keywords == ["red", "umbrella"]
    assert facets.vlm_query == "Where is the red umbrella?"


def test_fenced_json_is_accepted():
    raw = "Sure! ```json\n" + planner_json() + "\n```"
    assert len(parse_decomposition(raw, "q", OPTIONS).facets) == 5
    assert extract_json_block("noise [1, 2] tail") == "[1, 2]"


@pytest.mark.parametrize("raw", ["not json at all", "[1, 2, 3]", '{"query_keywords": {"a": 1}}'])
def test_malformed_planner_output(raw):
    with pytest.raises(DecompositionError):
        parse_decomposition(raw, "q")


def test_all_empty_facets_are_an_invalid_query():
    with pytest.raises(InvalidQuery):
        parse_decomposition("{}", "the of and")


def test_merge_facets_unions_terms():
    merged = merge_facets(parse_decomposition(planner_json(), "q", OPTIONS))
    assert merged.labels == ["general"]
    assert "lemon" in merged.facets[0].keywords and "chef" in merged.facets[0].keywords


def test_timeline_parsing_clamps_and_sorts():
    raw = json.dumps([{"start": 50, "end": 80, "description": "credits"},
                      {"start": 5, "end": 0, "description": "intro"},
                      {"start": 1, "end": 2, "description": "  "}])
    timeline = parse_timeline(raw, duration=60.0)
    assert [(e.start, e.end, e.description) for e in timeline.items] == [(0.0, 5.0, "intro"), (50.0, 60.0, "credits")]
    with pytest.raises(ResponseFormatError):
        parse_timeline("nope", 10.0)


def test_timeline_assignment_overlap_and_nearest():
    timeline = EventTimeline([TimelineEvent(start=0, end=10, description="first"),
                              TimelineEvent(start=20, end=30, description="second")])
    nodes = [node(0, 8, 22), node(1, 40, 50), node(2, 11, 13)]
    assert assign_timeline_to_nodes(timeline, nodes) == ["first second", "second", "first"]


def test_whole_video_event_reaches_every_node():
    timeline = EventTimeline([TimelineEvent(start=0, end=100, description="cooking")])
    assert assign_timeline_to_nodes(timeline, [node(0, 0, 5), node(1, 90, 99)]) == ["cooking", "cooking"]


def test_empty_timeline_gives_empty_descriptions():
    assert assign_timeline_to_nodes(EventTimeline(), [node(0, 0, 5)]) == [""]
    with pytest.raises(InvalidQuery):
        assign_timeline_to_nodes(EventTimeline(), [])


class AxisEncoder:
    """Texts are looked up in a table of unit vectors"""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}

    def embed_texts(self, texts):
        return np.stack([self.table[t] for t in texts])

    embed_joint_texts = embed_texts


def test_keyword_matching_node_feature_gives_half_prior():
    encoder = AxisEncoder({"onion": [1.0, 0.0]})
    facets = QueryFacets([Facet("A", ["onion"])])
    prior = prior_scores(facets, [node(0, 0, 1, [1.0, 0.0]), node(1, 2, 3, [0.0, 1.0])], ["", ""],
                         encoder, encoder, alpha_route=0.5)
    np.testing.assert_allclose(prior.channels, [[0.5, 0.0]])


def test_description_only_facet_uses_semantic_route():
    encoder = AxisEncoder({"cutting": [1.0, 0.0], "chopping": [1.0, 0.0], "sleeping": [-1.0, 0.0]})
    facets = QueryFacets([Facet("A", [], ["cutting"])])
    prior = prior_scores(facets, [node(0, 0, 1), node(1, 2, 3), node(2, 4, 5)], ["chopping", "sleeping", ""],
                         encoder, encoder, alpha_route=0.5)
    np.testing.assert_allclose(prior.channels, [[0.5, 0.0, 0.0]])


def test_fused_prior_is_entrywise_max():
    encoder = AxisEncoder({"x": [0.3, np.sqrt(0.91)], "y": [0.7, np.sqrt(0.51)]})
    facets = QueryFacets([Facet("A", ["x"]), Facet("B", ["y"])])
    prior = prior_scores(facets, [node(0, 0, 1, [1.0, 0.0])], [""], encoder, encoder, alpha_route=1.0)
    np.testing.assert_allclose(prior.channels[:, 0], [0.3, 0.7])
    assert prior.fused[0] == pytest.approx(0.7)
    assert prior.facet_count == 2
    assert np.all(prior.fused >= prior.channels)


def test_empty_facet_list_is_invalid():
    with pytest.raises(InvalidQuery):
        QueryFacets([])
