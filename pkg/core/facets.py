"""
Query Facets - Decomposition, Event Timeline and Prior Channels
===============================================================

A query is split into facets (one per answer option plus a "general"
facet). Each facet carries entity keywords for lexical/cross-modal matching
and event descriptions for semantic matching. The prior channel of facet r
at node i is::

    alpha_route * max_w <phi(w), h_i> + (1 - alpha_route) * max_p <psi(p), psi(e_i)>

where e_i is the event-timeline text assigned to node i.
"""

import json
import logging
import string
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .detective_types import PlannerResponse, TimelineEvent, TimelineResponse
from .error_handler import DecompositionError, InvalidQuery, ResponseFormatError
from .scoring import content_words
from .segmenter import SegmentNode

logger = logging.getLogger(__name__)

GENERAL_LABEL = "general"


@dataclass
class Facet:
    label: str
    keywords: List[str] = field(default_factory=list)
    descriptions: List[str] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.keywords and not self.descriptions

    def to_dict(self) -> dict:
        return {'label': self.label, 'keywords': list(self.keywords),
                'descriptions': list(self.descriptions)}


@dataclass
class QueryFacets:
    facets: List[Facet]
    vlm_query: str = ""
    temporal_plan: str = ""

    def __post_init__(self):
        if not self.facets:
            raise InvalidQuery("query produced no usable facets")

    @property
    def labels(self) -> List[str]:
        return [f.label for f in self.facets]

    def to_dict(self) -> dict:
        return {
            'facets': [f.to_dict() for f in self.facets],
            'vlm_query': self.vlm_query,
            'temporal_plan': self.temporal_plan,
        }


@dataclass
class EventTimeline:
    items: List[TimelineEvent] = field(default_factory=list)


@dataclass
class PriorChannels:
    channels: np.ndarray
    fused: np.ndarray

    @property
    def facet_count(self) -> int:
        return int(self.channels.shape[0])


def option_letters(count: int) -> List[str]:
    return list(string.ascii_uppercase[:count])


def _clean(values: Sequence[str]) -> List[str]:
    seen = []
    for v in values:
        if not isinstance(v, str):
            continue
        v = v.strip()
        if v and v not in seen:
            seen.append(v)
    return seen


def _as_list(value) -> List[str]:
    if isinstance(value, str):
        return [value]
    return list(value or [])


def extract_json_block(raw: str) -> str:
    """Strip prose or code fences around the outermost JSON object/array"""
    text = (raw or "").strip()
    starts = [i for i in (text.find("{"), text.find("[")) if i >= 0]
    if not starts:
        return text
    start = min(starts)
    end = max(text.rfind("}"), text.rfind("]"))
    return text[start:end + 1] if end > start else text


def parse_decomposition(raw_json: str, query: str = "",
                        options: Optional[Sequence[str]] = None) -> QueryFacets:
    """
    Build facets from the planner's JSON.

    One facet per option letter (options given) plus a trailing "general"
    facet; free-form queries get only the general facet.
    """
    try:
        data = json.loads(extract_json_block(raw_json))
    except (json.JSONDecodeError, TypeError) as e:
        raise DecompositionError(f"planner output is not JSON: {e}") from e
    if not isinstance(data, dict):
        raise DecompositionError("planner output must be a JSON object")
    try:
        plan = PlannerResponse.model_validate(data)
    except ValidationError as e:
        raise DecompositionError(f"planner output does not match schema: {e}") from e

    facets: List[Facet] = []
    for letter, option_text in zip(option_letters(len(options or [])), options or []):
        facet = Facet(
            label=letter,
            keywords=_clean(plan.option_keywords.get(letter, [])),
            descriptions=_clean(_as_list(plan.semantic_queries.get(letter, ""))),
        )
        if facet.is_empty:
            facet.keywords = _clean(content_words(option_text))
        if facet.is_empty:
            logger.warning(f"⚠️ Option {letter} yielded no keywords or descriptions; facet dropped")
            continue
        facets.append(facet)

    general = Facet(
        label=GENERAL_LABEL,
        keywords=_clean(plan.query_keywords),
        descriptions=_clean(_as_list(plan.general_semantic_query)),
    )
    if general.is_empty:
        general.keywords = _clean(content_words(query))
    if not general.is_empty:
        facets.append(general)

    if not facets:
        raise InvalidQuery("every facet is empty after fallback", context={'query': query})

    logger.info(f"🧩 {len(facets)} facets: {[f.label for f in facets]}")
    return QueryFacets(facets=facets, vlm_query=plan.vlm_query or query,
                       temporal_plan=plan.temporal_plan)


def merge_facets(facets: QueryFacets) -> QueryFacets:
    """Collapse every facet into one (used by the facet-free ablation)"""
    merged = Facet(
        label=GENERAL_LABEL,
        keywords=_clean([k for f in facets.facets for k in f.keywords]),
        descriptions=_clean([d for f in facets.facets for d in f.descriptions]),
    )
    return QueryFacets(facets=[merged], vlm_query=facets.vlm_query,
                       temporal_plan=facets.temporal_plan)


def parse_timeline(raw_json: str, duration: float) -> EventTimeline:
    """Parse ``[{start, end, description}]`` (or ``{"events": [...]}``), clamped to the video"""
    try:
        data = json.loads(extract_json_block(raw_json))
    except (json.JSONDecodeError, TypeError) as e:
        raise ResponseFormatError(f"timeline output is not JSON: {e}") from e
    if isinstance(data, list):
        data = {"events": data}
    try:
        parsed = TimelineResponse.model_validate(data)
    except ValidationError as e:
        raise ResponseFormatError(f"timeline output does not match schema: {e}") from e

    items = []
    for event in parsed.events:
        start, end = sorted((event.start, event.end))
        start = min(max(start, 0.0), duration)
        end = min(max(end, 0.0), duration)
        if event.description.strip():
            items.append(TimelineEvent(start=start, end=end, description=event.description.strip()))
    items.sort(key=lambda e: (e.start, e.end))
    return EventTimeline(items=items)


def assign_timeline_to_nodes(timeline: EventTimeline, nodes: Sequence[SegmentNode]) -> List[str]:
    """Overlapping event descriptions per node, or the nearest event by midpoint"""
    if not nodes:
        raise InvalidQuery("no nodes to assign timeline events to")
    if not timeline.items:
        return ["" for _ in nodes]

    ordered = sorted(timeline.items, key=lambda e: (e.start, e.end))
    descriptions = []
    for node in nodes:
        hits = [e.description for e in ordered
                if e.start <= node.end_time and e.end >= node.start_time]
        if hits:
            descriptions.append(" ".join(hits))
            continue
        distances = [abs((e.start + e.end) / 2.0 - node.center_time) for e in ordered]
        descriptions.append(ordered[int(np.argmin(distances))].description)
    return descriptions


def _clipped_max(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per target, max clipped cosine over query rows (unit-norm inputs)"""
    return np.clip(queries @ targets.T, 0.0, 1.0).max(axis=0)


def prior_scores(facets: QueryFacets, nodes: Sequence[SegmentNode], node_descriptions: Sequence[str],
                 image_text_encoder, text_encoder, alpha_route: float = 0.5) -> PriorChannels:
    """
    Per-facet prior channels and their entrywise max.

    ``image_text_encoder.embed_joint_texts`` maps keywords into the frame
    embedding space; ``text_encoder.embed_texts`` is the semantic encoder.
    """
    if not 0.0 <= alpha_route <= 1.0:
        raise ValueError(f"alpha_route must be in [0, 1], got {alpha_route}")
    k = len(nodes)
    h = np.stack([n.feature for n in nodes])

    described = [i for i, d in enumerate(node_descriptions) if d and d.strip()]
    desc_vectors = text_encoder.embed_texts([node_descriptions[i] for i in described]) if described else None

    channels = np.zeros((len(facets.facets), k))
    for r, facet in enumerate(facets.facets):
        keyword_term = np.zeros(k)
        if facet.keywords:
            keyword_term = _clipped_max(np.asarray(image_text_encoder.embed_joint_texts(facet.keywords)), h)

        semantic_term = np.zeros(k)
        if facet.descriptions and described:
            p = np.asarray(text_encoder.embed_texts(facet.descriptions))
            semantic_term[described] = _clipped_max(p, np.asarray(desc_vectors))

        channels[r] = alpha_route * keyword_term + (1.0 - alpha_route) * semantic_term

    fused = channels.max(axis=0) if len(channels) else np.zeros(k)
    return PriorChannels(channels=channels, fused=fused)
