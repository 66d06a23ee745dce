"""
Detective Loop - Budgeted Hypothesis / Verification / Refinement
================================================================

Each iteration picks an anchor segment for an unresolved facet (initial
anchor, strongest neighbor, or global gap fill), asks an inspector to
observe and score it, injects the score and refines the belief with a
warm-started diffusion of ``t_prop`` steps.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .affinity_graph import AffinityGraph
from .bundle import FeatureBundle
from .config import LoopConfig, DiffusionConfig, ScoringConfig
from .diffusion import BeliefState, warm_start_diffuse
from .error_handler import ProviderError, ConfigError
from .facets import QueryFacets, PriorChannels
from .scoring import SOURCE_PRIORITY, EvidenceItem, EvidenceSource, IdfTable, node_score
from .segmenter import SegmentNode, uniform_frame_indices

logger = logging.getLogger(__name__)

STANDARD_OPTION_COUNT = 4


class AnchorPolicy(Enum):
    INIT = "init"
    NEIGHBOR = "neighbor"
    GAP = "gap"


@dataclass
class ObservationResult:
    """What one inspection of a segment produced"""
    node_id: int
    caption: str = ""
    needs_more_info: bool = True
    missing_visual_keyword: str = ""
    evidence: List[EvidenceItem] = field(default_factory=list)
    score: float = 0.0
    best_facet: int = 0
    facet_scores: List[float] = field(default_factory=list)
    item_scores: List[float] = field(default_factory=list)

    def best_item(self) -> Optional[EvidenceItem]:
        """Highest-scoring item; ties follow node_score (ocr > asr > caption, then list order)"""
        if not self.evidence:
            return None
        scores = self.item_scores or [0.0] * len(self.evidence)
        best = min(range(len(self.evidence)),
                   key=lambda i: (-scores[i], SOURCE_PRIORITY[self.evidence[i].source], i))
        return self.evidence[best]

    def facet_score(self, r: int) -> float:
        return self.facet_scores[r] if r < len(self.facet_scores) else 0.0


@dataclass
class TraceRecord:
    iteration: int
    anchor: int
    policy: AnchorPolicy
    facet: str
    score: float
    resolved_facets: List[str]
    belief_top5: List[Tuple[int, float]]

    def to_dict(self) -> dict:
        return {
            'iteration': self.iteration,
            'anchor': self.anchor,
            'policy': self.policy.value,
            'facet': self.facet,
            'score': self.score,
            'resolved_facets': list(self.resolved_facets),
            'belief_top5': [[i, v] for i, v in self.belief_top5],
        }


@dataclass
class SessionResult:
    state: BeliefState
    trace: List[TraceRecord]
    observations: Dict[int, ObservationResult]
    belief_snapshots: List[np.ndarray]
    budget: int

    @property
    def observed_scores(self) -> np.ndarray:
        return self.state.injection[self.state.visited]

    @property
    def observation_count(self) -> int:
        return len(self.trace)


class Inspector(ABC):
    """Observes one segment on behalf of one facet"""

    @abstractmethod
    def inspect(self, node_id: int, facet_index: int) -> ObservationResult:
        pass


class EvidenceInspector(Inspector):
    """Observer call + bundle OCR/ASR lookup + node scoring"""

    def __init__(self, suite, bundle: FeatureBundle, nodes: Sequence[SegmentNode], facets: QueryFacets,
                 idf: IdfTable, encoder, window_frames: int = 9,
                 scoring: Optional[ScoringConfig] = None, query: str = ""):
        self.suite = suite
        self.bundle = bundle
        self.nodes = list(nodes)
        self.facets = facets
        self.idf = idf
        self.encoder = encoder
        self.window_frames = window_frames
        self.scoring = scoring or ScoringConfig()
        self.query = facets.vlm_query or query

    def _evidence(self, node: SegmentNode, caption: str) -> List[EvidenceItem]:
        items = []
        if caption.strip():
            items.append(EvidenceItem(EvidenceSource.CAPTION, caption.strip(), node.id))
        for source in (EvidenceSource.OCR, EvidenceSource.ASR):
            text = self.bundle.text_in_span(source.value, node.start_time, node.end_time)
            if text:
                items.append(EvidenceItem(source, text, node.id))
        return items

    def inspect(self, node_id: int, facet_index: int) -> ObservationResult:
        node = self.nodes[node_id]
        facet = self.facets.facets[facet_index]
        frames = uniform_frame_indices(node.frame_range, self.window_frames)
        try:
            response = self.suite.observe(
                self.bundle.frame_refs(frames), self.query,
                facet.keywords, facet.descriptions, segment_id=node.id
            )
            items = self._evidence(node, response.caption)
            result = ObservationResult(
                node_id=node.id,
                caption=response.caption,
                needs_more_info=response.refinement_plan.needs_more_info,
                missing_visual_keyword=response.refinement_plan.missing_visual_keyword,
                evidence=items,
            )
            if items:
                scored = node_score(items, self.facets, self.idf, self.encoder,
                                    self.scoring.z_lex, self.scoring.source_weights())
                result.score = scored.score
                result.best_facet = scored.best_facet
                result.facet_scores = scored.facet_scores
                result.item_scores = scored.item_scores
            return result
        except ProviderError as e:
            logger.error(f"❌ Observation of segment {node.id} failed, scoring 0: {e}")
            return ObservationResult(node_id=node.id, needs_more_info=True)


def total_budget(base: int, num_options: int, steps_per_extra: int = 1) -> int:
    """Iterations for a question; options beyond the standard four add steps"""
    if num_options < 0:
        raise ConfigError(f"num_options must be >= 0, got {num_options}")
    return base + steps_per_extra * max(0, num_options - STANDARD_OPTION_COUNT)


def select_initial_anchor(prior_channels: np.ndarray, facet: int) -> int:
    return int(np.argmax(np.asarray(prior_channels)[facet]))


def select_neighbor_anchor(graph: AffinityGraph, anchor: int, belief: np.ndarray,
                           visited: np.ndarray) -> Optional[int]:
    """Unvisited neighbor maximizing W̃_ij * F_j; None when there is none"""
    indices, weights = graph.neighbors(anchor)
    best, best_value = None, -np.inf
    for j, w in sorted(zip(indices.tolist(), weights.tolist())):
        if visited[j] or w <= 0:
            continue
        value = w * belief[j]
        if value > best_value:
            best, best_value = j, value
    return best


def select_gap_fill_anchor(belief: np.ndarray, visited: np.ndarray) -> Optional[int]:
    if np.all(visited):
        return None
    masked = np.where(visited, -np.inf, belief)
    return int(np.argmax(masked))


class _FacetScheduler:
    """Round-robin over unresolved facets by index"""

    def __init__(self):
        self.previous = -1

    def next(self, unresolved) -> int:
        ordered = sorted(unresolved)
        later = [r for r in ordered if r > self.previous]
        self.previous = later[0] if later else ordered[0]
        return self.previous


def _refine(graph: AffinityGraph, state: BeliefState, diffusion: DiffusionConfig, use_diffusion: bool):
    if use_diffusion:
        state.belief = warm_start_diffuse(graph, state.belief, state.injection,
                                          diffusion.beta, max_iters=diffusion.t_prop, tol=None)
    else:
        state.belief = state.injection.copy()


def run_session(graph: AffinityGraph, facets: QueryFacets, prior: PriorChannels, inspector: Inspector,
                loop: Optional[LoopConfig] = None, diffusion: Optional[DiffusionConfig] = None,
                num_options: int = 0, use_diffusion: bool = True, prior_only: bool = False) -> SessionResult:
    """
    Run one budgeted session.

    Args:
        use_diffusion: False keeps F equal to the injection (no propagation)
        prior_only: observe each facet's initial anchor once and stop
    """
    loop = loop or LoopConfig()
    diffusion = diffusion or DiffusionConfig()
    k = graph.k_nodes
    labels = facets.labels
    if prior.channels.shape != (len(labels), k):
        raise ConfigError(f"prior channels {prior.channels.shape} do not match {len(labels)} facets x {k} nodes")

    budget = total_budget(loop.base_budget, num_options, loop.steps_per_extra_option)
    seed = prior.fused if use_diffusion else None
    state = BeliefState.initial(k, seed, len(labels))
    trace: List[TraceRecord] = []
    observations: Dict[int, ObservationResult] = {}
    snapshots = [state.belief.copy()]
    last_anchor: Dict[int, int] = {}
    scheduler = _FacetScheduler()
    logger.info(f"🔎 Session start: {k} segments, {len(labels)} facets, budget {budget}")

    def step(anchor: int, policy: AnchorPolicy, facet: int):
        obs = inspector.inspect(anchor, facet)
        observations[anchor] = obs
        state.injection[anchor] = obs.score
        state.visited[anchor] = True
        _refine(graph, state, diffusion, use_diffusion)
        if (facet in state.unresolved_facets and not obs.needs_more_info
                and obs.facet_score(facet) >= loop.retry_threshold):
            state.unresolved_facets.discard(facet)
            logger.info(f"✅ Facet '{labels[facet]}' resolved at segment {anchor}")
        resolved = [labels[r] for r in range(len(labels)) if r not in state.unresolved_facets]
        trace.append(TraceRecord(
            iteration=len(trace) + 1, anchor=anchor, policy=policy, facet=labels[facet],
            score=float(obs.score), resolved_facets=resolved, belief_top5=state.top(5),
        ))
        snapshots.append(state.belief.copy())
        logger.info(f"Iteration {len(trace)}/{budget}: {policy.value} -> segment {anchor} "
                    f"[{labels[facet]}] score {obs.score:.3f}")

    if prior_only:
        for r in range(len(labels)):
            anchor = select_initial_anchor(prior.channels, r)
            if len(trace) >= budget or state.visited[anchor]:
                continue
            step(anchor, AnchorPolicy.INIT, r)
        return SessionResult(state, trace, observations, snapshots, budget)

    while len(trace) < budget and not np.all(state.visited):
        if state.unresolved_facets:
            facet = scheduler.next(state.unresolved_facets)
            initial = select_initial_anchor(prior.channels, facet)
            if facet not in last_anchor and not state.visited[initial]:
                anchor, policy = initial, AnchorPolicy.INIT
            else:
                anchor = select_neighbor_anchor(graph, last_anchor.get(facet, initial),
                                                state.belief, state.visited)
                policy = AnchorPolicy.NEIGHBOR
                if anchor is None:
                    anchor, policy = select_gap_fill_anchor(state.belief, state.visited), AnchorPolicy.GAP
            last_anchor[facet] = anchor
        else:
            anchor, policy = select_gap_fill_anchor(state.belief, state.visited), AnchorPolicy.GAP
            facet = int(np.argmax(prior.channels[:, anchor]))
        step(anchor, policy, facet)

    logger.info(f"🏁 Session done: {len(trace)} observations, "
                f"{len(labels) - len(state.unresolved_facets)}/{len(labels)} facets resolved")
    return SessionResult(state, trace, observations, snapshots, budget)
