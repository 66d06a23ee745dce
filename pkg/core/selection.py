"""
Selection - Graph-NMS and Evidence Packaging
============================================

Turns the final belief into a small, facet-covering, non-redundant set of
segments and packages their frames and best text for the answerer.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .affinity_graph import AffinityGraph
from .config import LoopConfig, SelectionConfig
from .error_handler import EmptySelection
from .segmenter import SegmentNode, uniform_frame_indices

logger = logging.getLogger(__name__)

BELIEF_SELECTED = "belief-selected"
NO_EVIDENCE = "no-evidence"


@dataclass
class PackageEntry:
    node_id: int
    span: Tuple[float, float]
    frames: List[int]
    text: str
    source: str
    score: float
    dedup_mode: str = "strict"

    def to_dict(self) -> dict:
        return {
            'node': self.node_id,
            'span': [self.span[0], self.span[1]],
            'frames': list(self.frames),
            'text': self.text,
            'source': self.source,
            'score': self.score,
        }


@dataclass
class EvidencePackage:
    entries: List[PackageEntry]
    facet_coverage: Dict[str, int] = field(default_factory=dict)

    @property
    def total_frames(self) -> int:
        return len({f for e in self.entries for f in e.frames})

    @property
    def node_ids(self) -> List[int]:
        return [e.node_id for e in self.entries]

    def to_dict(self) -> dict:
        return {
            'entries': [e.to_dict() for e in self.entries],
            'facet_coverage': dict(sorted(self.facet_coverage.items())),
        }


def facet_representatives(belief: np.ndarray, prior_channels: Optional[np.ndarray]) -> List[int]:
    """argmax_i prior_r[i] * F[i] per facet, duplicates dropped"""
    reps: List[int] = []
    if prior_channels is None:
        return reps
    for channel in np.asarray(prior_channels):
        i = int(np.argmax(channel * belief))
        if i not in reps:
            reps.append(i)
    return reps


def facet_coverage_map(belief: np.ndarray, prior_channels: np.ndarray, labels: Sequence[str]) -> Dict[str, int]:
    return {label: int(np.argmax(channel * belief))
            for label, channel in zip(labels, np.asarray(prior_channels))}


def graph_nms(belief: np.ndarray, prior_channels: Optional[np.ndarray], graph: AffinityGraph,
              m: int = 8, eta: float = 0.2) -> List[int]:
    """
    Greedy non-maximum suppression on the graph.

    Facet representatives go in first; then the highest remaining belief is
    taken until m nodes are held or nothing positive is left, and each pick
    scales its neighbors' scores by ``eta``. Returns nodes in pick order.
    """
    scores = np.array(belief, dtype=np.float64)
    k = scores.size
    if m > k:
        return list(range(k))

    selected = facet_representatives(scores, prior_channels)
    chosen = np.zeros(k, dtype=bool)
    chosen[selected] = True

    while len(selected) < m:
        masked = np.where(chosen, -np.inf, scores)
        i = int(np.argmax(masked))
        if masked[i] <= 0:
            break
        selected.append(i)
        chosen[i] = True
        neighbors, _ = graph.neighbors(i)
        scores[neighbors] *= eta
    return selected


def fallback_mode(values: np.ndarray, loop: LoopConfig) -> str:
    """'uniform' when evidence is weak, 'blend' when it is flat, else 'none'"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return "uniform"
    top, mean = float(values.max()), float(values.mean())
    if top < loop.fallback_max_threshold or mean < loop.fallback_mean_threshold:
        return "uniform"
    if top - float(values.min()) < loop.flat_gap_threshold:
        return "blend"
    return "none"


def apply_fallbacks(belief: np.ndarray, loop: Optional[LoopConfig] = None,
                    observed_scores: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Adjust the belief before selection.

    Statistics come from ``observed_scores`` when given (non-empty), else from
    the belief itself.
    """
    loop = loop or LoopConfig()
    f = np.asarray(belief, dtype=np.float64)
    stats = f if observed_scores is None or len(observed_scores) == 0 else np.asarray(observed_scores)
    mode = fallback_mode(stats, loop)
    uniform = np.full(f.size, 1.0 / f.size) if f.size else f.copy()
    if mode == "uniform":
        logger.info("⚠️ Weak evidence, falling back to uniform belief")
        return uniform
    if mode == "blend":
        logger.info("⚠️ Flat belief, blending with uniform")
        return 0.5 * f + 0.5 * uniform
    return f.copy()


def _unit_rows(embeddings: np.ndarray) -> np.ndarray:
    e = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(e, axis=1, keepdims=True)
    return e / np.where(norms > 0, norms, 1.0)


def _max_similarity(unit: np.ndarray, frame: int, kept: Sequence[int]) -> float:
    if not kept:
        return -1.0
    return float(np.max(unit[list(kept)] @ unit[frame]))


def package_evidence(selected: Sequence[int], nodes: Sequence[SegmentNode], observations: Mapping[int, object],
                     frame_embeddings: np.ndarray, belief: np.ndarray,
                     cfg: Optional[SelectionConfig] = None,
                     facet_coverage: Optional[Dict[str, int]] = None) -> EvidencePackage:
    """
    Frames and best text per selected segment, sorted by start time.

    Frame dedup runs package-wide at ``dedup_threshold``; nodes left with
    fewer than min(n_f, min_uniform_frames) frames retry at ``relaxed_dedup``;
    nodes still frameless take frames unlike their own at
    ``fallback_similarity``.
    """
    cfg = cfg or SelectionConfig()
    if not selected:
        raise EmptySelection("no segments selected")

    unique = list(dict.fromkeys(int(i) for i in selected))
    ordered = sorted(unique, key=lambda i: (nodes[i].start_time, i))
    allotment = cfg.n_f if len(ordered) <= cfg.m else max(1, (cfg.m * cfg.n_f) // len(ordered))
    unit = _unit_rows(frame_embeddings)

    candidates = {i: uniform_frame_indices(nodes[i].frame_range, allotment) for i in ordered}
    kept: Dict[int, List[int]] = {i: [] for i in ordered}
    modes = {i: "strict" for i in ordered}
    package_frames: List[int] = []

    for i in ordered:
        for f in candidates[i]:
            if _max_similarity(unit, f, package_frames) < cfg.dedup_threshold:
                kept[i].append(f)
                package_frames.append(f)

    for i in ordered:
        floor = min(allotment, cfg.min_uniform_frames, len(candidates[i]))
        if len(kept[i]) >= floor:
            continue
        for f in candidates[i]:
            if len(kept[i]) >= floor:
                break
            if f not in kept[i] and _max_similarity(unit, f, package_frames) < cfg.relaxed_dedup:
                kept[i].append(f)
                package_frames.append(f)
                modes[i] = "relaxed"

    for i in ordered:
        if kept[i]:
            continue
        for f in candidates[i]:
            if _max_similarity(unit, f, kept[i]) < cfg.fallback_similarity:
                kept[i].append(f)
        modes[i] = "fallback"
        logger.debug(f"Segment {i} keeps {len(kept[i])} frames via node-local fallback")

    entries = []
    for i in ordered:
        obs = observations.get(i)
        if obs is None:
            text, source = "", BELIEF_SELECTED
        else:
            item = obs.best_item()
            text, source = (item.text, item.source.value) if item is not None else ("", NO_EVIDENCE)
        entries.append(PackageEntry(
            node_id=i,
            span=(nodes[i].start_time, nodes[i].end_time),
            frames=sorted(kept[i]),
            text=text,
            source=source,
            score=float(belief[i]),
            dedup_mode=modes[i],
        ))
    return EvidencePackage(entries=entries, facet_coverage=dict(facet_coverage or {}))
