"""
Pipeline - End-to-End Query Orchestration
=========================================

segment -> graph -> decompose -> timeline -> priors -> loop -> fallbacks
-> Graph-NMS -> package -> answer, with every artifact written to the
output directory.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from .affinity_graph import build_graph, spectral_radius
from .bundle import FeatureBundle, load_bundle
from .config import DetectiveConfig, load_config
from .detective_loop import EvidenceInspector, SessionResult, run_session
from .error_handler import ProviderError
from .facets import (
    QueryFacets, EventTimeline, assign_timeline_to_nodes, prior_scores
)
from .scoring import CachedTextEncoder, IdfTable
from .segmenter import SegmentNode, segment_frames, uniform_frame_indices
from .selection import (
    EvidencePackage, apply_fallbacks, facet_coverage_map, fallback_mode, graph_nms, package_evidence
)
from .session_trace import (
    ArtifactWriter, normalize_floats, ANSWER_FILE, PACKAGE_FILE, LEDGER_FILE
)

logger = logging.getLogger(__name__)

GRAPH_FILE = "graph.json"


@dataclass
class QueryResult:
    query: str
    options: List[str]
    video_id: str
    answer: Any
    package: EvidencePackage
    session: SessionResult
    facets: QueryFacets
    nodes: List[SegmentNode]
    fallback: str
    ledger: Any

    def answer_record(self) -> Dict[str, Any]:
        return {
            'video_id': self.video_id,
            'query': self.query,
            'options': list(self.options),
            'answer': self.answer.letter,
            'status': self.answer.status,
            'raw': self.answer.raw,
            'facets': self.facets.labels,
            'observations': self.session.observation_count,
            'budget': self.session.budget,
            'fallback': self.fallback,
            'selected': self.package.node_ids,
        }


def segment_bundle(bundle: FeatureBundle, cfg: DetectiveConfig):
    nodes = segment_frames(bundle.frames(), cfg.segmenter.theta_sim, cfg.segmenter.l_min)
    graph = build_graph([n.feature for n in nodes], [n.center_time for n in nodes], cfg.graph)
    logger.info(f"🕸️ Graph: {graph.k_nodes} segments, {graph.nnz} edges")
    return nodes, graph


def load_idf(cfg: DetectiveConfig) -> IdfTable:
    if cfg.scoring.idf_path:
        return IdfTable.from_file(cfg.scoring.idf_path, cfg.scoring.default_idf)
    return IdfTable.load_default(cfg.scoring.default_idf)


def event_timeline(suite, bundle: FeatureBundle, cfg: DetectiveConfig) -> EventTimeline:
    """Timeline over frames sampled across the whole video; empty if the provider fails"""
    indices = uniform_frame_indices((0, bundle.frame_count - 1), cfg.facets.timeline_frames)
    times = [float(bundle.timestamps[i]) for i in indices]
    try:
        return suite.timeline(bundle.frame_refs(indices), times, bundle.header.duration_s)
    except ProviderError as e:
        logger.warning(f"⚠️ Timeline unavailable, continuing without descriptions: {e}")
        return EventTimeline()


def _create_backend(bundle: FeatureBundle, cfg: DetectiveConfig, mock: bool):
    from providers.factory import ProviderFactory
    from providers.mock_providers import ObserverScenario

    if mock:
        scenario = ObserverScenario.model_validate(bundle.scenario or {})
        return ProviderFactory.create_mock(scenario, dim=bundle.header.feature_dim)
    return ProviderFactory.create_http(cfg)


def run_query(bundle_path: str, query: str, options: Optional[Sequence[str]] = None,
              config_path: Optional[str] = None, overrides: Optional[List[str]] = None,
              mock: bool = False, out_dir: Optional[str] = None, backend=None,
              cache_dir: Optional[str] = None, **suite_kwargs) -> QueryResult:
    """
    Answer one question about one video bundle.

    Config is validated before any provider is contacted. ``backend``
    overrides the mock/HTTP choice (tests inject flaky or counting backends).
    """
    from providers.factory import ProviderFactory

    cfg = load_config(config_path, overrides)
    options = [o.strip() for o in (options or []) if o.strip()]
    bundle = load_bundle(bundle_path)
    nodes, graph = segment_bundle(bundle, cfg)

    own_backend = backend is None
    backend = backend or _create_backend(bundle, cfg, mock)
    suite = ProviderFactory.create_suite(backend, cfg, embedding_dim=bundle.header.feature_dim,
                                         cache_dir=cache_dir, **suite_kwargs)
    try:
        facets = suite.plan(query, options)
        logger.info(f"🧩 Facets: {', '.join(facets.labels)}")
        timeline = event_timeline(suite, bundle, cfg)
        descriptions = assign_timeline_to_nodes(timeline, nodes)

        encoder = CachedTextEncoder(suite)
        prior = prior_scores(facets, nodes, descriptions, suite, encoder, cfg.facets.alpha_route)
        inspector = EvidenceInspector(suite, bundle, nodes, facets, load_idf(cfg), encoder,
                                      cfg.loop.window_frames, cfg.scoring, query)
        session = run_session(graph, facets, prior, inspector, cfg.loop, cfg.diffusion, len(options))

        belief = session.state.belief
        observed = session.observed_scores
        fallback = fallback_mode(observed if observed.size else belief, cfg.loop)
        adjusted = apply_fallbacks(belief, cfg.loop, observed)
        selected = graph_nms(adjusted, prior.channels, graph, cfg.selection.m, cfg.selection.eta)
        coverage = facet_coverage_map(adjusted, prior.channels, facets.labels)
        package = package_evidence(selected, nodes, session.observations, bundle.embeddings,
                                   belief, cfg.selection, coverage)
        logger.info(f"📦 Package: {len(package.entries)} segments, {package.total_frames} frames")

        answer = suite.answer(normalize_floats(package.to_dict()), query, options)
        logger.info(f"🎯 Answer: {answer.letter or answer.status}")
    finally:
        if own_backend:
            suite.close()

    result = QueryResult(
        query=query, options=options, video_id=bundle.video_id, answer=answer,
        package=package, session=session, facets=facets, nodes=nodes,
        fallback=fallback, ledger=suite.ledger,
    )
    if out_dir:
        write_artifacts(result, out_dir)
    return result


def write_artifacts(result: QueryResult, out_dir: str):
    writer = ArtifactWriter(out_dir)
    writer.write_json(ANSWER_FILE, result.answer_record())
    writer.write_json(PACKAGE_FILE, result.package.to_dict())
    writer.write_trace(r.to_dict() for r in result.session.trace)
    writer.write_beliefs(result.session.belief_snapshots)
    writer.write_json(LEDGER_FILE, result.ledger.to_dict())
    logger.info(f"💾 Artifacts written to {out_dir}")


def inspect_graph(bundle_path: str, config_path: Optional[str] = None,
                  overrides: Optional[List[str]] = None, out_dir: Optional[str] = None) -> Dict[str, Any]:
    """Segment and build the graph only; no provider is involved"""
    cfg = load_config(config_path, overrides)
    bundle = load_bundle(bundle_path)
    nodes, graph = segment_bundle(bundle, cfg)
    record = {
        'video_id': bundle.video_id,
        'nodes': [n.to_dict() for n in nodes],
        'graph': graph.to_record(),
        'spectral_radius': spectral_radius(graph.w_norm),
    }
    if out_dir:
        ArtifactWriter(out_dir).write_json(GRAPH_FILE, record)
    return record
