"""
Benchmark - Synthetic Planted-Clue Evaluation
=============================================

Generates videos as clustered segment features with a few planted clue
segments per facet (plus decoys that resemble the keyword but carry no
evidence), runs the loop variants against a scripted observer and reports
clue recall among the selected segments.
"""

import csv
import os
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .affinity_graph import AffinityGraph, build_graph
from .config import DetectiveConfig
from .detective_loop import Inspector, ObservationResult, run_session
from .error_handler import ConfigError
from .facets import Facet, QueryFacets, PriorChannels, merge_facets, option_letters, prior_scores
from .scoring import EvidenceItem, EvidenceSource
from .segmenter import SegmentNode
from .selection import apply_fallbacks, graph_nms

logger = logging.getLogger(__name__)

VARIANTS = ("full", "no_diffusion", "no_facets", "prior_only", "uniform")
UNIFORM_STREAM = 991
METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.txt"

BACKGROUND_CAPTION = "nothing relevant in view"


@dataclass
class BenchmarkInstance:
    seed: int
    features: np.ndarray
    center_times: np.ndarray
    clue_nodes: List[int]
    decoy_nodes: List[int]
    facets: QueryFacets
    keyword_vectors: Dict[str, np.ndarray]
    scenario: object
    _graphs: Dict[tuple, AffinityGraph] = field(default_factory=dict, repr=False)

    @property
    def k_nodes(self) -> int:
        return int(self.features.shape[0])

    def nodes(self) -> List[SegmentNode]:
        return [
            SegmentNode(id=i, frame_range=(i, i), center_time=float(t), feature=self.features[i],
                        start_time=float(t), end_time=float(t))
            for i, t in enumerate(self.center_times)
        ]

    def graph(self, cfg) -> AffinityGraph:
        key = (cfg.alpha, cfg.tau, cfg.top_k)
        if key not in self._graphs:
            self._graphs[key] = build_graph(list(self.features), self.center_times, cfg)
        return self._graphs[key]


class _KeywordEncoder:
    """Joint-space keyword vectors from the instance; text encoder never needed"""

    def __init__(self, vectors: Dict[str, np.ndarray]):
        self.vectors = vectors

    def embed_joint_texts(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.vectors[t] for t in texts])

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        raise ConfigError("benchmark facets carry no semantic descriptions")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_benchmark(seed: int, k: int = 120, clue_count: int = 6, noise: float = 0.1,
                       clusters: int = 2, decoys_per_cluster: int = 2, dim: int = 32,
                       clue_alignment: float = 0.45, decoy_alignment: float = 0.6,
                       spacing: float = 10.0) -> BenchmarkInstance:
    """
    One reproducible instance.

    Clue segments of a cluster share a latent direction (strong mutual
    similarity) and align weakly with the facet keyword; decoys align with
    the keyword more strongly but the observer scores them as background.
    """
    from providers.mock_providers import ObserverScenario, SceneScript

    if not 1 <= clue_count <= k:
        raise ConfigError(f"need 1 <= clue_count <= k, got clue_count={clue_count}, k={k}")
    if not 1 <= clusters <= clue_count:
        raise ConfigError(f"need 1 <= clusters <= clue_count, got {clusters}")
    if clue_count + clusters * decoys_per_cluster > k:
        raise ConfigError("not enough segments for the requested clues and decoys")
    if not 0.0 <= noise <= 1.0:
        raise ConfigError(f"noise must be in [0, 1], got {noise}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(k)
    clue_nodes = sorted(int(i) for i in order[:clue_count])
    decoy_nodes = [int(i) for i in order[clue_count:clue_count + clusters * decoys_per_cluster]]

    directions = [_unit(rng.standard_normal(dim)) for _ in range(clusters)]
    latents = [_unit(rng.standard_normal(dim)) for _ in range(clusters)]
    features = np.stack([_unit(rng.standard_normal(dim)) for _ in range(k)])

    labels = option_letters(clusters)
    spread = np.sqrt(1.0 - clue_alignment ** 2)
    scenes = {}
    for j, node in enumerate(clue_nodes):
        c = j % clusters
        features[node] = _unit(clue_alignment * directions[c] + spread * latents[c]
                               + 0.15 * _unit(rng.standard_normal(dim)))
        scenes[node] = SceneScript(caption=f"clue{c} clearly visible", needs_more_info=False,
                                   relevance=1.0, facet=labels[c])
    decoy_spread = np.sqrt(1.0 - decoy_alignment ** 2)
    for j, node in enumerate(decoy_nodes):
        c = j % clusters
        features[node] = _unit(decoy_alignment * directions[c]
                               + decoy_spread * _unit(rng.standard_normal(dim)))

    keywords = {f"clue{c}": directions[c] for c in range(clusters)}
    facets = QueryFacets(
        facets=[Facet(label=labels[c], keywords=[f"clue{c}"]) for c in range(clusters)],
        vlm_query="find the planted clues",
    )
    scenario = ObserverScenario(
        scenes=scenes,
        default=SceneScript(caption=BACKGROUND_CAPTION, needs_more_info=True, relevance=0.0),
        noise=noise,
        seed=seed,
    )
    return BenchmarkInstance(
        seed=seed,
        features=features,
        center_times=np.arange(k, dtype=np.float64) * spacing + spacing / 2.0,
        clue_nodes=clue_nodes,
        decoy_nodes=decoy_nodes,
        facets=facets,
        keyword_vectors=keywords,
        scenario=scenario,
    )


class ScriptedInspector(Inspector):
    """Scores straight from the planted relevance of the scenario"""

    def __init__(self, scenario, facets: QueryFacets):
        from providers.mock_providers import MockObserver

        self.observer = MockObserver(scenario)
        self.labels = facets.labels

    def inspect(self, node_id: int, facet_index: int) -> ObservationResult:
        script = self.observer.script_for(node_id)
        relevance = self.observer.planted_relevance(node_id)
        if script.facet is None:
            facet_scores = [relevance] * len(self.labels)
        else:
            facet_scores = [0.0] * len(self.labels)
            own = self.labels.index(script.facet) if script.facet in self.labels else 0
            facet_scores[own] = relevance
        return ObservationResult(
            node_id=node_id,
            caption=script.caption,
            needs_more_info=bool(script.needs_more_info),
            evidence=[EvidenceItem(EvidenceSource.CAPTION, script.caption, node_id)],
            score=relevance,
            best_facet=int(np.argmax(facet_scores)),
            facet_scores=facet_scores,
            item_scores=[relevance],
        )


@dataclass
class VariantOutcome:
    seed: int
    variant: str
    recall: float
    efficiency: float
    first_clue_iteration: int
    selected: List[int]

    def to_row(self) -> dict:
        return {
            'seed': self.seed,
            'variant': self.variant,
            'recall': round(self.recall, 6),
            'efficiency': round(self.efficiency, 6),
            'first_clue_iteration': self.first_clue_iteration,
        }


def instance_prior(instance: BenchmarkInstance, facets: QueryFacets, alpha_route: float) -> PriorChannels:
    encoder = _KeywordEncoder(instance.keyword_vectors)
    return prior_scores(facets, instance.nodes(), [""] * instance.k_nodes, encoder, encoder, alpha_route)


def run_variant(instance: BenchmarkInstance, variant: str, cfg: Optional[DetectiveConfig] = None,
                graph: Optional[AffinityGraph] = None) -> VariantOutcome:
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant '{variant}', expected one of {', '.join(VARIANTS)}")
    cfg = cfg or DetectiveConfig()
    clues = set(instance.clue_nodes)
    budget = cfg.loop.base_budget

    if variant == "uniform":
        rng = np.random.default_rng([instance.seed, UNIFORM_STREAM])
        selected = sorted(int(i) for i in rng.choice(instance.k_nodes,
                                                     size=min(cfg.selection.m, instance.k_nodes),
                                                     replace=False))
        recall = len(clues.intersection(selected)) / len(clues)
        return VariantOutcome(instance.seed, variant, recall, 0.0, budget + 1, selected)

    graph = graph or instance.graph(cfg.graph)
    facets = merge_facets(instance.facets) if variant == "no_facets" else instance.facets
    prior = instance_prior(instance, facets, cfg.facets.alpha_route)
    session = run_session(
        graph, facets, prior, ScriptedInspector(instance.scenario, facets),
        cfg.loop, cfg.diffusion, num_options=0,
        use_diffusion=variant != "no_diffusion",
        prior_only=variant == "prior_only",
    )
    adjusted = apply_fallbacks(session.state.belief, cfg.loop, session.observed_scores)
    selected = graph_nms(adjusted, prior.channels, graph, cfg.selection.m, cfg.selection.eta)

    anchors = [r.anchor for r in session.trace]
    found = [r.iteration for r in session.trace if r.anchor in clues]
    return VariantOutcome(
        seed=instance.seed,
        variant=variant,
        recall=len(clues.intersection(selected)) / len(clues),
        efficiency=sum(1 for a in anchors if a in clues) / session.budget,
        first_clue_iteration=found[0] if found else session.budget + 1,
        selected=sorted(selected),
    )


@dataclass
class BenchmarkReport:
    outcomes: List[VariantOutcome]
    variants: List[str]

    def by_variant(self, variant: str) -> List[VariantOutcome]:
        return [o for o in self.outcomes if o.variant == variant]

    def mean(self, variant: str, metric: str = "recall") -> float:
        values = [getattr(o, metric) for o in self.by_variant(variant)]
        return float(np.mean(values)) if values else float("nan")

    def paired_difference(self, a: str, b: str, metric: str = "recall") -> float:
        """Mean over seeds of metric(a) - metric(b)"""
        left = {o.seed: getattr(o, metric) for o in self.by_variant(a)}
        right = {o.seed: getattr(o, metric) for o in self.by_variant(b)}
        seeds = sorted(set(left) & set(right))
        return float(np.mean([left[s] - right[s] for s in seeds])) if seeds else float("nan")

    def summary(self) -> str:
        lines = [f"{'variant':<14}{'recall':>10}{'efficiency':>12}{'first_clue':>12}"]
        for v in self.variants:
            lines.append(f"{v:<14}{self.mean(v):>10.4f}{self.mean(v, 'efficiency'):>12.4f}"
                         f"{self.mean(v, 'first_clue_iteration'):>12.2f}")
        if "full" in self.variants:
            for other in ("no_diffusion", "prior_only"):
                if other in self.variants:
                    lines.append(f"paired recall full - {other}: {self.paired_difference('full', other):+.4f}")
        return "\n".join(lines)

    def write(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, METRICS_FILE), 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=["seed", "variant", "recall", "efficiency",
                                                   "first_clue_iteration"])
            writer.writeheader()
            for outcome in self.outcomes:
                writer.writerow(outcome.to_row())
        with open(os.path.join(out_dir, SUMMARY_FILE), 'w', encoding='utf-8') as f:
            f.write(self.summary() + "\n")
        logger.info(f"📊 Benchmark results written to {out_dir}")


def evaluate(instances: Sequence[BenchmarkInstance], variants: Sequence[str] = VARIANTS,
             cfg: Optional[DetectiveConfig] = None, workers: int = 4,
             out_dir: Optional[str] = None) -> BenchmarkReport:
    """Run every variant on every instance; instances run concurrently"""
    if not instances:
        raise ConfigError("evaluate needs at least one instance")
    variants = list(variants)
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant '{v}'")
    cfg = cfg or DetectiveConfig()

    def run_instance(instance: BenchmarkInstance) -> List[VariantOutcome]:
        return [run_variant(instance, v, cfg) for v in variants]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run_instance, instances))

    outcomes = [o for per_instance in results for o in per_instance]
    report = BenchmarkReport(outcomes=outcomes, variants=variants)
    logger.info(f"Benchmark over {len(instances)} instances:\n{report.summary()}")
    if out_dir:
        report.write(out_dir)
    return report
