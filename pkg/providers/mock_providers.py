"""
Mock Providers - Deterministic Test Doubles
===========================================

Scripted planner, observer, timeline generator, answerer and hash-based
encoders. Every response is a pure function of (request, scenario, seed),
so end-to-end runs are byte-stable without any external service.

Scenario layout (``scenario.json`` in a bundle, or built in code)::

    {"scenes": {"<segment id>": {"caption": ..., "needs_more_info": null|bool,
                                 "missing_visual_keyword": ..., "relevance": 0.0,
                                 "facet": null|"A", "span": [start_s, end_s]}},
     "default": {...}, "noise": 0.0, "seed": 0,
     "planner": null|{...planner JSON...},
     "joint_overrides": {"keyword": [floats]}}
"""

import hashlib
import json
import logging
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from core.detective_types import (
    ObserverRequest, ObserverResponse, RefinementPlan, PlannerResponse, Endpoint
)
from core.error_handler import ProviderError
from core.facets import option_letters
from core.scoring import tokenize, content_words
from .base_provider import ProviderBackend

logger = logging.getLogger(__name__)

DEFAULT_DIM = 64


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int, namespace: str) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(f"{namespace}:{token}".encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def hash_embedding(text: str, dim: int = DEFAULT_DIM, namespace: str = "") -> np.ndarray:
    """Sum of per-token pseudo-random unit vectors, normalized"""
    tokens = tokenize(text) or ["<empty>"]
    total = np.zeros(dim)
    for token in tokens:
        total += _token_vector(token, dim, namespace)
    norm = np.linalg.norm(total)
    if norm < 1e-12:
        return np.array(_token_vector(tokens[0], dim, namespace))
    return total / norm


class SceneScript(BaseModel):
    caption: str = ""
    needs_more_info: Optional[bool] = None
    missing_visual_keyword: str = ""
    relevance: float = Field(0.0, ge=0.0, le=1.0)
    facet: Optional[str] = None
    span: Optional[List[float]] = None


class ObserverScenario(BaseModel):
    scenes: Dict[int, SceneScript] = {}
    default: SceneScript = Field(default_factory=lambda: SceneScript(
        caption="an unremarkable scene with nothing specific in view",
        needs_more_info=True,
    ))
    noise: float = Field(0.0, ge=0.0, le=1.0)
    seed: int = 0
    planner: Optional[Dict[str, Any]] = None
    joint_overrides: Dict[str, List[float]] = {}


def _mentions(caption: str, keywords: Sequence[str]) -> bool:
    caption_tokens = set(tokenize(caption))
    return any(set(tokenize(k)) and set(tokenize(k)) <= caption_tokens for k in keywords)


class MockObserver:
    """Answers observation requests from the scenario script"""

    def __init__(self, scenario: Optional[ObserverScenario] = None):
        self.scenario = scenario or ObserverScenario()

    def script_for(self, segment_id: Optional[int]) -> SceneScript:
        if segment_id is None:
            return self.scenario.default
        return self.scenario.scenes.get(segment_id, self.scenario.default)

    def planted_relevance(self, segment_id: int) -> float:
        """Scripted relevance perturbed by seeded noise: down for clues, up for others"""
        script = self.script_for(segment_id)
        u = float(np.random.default_rng([self.scenario.seed, segment_id]).random())
        if script.facet is not None:
            value = script.relevance - self.scenario.noise * u
        else:
            value = script.relevance + self.scenario.noise * u
        return float(np.clip(value, 0.0, 1.0))

    def respond(self, request: ObserverRequest) -> ObserverResponse:
        script = self.script_for(request.segment_id)
        needs_more = script.needs_more_info
        if needs_more is None:
            needs_more = not _mentions(script.caption, request.focus_keywords)
        missing = script.missing_visual_keyword
        if needs_more and not missing and request.focus_keywords:
            missing = request.focus_keywords[0]
        return ObserverResponse(
            reasoning=f"Observed {len(request.frames)} frames of segment {request.segment_id}.",
            caption=script.caption,
            refinement_plan=RefinementPlan(
                needs_more_info=needs_more,
                missing_visual_keyword=missing if needs_more else "",
            ),
        )


class MockPlanner:
    """Keywords from content words; semantic queries from the option texts"""

    def __init__(self, script: Optional[Dict[str, Any]] = None):
        self.script = script

    def respond(self, query: str, options: Sequence[str]) -> str:
        if self.script is not None:
            return json.dumps(self.script, sort_keys=True)
        letters = option_letters(len(options))
        plan = PlannerResponse(
            query_keywords=content_words(query),
            option_keywords={l: content_words(o) for l, o in zip(letters, options)},
            semantic_queries={l: o.strip() for l, o in zip(letters, options)},
            general_semantic_query=query.strip(),
            temporal_plan="scan the whole video",
            vlm_query=query.strip(),
        )
        return plan.model_dump_json()


class MockTimeline:
    """Timeline events from scripted scene spans"""

    def __init__(self, scenario: ObserverScenario):
        self.scenario = scenario

    def respond(self) -> str:
        events = [
            {"start": s.span[0], "end": s.span[1], "description": s.caption}
            for _, s in sorted(self.scenario.scenes.items())
            if s.span and s.caption
        ]
        return json.dumps(events)


class MockAnswerer:
    """Picks the option sharing most terms with the package text (ties: lowest letter)"""

    def respond(self, package: Dict[str, Any], options: Sequence[str]) -> str:
        entries = package.get("entries", [])
        evidence_terms = set()
        for entry in entries:
            evidence_terms.update(tokenize(entry.get("text", "")))
        if not options:
            texts = [e.get("text", "") for e in entries if e.get("text")]
            return f"Answer: {texts[0] if texts else 'insufficient evidence'}"

        hits = [len(set(tokenize(o)) & evidence_terms) for o in options]
        best = int(np.argmax(hits))
        letter = option_letters(len(options))[best]
        return (
            f"Analysis: option {letter} shares {hits[best]} term(s) with the evidence.\n"
            f"Final Answer: {letter}\n"
            f"Reason: strongest textual match."
        )


class MockProviderBackend(ProviderBackend):
    """In-process backend serving every endpoint from the mocks above"""

    name = "mock"

    def __init__(self, scenario: Optional[ObserverScenario] = None, dim: int = DEFAULT_DIM):
        self.scenario = scenario or ObserverScenario()
        self.dim = dim
        self.planner = MockPlanner(self.scenario.planner)
        self.observer = MockObserver(self.scenario)
        self.timeline = MockTimeline(self.scenario)
        self.answerer = MockAnswerer()
        self._joint = {k: np.asarray(v, dtype=np.float64) for k, v in self.scenario.joint_overrides.items()}

    def _dim(self, payload: Dict[str, Any]) -> int:
        return int(payload.get("dim") or self.dim)

    def embed_joint(self, text: str, dim: int) -> np.ndarray:
        if text in self._joint:
            v = self._joint[text]
            return v / np.linalg.norm(v)
        return hash_embedding(text, dim)

    def call(self, endpoint: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        if endpoint == Endpoint.PLAN.value:
            return {"content": self.planner.respond(payload.get("query", ""), payload.get("options", []))}
        if endpoint == Endpoint.OBSERVE.value:
            request = ObserverRequest.model_validate(payload)
            return {"content": self.observer.respond(request).model_dump_json()}
        if endpoint == Endpoint.TIMELINE.value:
            return {"content": self.timeline.respond()}
        if endpoint == Endpoint.EMBED_TEXT.value:
            dim = self._dim(payload)
            return {"embeddings": [hash_embedding(t, dim).tolist() for t in payload.get("texts", [])]}
        if endpoint == Endpoint.EMBED_JOINT.value:
            dim = self._dim(payload)
            return {"embeddings": [self.embed_joint(t, dim).tolist() for t in payload.get("texts", [])]}
        if endpoint == Endpoint.ANSWER.value:
            return {"content": self.answerer.respond(payload.get("package", {}), payload.get("options", []))}
        raise ProviderError(f"mock backend has no endpoint '{endpoint}'")
