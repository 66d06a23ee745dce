"""
Base Provider - Provider Boundary for the Detective Engine
==========================================================

A ProviderBackend answers raw JSON requests on the endpoints
plan / observe / timeline / embed_text / embed_joint / answer.
ProviderSuite wraps a backend with the response cache, retry policy,
response parsing and the token ledger, and exposes typed methods.
"""

import json
import re
import time
import random
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from core.detective_types import Endpoint, ObserverResponse, ChatReply, EmbeddingReply
from core.error_handler import (
    RetryConfig, call_with_retry, ProviderError, ResponseFormatError, ParseError
)
from core.facets import QueryFacets, EventTimeline, parse_decomposition, parse_timeline, extract_json_block
from .prompts import PromptLibrary, render_frame_info
from .response_cache import ResponseCache, canonical_json
from .token_ledger import TokenLedger

logger = logging.getLogger(__name__)

_FINAL_ANSWER_RE = re.compile(r"final\s+answer\s*[:：]\s*\**\s*([A-Za-z])\b", re.IGNORECASE)
_STANDALONE_LETTER_RE = re.compile(r"(?<![A-Za-z])([A-Z])(?![A-Za-z])")
DEFAULT_OPTION_LETTERS = "ABCD"


class ProviderBackend(ABC):
    """Transport for provider requests"""

    name = "backend"

    @abstractmethod
    def call(self, endpoint: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        """
        Send one request.

        Chat endpoints reply ``{"content": str}``; embedding endpoints reply
        ``{"embeddings": [[float, ...], ...]}``.
        """
        pass

    def close(self):
        pass


@dataclass
class AnswerResult:
    raw: str
    letter: Optional[str]
    status: str


def parse_final_answer(raw: str, allowed: Optional[Sequence[str]] = None) -> str:
    """Letter from the "Final Answer:" line, else a standalone capital letter"""
    if not raw or not raw.strip():
        raise ParseError("empty answer text")
    allowed_set = {a.upper() for a in allowed} if allowed else None

    for match in _FINAL_ANSWER_RE.finditer(raw):
        letter = match.group(1).upper()
        if allowed_set is None or letter in allowed_set:
            return letter
    standalone = allowed_set or set(DEFAULT_OPTION_LETTERS)
    for match in _STANDALONE_LETTER_RE.finditer(raw):
        if match.group(1) in standalone:
            return match.group(1)
    raise ParseError("no option letter found in answer", context={'raw': raw[:200]})


def _chat_content(response: Dict[str, Any]) -> str:
    try:
        return ChatReply.model_validate(response).content
    except ValidationError as e:
        raise ResponseFormatError(f"chat reply lacks 'content': {e}") from e


def parse_observation(raw: str) -> ObserverResponse:
    try:
        data = json.loads(extract_json_block(raw))
    except (json.JSONDecodeError, TypeError) as e:
        raise ResponseFormatError(f"observer output is not JSON: {e}") from e
    if not isinstance(data, dict):
        raise ResponseFormatError("observer output must be a JSON object")
    try:
        return ObserverResponse.model_validate(data)
    except ValidationError as e:
        raise ResponseFormatError(f"observer output does not match schema: {e}") from e


def parse_embeddings(response: Dict[str, Any], expected: int) -> np.ndarray:
    try:
        reply = EmbeddingReply.model_validate(response)
    except ValidationError as e:
        raise ResponseFormatError(f"embedding reply malformed: {e}") from e
    vectors = np.asarray(reply.embeddings, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != expected:
        raise ResponseFormatError(f"expected {expected} embeddings, got shape {vectors.shape}")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(~np.isfinite(norms)) or np.any(norms == 0):
        raise ResponseFormatError("embedding reply holds zero or non-finite vectors")
    return vectors / norms[:, None]


class ProviderSuite:
    """Typed provider calls: cache -> retry -> parse -> ledger"""

    RETRYABLE = (ProviderError, OSError)

    def __init__(
        self,
        backend: ProviderBackend,
        policy: Optional[RetryConfig] = None,
        cache: Optional[ResponseCache] = None,
        ledger: Optional[TokenLedger] = None,
        prompts: Optional[PromptLibrary] = None,
        embedding_dim: Optional[int] = None,
        temperature: float = 0.0,
        vlm_max_tokens: int = 4096,
        llm_max_tokens: int = 2048,
        answer_criteria: str = "correct",
        sleep: Callable[[float], None] = time.sleep,
        rng: Optional[random.Random] = None,
    ):
        self.backend = backend
        self.policy = policy or RetryConfig()
        self.cache = cache
        self.ledger = ledger or TokenLedger()
        self.prompts = prompts or PromptLibrary()
        self.embedding_dim = embedding_dim
        self.temperature = temperature
        self.vlm_max_tokens = vlm_max_tokens
        self.llm_max_tokens = llm_max_tokens
        self.answer_criteria = answer_criteria
        self._sleep = sleep
        self._rng = rng

    def _request(self, endpoint: Endpoint, payload: Dict[str, Any], parse: Callable[[Dict[str, Any]], Any]) -> Any:
        name = endpoint.value
        key = None
        if self.cache is not None:
            key = ResponseCache.key(name, payload)
            cached = self.cache.get(name, key)
            if cached is not None:
                try:
                    parsed = parse(cached)
                    self.ledger.record_cache_hit(name)
                    return parsed
                except ProviderError as e:
                    logger.warning(f"Cached {name} response no longer parses ({e}); refetching")

        def attempt():
            self.ledger.record_attempt(name)
            response = self.backend.call(name, payload)
            if not isinstance(response, dict):
                raise ResponseFormatError(f"{name} reply is not a JSON object")
            return response, parse(response)

        response, parsed = call_with_retry(
            attempt, self.policy, exceptions=self.RETRYABLE,
            sleep=self._sleep, rng=self._rng, label=f"{self.backend.name}/{name}"
        )
        self.ledger.record_call(name, len(canonical_json(payload)), len(canonical_json(response)))
        if self.cache is not None:
            self.cache.put(name, key, response)
        return parsed

    def _chat_payload(self, system: str, user: str, max_tokens: int, **fields: Any) -> Dict[str, Any]:
        payload = {
            'system': system,
            'user': user,
            'temperature': self.temperature,
            'max_tokens': max_tokens,
        }
        payload.update(fields)
        return payload

    # --- planner ---

    def plan(self, query: str, options: Optional[Sequence[str]] = None) -> QueryFacets:
        system, user = self.prompts.planner(query, options)
        payload = self._chat_payload(system, user, self.llm_max_tokens,
                                     query=query, options=list(options or []))
        return self._request(
            Endpoint.PLAN, payload,
            lambda r: parse_decomposition(_chat_content(r), query, options)
        )

    # --- observer ---

    def observe(self, frames: List[Dict[str, Any]], query: str, focus_keywords: Sequence[str],
                focus_semantic_queries: Sequence[str], segment_id: Optional[int] = None) -> ObserverResponse:
        system, user = self.prompts.observer(query, focus_keywords, focus_semantic_queries)
        payload = self._chat_payload(
            system, user, self.vlm_max_tokens,
            frames=frames, query=query,
            focus_keywords=list(focus_keywords),
            focus_semantic_queries=list(focus_semantic_queries),
            segment_id=segment_id,
        )
        return self._request(Endpoint.OBSERVE, payload, lambda r: parse_observation(_chat_content(r)))

    # --- timeline ---

    def timeline(self, frames: List[Dict[str, Any]], frame_times: Sequence[float],
                 duration: float) -> EventTimeline:
        system, user = self.prompts.timeline(duration, frame_times)
        payload = self._chat_payload(system, user, self.vlm_max_tokens,
                                     frames=frames, duration=duration)
        return self._request(Endpoint.TIMELINE, payload, lambda r: parse_timeline(_chat_content(r), duration))

    # --- encoders ---

    def _embed(self, endpoint: Endpoint, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.embedding_dim or 0))
        payload = {'texts': texts, 'dim': self.embedding_dim}
        return self._request(endpoint, payload, lambda r: parse_embeddings(r, len(texts)))

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Semantic text encoder"""
        return self._embed(Endpoint.EMBED_TEXT, texts)

    def embed_joint_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Text tower of the joint image-text encoder (frame embedding space)"""
        return self._embed(Endpoint.EMBED_JOINT, texts)

    # --- answerer ---

    def answer(self, package: Dict[str, Any], query: str,
               options: Optional[Sequence[str]] = None) -> AnswerResult:
        system, user = self.prompts.answer(render_frame_info(package), query, options, self.answer_criteria)
        payload = self._chat_payload(system, user, self.llm_max_tokens,
                                     query=query, options=list(options or []), package=package)
        raw = self._request(Endpoint.ANSWER, payload, _chat_content)
        if not options:
            return AnswerResult(raw=raw, letter=None, status="free-form")
        try:
            letter = parse_final_answer(raw, [chr(ord('A') + i) for i in range(len(options))])
            return AnswerResult(raw=raw, letter=letter, status="answered")
        except ParseError as e:
            logger.warning(f"⚠️ Could not parse an option letter: {e}")
            return AnswerResult(raw=raw, letter=None, status="unanswered")

    def close(self):
        self.backend.close()
