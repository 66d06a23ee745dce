"""
Providers Module - External Model Boundary
==========================================

Planner, observer, timeline, encoder and answerer calls behind one
backend interface, with retry, caching and usage accounting.
"""

from .base_provider import ProviderBackend, ProviderSuite, AnswerResult, parse_final_answer
from .mock_providers import MockProviderBackend, ObserverScenario, SceneScript, hash_embedding
from .http_provider import HttpProviderBackend
from .factory import ProviderFactory
from .token_ledger import TokenLedger
from .response_cache import ResponseCache

__all__ = [
    "ProviderBackend", "ProviderSuite", "AnswerResult", "parse_final_answer",
    "MockProviderBackend", "ObserverScenario", "SceneScript", "hash_embedding",
    "HttpProviderBackend", "ProviderFactory", "TokenLedger", "ResponseCache",
]
