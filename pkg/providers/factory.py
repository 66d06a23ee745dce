"""
Provider Factory
================

Builds provider backends and the ProviderSuite wired to a DetectiveConfig.
"""

import os
import logging
from typing import Optional

from dotenv import load_dotenv

from core.config import DetectiveConfig
from core.error_handler import RetryConfig
from .base_provider import ProviderBackend, ProviderSuite
from .http_provider import HttpProviderBackend
from .mock_providers import MockProviderBackend, ObserverScenario, DEFAULT_DIM
from .prompts import PromptLibrary
from .response_cache import ResponseCache
from .token_ledger import TokenLedger

load_dotenv()

logger = logging.getLogger(__name__)

CACHE_DIR_ENV = "DETECTIVE_CACHE_DIR"


class ProviderFactory:
    """Factory for provider backends and suites"""

    @staticmethod
    def create_mock(scenario: Optional[ObserverScenario] = None, dim: int = DEFAULT_DIM) -> MockProviderBackend:
        return MockProviderBackend(scenario=scenario, dim=dim)

    @staticmethod
    def create_http(cfg: DetectiveConfig, base_url: Optional[str] = None, transport=None) -> HttpProviderBackend:
        return HttpProviderBackend(
            base_url=base_url,
            observer_timeout=cfg.providers.observer_timeout,
            default_timeout=cfg.providers.default_timeout,
            transport=transport,
        )

    @staticmethod
    def create_suite(
        backend: ProviderBackend,
        cfg: DetectiveConfig,
        embedding_dim: Optional[int] = None,
        cache_dir: Optional[str] = None,
        ledger: Optional[TokenLedger] = None,
        **kwargs,
    ) -> ProviderSuite:
        """
        Wrap a backend with retry, caching and accounting from config.

        The cache directory comes from the argument, then
        ``providers.cache_dir``, then $DETECTIVE_CACHE_DIR; caching is off
        when none is set or ``providers.cache_enabled`` is false.
        """
        p = cfg.providers
        cache = None
        if p.cache_enabled:
            directory = cache_dir or p.cache_dir or os.getenv(CACHE_DIR_ENV)
            if directory:
                cache = ResponseCache(directory)
                logger.info(f"💾 Provider cache at {directory}")
        return ProviderSuite(
            backend,
            policy=RetryConfig.from_config(p),
            cache=cache,
            ledger=ledger,
            prompts=PromptLibrary(),
            embedding_dim=embedding_dim,
            temperature=p.temperature,
            vlm_max_tokens=p.vlm_max_tokens,
            llm_max_tokens=p.llm_max_tokens,
            answer_criteria=p.answer_criteria,
            **kwargs,
        )
