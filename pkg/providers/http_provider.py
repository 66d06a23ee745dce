"""
HTTP Provider - Remote Provider Backend
=======================================

Posts provider requests as JSON to ``{base_url}/{endpoint}``. The reference
server in ``provider_server.py`` speaks the same protocol.
"""

import os
import logging
from typing import Any, Dict, Optional

import httpx

from core.detective_types import Endpoint
from core.error_handler import ProviderError, ResponseFormatError
from .base_provider import ProviderBackend

logger = logging.getLogger(__name__)

PROVIDER_URL_ENV = "DETECTIVE_PROVIDER_URL"
API_KEY_ENV = "DETECTIVE_API_KEY"


class HttpProviderBackend(ProviderBackend):
    name = "http"

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        observer_timeout: float = 300.0,
        default_timeout: float = 60.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        base_url = base_url or os.getenv(PROVIDER_URL_ENV)
        if not base_url:
            raise ProviderError(f"no provider URL configured (set {PROVIDER_URL_ENV})")
        api_key = api_key if api_key is not None else os.getenv(API_KEY_ENV)

        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.observer_timeout = observer_timeout
        self.default_timeout = default_timeout
        self.client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers, transport=transport)
        logger.info(f"🌐 HTTP provider backend at {base_url}")

    def _timeout(self, endpoint: str) -> float:
        if endpoint == Endpoint.OBSERVE.value:
            return self.observer_timeout
        return self.default_timeout

    def call(self, endpoint: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        try:
            response = self.client.post(f"/{endpoint}", json=payload, timeout=self._timeout(endpoint))
        except httpx.HTTPError as e:
            raise ProviderError(f"{endpoint} request failed: {e}", context={'endpoint': endpoint}) from e

        if response.status_code >= 400:
            raise ProviderError(
                f"{endpoint} returned HTTP {response.status_code}",
                context={'endpoint': endpoint, 'status': response.status_code, 'body': response.text[:200]},
            )
        try:
            data = response.json()
        except ValueError as e:
            raise ResponseFormatError(f"{endpoint} reply is not JSON") from e
        if not isinstance(data, dict):
            raise ResponseFormatError(f"{endpoint} reply is not a JSON object")
        return data

    def close(self):
        self.client.close()
