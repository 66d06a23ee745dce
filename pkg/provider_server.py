"""Detective Provider Server - reference provider endpoints over HTTP (mock-backed)"""
import argparse
import json
import logging
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from fastapi import Body, FastAPI, HTTPException

from core.detective_types import Endpoint
from core.error_handler import ProviderError, configure_logging
from providers.base_provider import ProviderBackend
from providers.mock_providers import MockProviderBackend, ObserverScenario, DEFAULT_DIM

load_dotenv()

logger = logging.getLogger("detective.provider_server")


def create_app(backend: Optional[ProviderBackend] = None) -> FastAPI:
    """FastAPI app serving every provider endpoint from ``backend``"""
    backend = backend or MockProviderBackend()
    app = FastAPI(title="Detective Provider Server")
    counters: Dict[str, int] = {e.value: 0 for e in Endpoint}

    def handle(endpoint: Endpoint, payload: Dict[str, Any]) -> Dict[str, Any]:
        counters[endpoint.value] += 1
        logger.info(f"📨 /{endpoint.value} request")
        try:
            return backend.call(endpoint.value, payload)
        except ProviderError as e:
            logger.error(f"❌ /{endpoint.value} failed: {e}")
            raise HTTPException(status_code=502, detail=str(e))
        except (ValueError, KeyError, TypeError) as e:
            logger.error(f"❌ /{endpoint.value} bad request: {e}")
            raise HTTPException(status_code=422, detail=str(e))

    def register(endpoint: Endpoint):
        async def route(payload: Dict[str, Any] = Body(...)) -> Dict[str, Any]:
            return handle(endpoint, payload)
        route.__name__ = f"post_{endpoint.value}"
        app.post(f"/{endpoint.value}")(route)

    for endpoint in Endpoint:
        register(endpoint)

    @app.get("/health")
    async def health_check():
        status = {
            "status": "healthy",
            "backend": backend.name,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "requests": dict(counters),
        }
        logger.info(f"💚 Health check: {status['requests']}")
        return status

    return app


def _load_scenario(path: Optional[str]) -> ObserverScenario:
    if not path:
        return ObserverScenario()
    with open(path, 'r', encoding='utf-8') as f:
        return ObserverScenario.model_validate(json.load(f))


if __name__ == "__main__":
    import uvicorn

    parser = argparse.ArgumentParser(description="Serve mock provider endpoints over HTTP")
    parser.add_argument("--port", type=int, default=9100)
    parser.add_argument("--scenario", help="scenario.json for the scripted observer")
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM, help="embedding dimension")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args()

    configure_logging(args.verbose)
    app = create_app(MockProviderBackend(_load_scenario(args.scenario), dim=args.dim))
    print("\n" + "=" * 60)
    print("🕵️ Detective Provider Server (mock backend)")
    print(f"📍 URL: http://localhost:{args.port}")
    print(f"💚 Health: http://localhost:{args.port}/health")
    print("=" * 60 + "\n")
    uvicorn.run(app, host="0.0.0.0", port=args.port, log_level="info")
