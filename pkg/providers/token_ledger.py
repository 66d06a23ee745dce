"""
Token Ledger - Provider Usage Accounting
========================================

Per-provider counters for logical calls, attempts (retries included),
cache hits and character volume. Token counts are an estimate: chars / 4.
"""

import threading
from dataclasses import dataclass, asdict
from typing import Dict, Any

CHARS_PER_TOKEN = 4


@dataclass
class ProviderUsage:
    calls: int = 0
    attempts: int = 0
    cache_hits: int = 0
    input_chars: int = 0
    output_chars: int = 0

    @property
    def estimated_tokens(self) -> int:
        return (self.input_chars + self.output_chars) // CHARS_PER_TOKEN

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['estimated_tokens'] = self.estimated_tokens
        return data


class TokenLedger:
    """Thread-safe; counters only ever grow"""

    def __init__(self):
        self._usage: Dict[str, ProviderUsage] = {}
        self._lock = threading.Lock()

    def _get(self, provider: str) -> ProviderUsage:
        return self._usage.setdefault(provider, ProviderUsage())

    def record_attempt(self, provider: str):
        with self._lock:
            self._get(provider).attempts += 1

    def record_call(self, provider: str, input_chars: int, output_chars: int):
        with self._lock:
            usage = self._get(provider)
            usage.calls += 1
            usage.input_chars += input_chars
            usage.output_chars += output_chars

    def record_cache_hit(self, provider: str):
        with self._lock:
            self._get(provider).cache_hits += 1

    def usage(self, provider: str) -> ProviderUsage:
        with self._lock:
            return ProviderUsage(**asdict(self._get(provider)))

    @property
    def total_calls(self) -> int:
        with self._lock:
            return sum(u.calls for u in self._usage.values())

    def to_dict(self) -> Dict[str, Any]:
        with self._lock:
            providers = {name: u.to_dict() for name, u in sorted(self._usage.items())}
        return {
            'providers': providers,
            'estimated_tokens_total': sum(p['estimated_tokens'] for p in providers.values()),
            'token_estimate': f"chars/{CHARS_PER_TOKEN}",
        }
