"""
Response Cache - Write-Once On-Disk Provider Cache
==================================================

Entries are keyed by sha256 over the endpoint and the canonical JSON of the
request payload. An entry is written once: a temp file is hard-linked into
place, so concurrent writers never clobber or expose partial entries.
"""

import hashlib
import json
import os
import logging
import tempfile
from typing import Dict, Any, Optional

logger = logging.getLogger(__name__)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class ResponseCache:
    def __init__(self, cache_dir: str):
        self.cache_dir = cache_dir
        os.makedirs(cache_dir, exist_ok=True)

    @staticmethod
    def key(endpoint: str, payload: Dict[str, Any]) -> str:
        digest = hashlib.sha256()
        digest.update(endpoint.encode("utf-8"))
        digest.update(b"\n")
        digest.update(canonical_json(payload).encode("utf-8"))
        return digest.hexdigest()

    def _path(self, endpoint: str, key: str) -> str:
        return os.path.join(self.cache_dir, endpoint, key[:2], f"{key}.json")

    def get(self, endpoint: str, key: str) -> Optional[Dict[str, Any]]:
        path = self._path(endpoint, key)
        if not os.path.isfile(path):
            return None
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Ignoring unreadable cache entry {path}: {e}")
            return None

    def put(self, endpoint: str, key: str, response: Dict[str, Any]) -> bool:
        """Store a response; False if an entry already existed"""
        path = self._path(endpoint, key)
        if os.path.exists(path):
            return False
        directory = os.path.dirname(path)
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, 'w', encoding='utf-8') as f:
                f.write(canonical_json(response))
            os.link(tmp_path, path)
            return True
        except FileExistsError:
            return False
        finally:
            os.unlink(tmp_path)
