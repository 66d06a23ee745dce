"""
Session Trace - Deterministic Run Artifacts
===========================================

Writes the output directory of a run:

- answer.json, package.json, ledger.json: sorted-key JSON, floats rounded
  to 6 decimals, trailing newline
- trace.jsonl: one compact JSON record per loop iteration
- beliefs.npy: float64 array of shape (snapshots, K); row 0 is the belief
  before the first observation, row t the belief after iteration t
"""

import json
import os
import logging
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_DIGITS = 6

ANSWER_FILE = "answer.json"
PACKAGE_FILE = "package.json"
TRACE_FILE = "trace.jsonl"
BELIEFS_FILE = "beliefs.npy"
LEDGER_FILE = "ledger.json"


def normalize_floats(value: Any, digits: int = FLOAT_DIGITS) -> Any:
    """Round floats (numpy included) recursively; -0.0 becomes 0.0"""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        rounded = round(float(value), digits)
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): normalize_floats(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize_floats(v, digits) for v in value]
    if isinstance(value, np.ndarray):
        return normalize_floats(value.tolist(), digits)
    return value


def stable_dumps(value: Any, indent: int = None) -> str:
    separators = (",", ":") if indent is None else (",", ": ")
    return json.dumps(normalize_floats(value), sort_keys=True, indent=indent,
                      separators=separators, ensure_ascii=False)


class ArtifactWriter:
    """Writes run artifacts into one output directory"""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_json(self, name: str, data: Dict[str, Any]) -> str:
        path = self.path(name)
        with open(path, 'w', encoding='utf-8', newline="\n") as f:
            f.write(stable_dumps(data, indent=2) + "\n")
        logger.debug(f"Wrote {path}")
        return path

    def write_trace(self, records: Iterable[Dict[str, Any]]) -> str:
        path = self.path(TRACE_FILE)
        with open(path, 'w', encoding='utf-8', newline="\n") as f:
            for record in records:
                f.write(stable_dumps(record) + "\n")
        return path

    def write_beliefs(self, snapshots: Sequence[np.ndarray]) -> str:
        path = self.path(BELIEFS_FILE)
        np.save(path, np.asarray(np.stack(snapshots), dtype=np.float64))
        return path


def read_trace(path: str) -> List[Dict[str, Any]]:
    with open(path, 'r', encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]
