"""
Feature Bundle - Precomputed Video Features on Disk
===================================================

A bundle is either a directory::

    header.json        {"video_id", "duration_s", "fps", "feature_dim"}
    features.bin       little-endian float32, row-major frames x feature_dim
    transcripts.json   optional [{"span": [start_s, end_s], "text": ...}]
    screen_text.json   optional, same layout
    scenario.json      optional mock-observer script (mock mode only)

or a single JSON file with the keys ``header``, ``frames`` (list of vectors),
``transcripts``, ``screen_text`` and ``scenario``.
"""

import json
import os
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from .error_handler import BundleNotFound, BundleFormatError

logger = logging.getLogger(__name__)

HEADER_FILE = "header.json"
FEATURES_FILE = "features.bin"
TRANSCRIPTS_FILE = "transcripts.json"
SCREEN_TEXT_FILE = "screen_text.json"
SCENARIO_FILE = "scenario.json"


class BundleHeader(BaseModel):
    video_id: str
    duration_s: float = Field(ge=0.0)
    fps: float = Field(1.0, gt=0.0)
    feature_dim: int = Field(ge=1)


class TextSpan(BaseModel):
    span: List[float]
    text: str

    @field_validator("span")
    @classmethod
    def _two_endpoints(cls, v: List[float]) -> List[float]:
        if len(v) != 2:
            raise ValueError("span must be [start_s, end_s]")
        start, end = float(v[0]), float(v[1])
        return [min(start, end), max(start, end)]

    @property
    def start(self) -> float:
        return self.span[0]

    @property
    def end(self) -> float:
        return self.span[1]


@dataclass
class FrameFeature:
    """One sampled frame"""
    index: int
    timestamp: float
    embedding: np.ndarray


@dataclass
class FeatureBundle:
    header: BundleHeader
    embeddings: np.ndarray
    transcripts: List[TextSpan] = field(default_factory=list)
    screen_text: List[TextSpan] = field(default_factory=list)
    scenario: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        if self.embeddings.ndim != 2:
            raise BundleFormatError("frame embeddings must be a 2-D array")
        if self.embeddings.shape[1] != self.header.feature_dim:
            raise BundleFormatError(
                f"feature_dim {self.header.feature_dim} does not match vectors of "
                f"dimension {self.embeddings.shape[1]}"
            )
        expected = self.header.duration_s * self.header.fps
        if abs(self.frame_count - expected) > 1.0 + 1e-9:
            raise BundleFormatError(
                f"{self.frame_count} frames inconsistent with duration "
                f"{self.header.duration_s}s at {self.header.fps} fps"
            )

    @property
    def video_id(self) -> str:
        return self.header.video_id

    @property
    def frame_count(self) -> int:
        return int(self.embeddings.shape[0])

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.frame_count, dtype=np.float64) / self.header.fps

    def frames(self) -> List[FrameFeature]:
        times = self.timestamps
        return [
            FrameFeature(index=i, timestamp=float(times[i]), embedding=self.embeddings[i])
            for i in range(self.frame_count)
        ]

    def frame_refs(self, indices: List[int]) -> List[Dict[str, Any]]:
        return [{"bundle_id": self.video_id, "frame_index": int(i)} for i in indices]

    def text_in_span(self, kind: str, start: float, end: float) -> str:
        """Concatenate transcript or screen-text records overlapping [start, end]"""
        records = self.transcripts if kind == "asr" else self.screen_text
        hits = [r for r in records if r.start <= end and r.end >= start]
        hits.sort(key=lambda r: (r.start, r.end))
        return " ".join(r.text.strip() for r in hits if r.text.strip())


def _load_spans(raw: Any, origin: str) -> List[TextSpan]:
    if raw is None:
        return []
    try:
        return [TextSpan.model_validate(item) for item in raw]
    except (ValidationError, TypeError) as e:
        raise BundleFormatError(f"Malformed text records in {origin}: {e}") from e


def _read_json(path: str) -> Any:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise BundleFormatError(f"Invalid JSON in {path}: {e}") from e


def load_bundle(path: str) -> FeatureBundle:
    """Load a bundle directory or single-file JSON bundle"""
    if not os.path.exists(path):
        raise BundleNotFound(f"Bundle not found: {path}", context={'path': path})

    if os.path.isdir(path):
        header_path = os.path.join(path, HEADER_FILE)
        features_path = os.path.join(path, FEATURES_FILE)
        if not os.path.isfile(header_path) or not os.path.isfile(features_path):
            raise BundleNotFound(
                f"Bundle directory {path} lacks {HEADER_FILE} or {FEATURES_FILE}",
                context={'path': path}
            )
        try:
            header = BundleHeader.model_validate(_read_json(header_path))
        except ValidationError as e:
            raise BundleFormatError(f"Invalid bundle header: {e}") from e

        flat = np.fromfile(features_path, dtype='<f4')
        if flat.size % header.feature_dim != 0:
            raise BundleFormatError(
                f"{FEATURES_FILE} holds {flat.size} floats, not a multiple of {header.feature_dim}"
            )
        embeddings = flat.reshape(-1, header.feature_dim)

        def optional(name: str) -> Any:
            p = os.path.join(path, name)
            return _read_json(p) if os.path.isfile(p) else None

        bundle = FeatureBundle(
            header=header,
            embeddings=embeddings,
            transcripts=_load_spans(optional(TRANSCRIPTS_FILE), TRANSCRIPTS_FILE),
            screen_text=_load_spans(optional(SCREEN_TEXT_FILE), SCREEN_TEXT_FILE),
            scenario=optional(SCENARIO_FILE),
        )
    else:
        data = _read_json(path)
        if not isinstance(data, dict) or "header" not in data or "frames" not in data:
            raise BundleFormatError(f"JSON bundle {path} needs 'header' and 'frames'")
        try:
            header = BundleHeader.model_validate(data["header"])
        except ValidationError as e:
            raise BundleFormatError(f"Invalid bundle header: {e}") from e
        try:
            embeddings = np.asarray(data["frames"], dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise BundleFormatError(f"Frames in {path} are not a numeric matrix") from e
        if embeddings.size == 0:
            embeddings = embeddings.reshape(0, header.feature_dim)
        bundle = FeatureBundle(
            header=header,
            embeddings=embeddings,
            transcripts=_load_spans(data.get("transcripts"), path),
            screen_text=_load_spans(data.get("screen_text"), path),
            scenario=data.get("scenario"),
        )

    logger.info(
        f"📦 Loaded bundle {bundle.video_id}: {bundle.frame_count} frames, "
        f"dim {bundle.header.feature_dim}"
    )
    return bundle


def write_bundle(bundle: FeatureBundle, path: str, as_json: bool = False):
    """Write a bundle in directory form (or single-file JSON)"""
    def spans(records: List[TextSpan]) -> List[Dict[str, Any]]:
        return [r.model_dump() for r in records]

    if as_json:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        data = {
            "header": bundle.header.model_dump(),
            "frames": bundle.embeddings.tolist(),
            "transcripts": spans(bundle.transcripts),
            "screen_text": spans(bundle.screen_text),
        }
        if bundle.scenario is not None:
            data["scenario"] = bundle.scenario
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2)
        return

    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, HEADER_FILE), 'w', encoding='utf-8') as f:
        json.dump(bundle.header.model_dump(), f, indent=2, sort_keys=True)
    bundle.embeddings.astype('<f4').tofile(os.path.join(path, FEATURES_FILE))
    for name, records in ((TRANSCRIPTS_FILE, bundle.transcripts), (SCREEN_TEXT_FILE, bundle.screen_text)):
        with open(os.path.join(path, name), 'w', encoding='utf-8') as f:
            json.dump(spans(records), f, indent=2)
    if bundle.scenario is not None:
        with open(os.path.join(path, SCENARIO_FILE), 'w', encoding='utf-8') as f:
            json.dump(bundle.scenario, f, indent=2, sort_keys=True)
