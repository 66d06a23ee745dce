"""Shared fixtures: synthetic frames, small graphs and the golden kitchen bundle"""
import json
import os
from typing import List, Sequence

import numpy as np
import pytest

from core.affinity_graph import AffinityGraph, graph_from_affinity
from core.bundle import FrameFeature
from providers.mock_providers import hash_embedding

GOLDEN_DIM = 64
GOLDEN_QUERY = "What does the chef slice?"
GOLDEN_OPTIONS = ["potato", "red onion", "carrot", "lemon"]
GOLDEN_SCENES = [
    "a person opens the refrigerator door",
    "a chef slices a red onion on a wooden cutting board",
    "steam rises from a pot of boiling water",
    "a dog sleeps on the living room rug",
    "the chef plates the finished dish",
    "credits roll over a dark screen",
]
SCENE_LENGTH = 10


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def make_frames(embeddings: Sequence[Sequence[float]], fps: float = 1.0) -> List[FrameFeature]:
    return [FrameFeature(index=i, timestamp=i / fps, embedding=unit(e)) for i, e in enumerate(embeddings)]


def chain_graph(k: int = 3, weight: float = 1.0, top_k: int = 2) -> AffinityGraph:
    """Path 0-1-...-(k-1) with equal edge weights"""
    fused = np.zeros((k, k))
    for i in range(k - 1):
        fused[i, i + 1] = fused[i + 1, i] = weight
    return graph_from_affinity(fused, top_k)


def random_graph(rng: np.random.Generator, k: int, top_k: int = 8) -> AffinityGraph:
    a = rng.random((k, k))
    return graph_from_affinity((a + a.T) / 2.0, top_k)


def golden_bundle_data() -> dict:
    rng = np.random.default_rng(0)
    frames = []
    for caption in GOLDEN_SCENES:
        base = hash_embedding(caption, GOLDEN_DIM)
        for _ in range(SCENE_LENGTH):
            frames.append(unit(base + 0.02 * rng.standard_normal(GOLDEN_DIM)).tolist())
    scenes = {
        str(s): {"caption": caption, "span": [float(s * SCENE_LENGTH), float(s * SCENE_LENGTH + SCENE_LENGTH - 1)]}
        for s, caption in enumerate(GOLDEN_SCENES)
    }
    return {
        "header": {"video_id": "kitchen-golden", "duration_s": 60.0, "fps": 1.0, "feature_dim": GOLDEN_DIM},
        "frames": frames,
        "transcripts": [{"span": [40.0, 48.0], "text": "and now we plate it up nicely"}],
        "screen_text": [{"span": [12.0, 18.0], "text": "Knife skills: dicing an onion"}],
        "scenario": {"scenes": scenes},
    }


@pytest.fixture
def golden_bundle(tmp_path) -> str:
    path = os.path.join(tmp_path, "kitchen.json")
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(golden_bundle_data(), f)
    return path


@pytest.fixture(autouse=True)
def _no_ambient_provider_env(monkeypatch):
    for name in ("DETECTIVE_CACHE_DIR", "DETECTIVE_PROVIDER_URL", "DETECTIVE_API_KEY"):
        monkeypatch.delenv(name, raising=False)
