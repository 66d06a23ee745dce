"""
Segmenter - Frames to Semantic Segments
=======================================

Splits the frame stream wherever adjacent cosine similarity drops below
``theta_sim``, merges fragments shorter than ``l_min`` and represents each
segment by the normalized mean of its frame embeddings.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .bundle import FrameFeature
from .error_handler import EmptyVideo, EmptyInput, InvalidFeature, ConfigError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-6


@dataclass
class SegmentNode:
    """A segment of consecutive frames; one graph node"""
    id: int
    frame_range: Tuple[int, int]
    center_time: float
    feature: np.ndarray
    start_time: float = 0.0
    end_time: float = 0.0

    @property
    def length(self) -> int:
        return self.frame_range[1] - self.frame_range[0] + 1

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'frame_range': list(self.frame_range),
            'span': [self.start_time, self.end_time],
            'center_time': self.center_time,
        }


def node_feature(member_frames: Sequence[FrameFeature]) -> np.ndarray:
    """Normalized mean of member embeddings; first member if the mean vanishes"""
    if not member_frames:
        raise EmptyInput("node_feature needs at least one frame")
    stacked = np.stack([np.asarray(f.embedding, dtype=np.float64) for f in member_frames])
    mean = stacked.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-12:
        return stacked[0].copy()
    return mean / norm


def _validate(frames: Sequence[FrameFeature]) -> np.ndarray:
    if not frames:
        raise EmptyVideo("no frames to segment")
    embeddings = np.stack([np.asarray(f.embedding, dtype=np.float64) for f in frames])
    norms = np.linalg.norm(embeddings, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
    if bad.size:
        raise InvalidFeature(
            f"frame {frames[bad[0]].index} has norm {norms[bad[0]]:.6f}, expected unit norm",
            context={'frame_index': int(frames[bad[0]].index)}
        )
    times = np.array([f.timestamp for f in frames], dtype=np.float64)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise InvalidFeature("frame timestamps must be strictly increasing")
    return embeddings


def boundary_segments(embeddings: np.ndarray, theta_sim: float) -> List[List[int]]:
    """Pre-merge [start, end] ranges from the adjacent-cosine boundary rule"""
    if embeddings.shape[0] == 1:
        return [[0, 0]]
    adjacent = np.einsum('ij,ij->i', embeddings[:-1], embeddings[1:])
    cuts = np.flatnonzero(adjacent < theta_sim)
    segments = []
    start = 0
    for t in cuts:
        segments.append([start, int(t)])
        start = int(t) + 1
    segments.append([start, embeddings.shape[0] - 1])
    return segments


def merge_short_segments(segments: List[List[int]], min_length: int) -> List[List[int]]:
    """Merge left to right: into the predecessor, or forward for the first segment"""
    merged = [list(s) for s in segments]
    i = 0
    while i < len(merged) and len(merged) > 1:
        start, end = merged[i]
        if end - start + 1 >= min_length:
            i += 1
            continue
        if i == 0:
            merged[1][0] = start
            del merged[0]
        else:
            merged[i - 1][1] = end
            del merged[i]
    return merged


def segment_frames(frames: Sequence[FrameFeature], theta_sim: float = 0.82,
                   l_min: int = 10) -> List[SegmentNode]:
    """
    Segment an ordered frame list into SegmentNodes.

    Args:
        frames: FrameFeatures ordered by index
        theta_sim: adjacent-cosine boundary threshold, in (0, 1)
        l_min: minimum segment length in frames after merging
    """
    if not 0.0 < theta_sim < 1.0:
        raise ConfigError(f"theta_sim must be in (0, 1), got {theta_sim}")
    if l_min < 1:
        raise ConfigError(f"l_min must be >= 1, got {l_min}")

    embeddings = _validate(frames)
    total = embeddings.shape[0]

    raw = boundary_segments(embeddings, theta_sim)
    ranges = merge_short_segments(raw, min(l_min, total))
    logger.info(f"🎬 {total} frames -> {len(raw)} raw segments -> {len(ranges)} after merging")

    nodes = []
    for node_id, (start, end) in enumerate(ranges):
        members = frames[start:end + 1]
        start_time = float(frames[start].timestamp)
        end_time = float(frames[end].timestamp)
        nodes.append(SegmentNode(
            id=node_id,
            frame_range=(start, end),
            center_time=(start_time + end_time) / 2.0,
            feature=node_feature(members),
            start_time=start_time,
            end_time=end_time,
        ))
    return nodes


def uniform_frame_indices(frame_range: Tuple[int, int], count: int) -> List[int]:
    """``count`` frame indices spread evenly over an inclusive range, ends included"""
    start, end = frame_range
    length = end - start + 1
    if count >= length:
        return list(range(start, end + 1))
    if count == 1:
        return [start + (length - 1) // 2]
    positions = np.floor(np.linspace(start, end, count) + 0.5).astype(int)
    return sorted(set(int(p) for p in positions))
