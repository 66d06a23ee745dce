"""
Detective Config - Hyperparameters and Config Loading
=====================================================

All engine settings as pydantic sections. Files use dotted
``section.key = value`` lines (parsed with python-dotenv), and CLI
``--set section.key=value`` overrides are applied on top.
"""

import os
import logging
from typing import Dict, List, Optional, Any

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .error_handler import ConfigError

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SegmenterConfig(_Section):
    theta_sim: float = Field(0.82, gt=0.0, lt=1.0)
    l_min: int = Field(10, ge=1)


class GraphConfig(_Section):
    alpha: float = Field(0.6, ge=0.0, le=1.0)
    tau: float = Field(30.0, gt=0.0)
    top_k: int = Field(8, ge=1)


class DiffusionConfig(_Section):
    beta: float = Field(0.6, gt=0.0, lt=1.0)
    t_prop: int = Field(7, ge=1)
    tol: float = Field(1e-6, gt=0.0)
    max_iters: int = Field(1000, ge=1)
    dense_cap: int = Field(2048, ge=1)


class ScoringConfig(_Section):
    z_lex: float = Field(3.0, gt=0.0)
    lambda_ocr: float = Field(0.7, ge=0.0, le=1.0)
    lambda_asr: float = Field(0.5, ge=0.0, le=1.0)
    lambda_caption: float = Field(0.3, ge=0.0, le=1.0)
    default_idf: float = Field(1.5, gt=0.0)
    idf_path: Optional[str] = None

    def source_weights(self) -> Dict[str, float]:
        return {
            "ocr": self.lambda_ocr,
            "asr": self.lambda_asr,
            "caption": self.lambda_caption,
        }


class FacetConfig(_Section):
    alpha_route: float = Field(0.5, ge=0.0, le=1.0)
    timeline_frames: int = Field(32, ge=1)


class LoopConfig(_Section):
    base_budget: int = Field(10, ge=1)
    steps_per_extra_option: int = Field(1, ge=0)
    window_frames: int = Field(9, ge=1)
    retry_threshold: float = Field(0.2, ge=0.0, le=1.0)
    fallback_max_threshold: float = Field(0.4, ge=0.0, le=1.0)
    fallback_mean_threshold: float = Field(0.2, ge=0.0, le=1.0)
    flat_gap_threshold: float = Field(0.15, ge=0.0, le=1.0)


class SelectionConfig(_Section):
    m: int = Field(8, ge=1)
    n_f: int = Field(4, ge=1)
    eta: float = Field(0.2, gt=0.0, lt=1.0)
    min_uniform_frames: int = Field(4, ge=1)
    dedup_threshold: float = Field(0.92, ge=0.0, le=1.0)
    relaxed_dedup: float = Field(0.95, ge=0.0, le=1.0)
    fallback_similarity: float = Field(0.90, ge=0.0, le=1.0)


class ProviderConfig(_Section):
    max_attempts: int = Field(5, ge=1)
    base_delay: float = Field(1.0, gt=0.0)
    max_delay: float = Field(20.0, gt=0.0)
    jitter: float = Field(0.2, ge=0.0, lt=1.0)
    observer_timeout: float = Field(300.0, gt=0.0)
    default_timeout: float = Field(60.0, gt=0.0)
    temperature: float = Field(0.0, ge=0.0)
    vlm_max_tokens: int = Field(4096, ge=1)
    llm_max_tokens: int = Field(2048, ge=1)
    cache_enabled: bool = True
    cache_dir: Optional[str] = None
    answer_criteria: str = "correct"


class DetectiveConfig(_Section):
    segmenter: SegmenterConfig = Field(default_factory=SegmenterConfig)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig)
    scoring: ScoringConfig = Field(default_factory=ScoringConfig)
    facets: FacetConfig = Field(default_factory=FacetConfig)
    loop: LoopConfig = Field(default_factory=LoopConfig)
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    providers: ProviderConfig = Field(default_factory=ProviderConfig)


SECTIONS = tuple(DetectiveConfig.model_fields.keys())


def _nest(values: Dict[str, Optional[str]], origin: str) -> Dict[str, Dict[str, Any]]:
    nested: Dict[str, Dict[str, Any]] = {}
    for key, value in values.items():
        section, _, field = key.partition(".")
        if not field or section not in SECTIONS:
            raise ConfigError(f"Unknown config key '{key}' ({origin})", context={'key': key})
        if value is None or value == "":
            raise ConfigError(f"Config key '{key}' has no value ({origin})", context={'key': key})
        nested.setdefault(section, {})[field] = value
    return nested


def parse_overrides(overrides: Optional[List[str]]) -> Dict[str, str]:
    parsed: Dict[str, str] = {}
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"Override must look like section.key=value, got '{item}'")
        parsed[key.strip()] = value.strip()
    return parsed


def load_config(path: Optional[str] = None, overrides: Optional[List[str]] = None) -> DetectiveConfig:
    """
    Build a validated DetectiveConfig.

    Args:
        path: Optional key=value config file
        overrides: ``section.key=value`` strings applied after the file
    """
    values: Dict[str, Optional[str]] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"Config file not found: {path}", context={'path': path})
        values.update(dotenv_values(path))
        logger.debug(f"Loaded {len(values)} config keys from {path}")
    values.update(parse_overrides(overrides))

    nested = _nest(values, path or "overrides")
    try:
        return DetectiveConfig.model_validate(nested)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
