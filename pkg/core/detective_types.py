"""Detective wire types - provider request/response schemas"""
from typing import List, Optional, Dict, Union, Any
from enum import Enum

from pydantic import BaseModel, Field, field_validator


class Endpoint(str, Enum):
    PLAN = "plan"
    OBSERVE = "observe"
    TIMELINE = "timeline"
    EMBED_TEXT = "embed_text"
    EMBED_JOINT = "embed_joint"
    ANSWER = "answer"


class FrameRef(BaseModel):
    bundle_id: str
    frame_index: int


class PlannerResponse(BaseModel):
    query_keywords: List[str] = []
    option_keywords: Dict[str, List[str]] = {}
    semantic_queries: Dict[str, Union[str, List[str]]] = {}
    general_semantic_query: Union[str, List[str]] = ""
    temporal_plan: str = ""
    vlm_query: str = ""

    @field_validator("query_keywords", mode="before")
    @classmethod
    def _listify(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [v]
        return v if v is not None else []


class RefinementPlan(BaseModel):
    needs_more_info: bool = False
    missing_visual_keyword: str = ""

    @field_validator("missing_visual_keyword", mode="before")
    @classmethod
    def _none_is_empty(cls, v: Any) -> Any:
        return "" if v is None else v


class ObserverRequest(BaseModel):
    frames: List[FrameRef]
    query: str
    focus_keywords: List[str] = []
    focus_semantic_queries: List[str] = []
    segment_id: Optional[int] = None


class ObserverResponse(BaseModel):
    reasoning: str = ""
    caption: str = ""
    refinement_plan: RefinementPlan = Field(default_factory=RefinementPlan)

    @field_validator("refinement_plan", mode="before")
    @classmethod
    def _absent_plan(cls, v: Any) -> Any:
        return {} if v is None else v


class TimelineEvent(BaseModel):
    start: float
    end: float
    description: str


class TimelineResponse(BaseModel):
    events: List[TimelineEvent] = []


class ChatReply(BaseModel):
    content: str


class EmbeddingReply(BaseModel):
    embeddings: List[List[float]]
