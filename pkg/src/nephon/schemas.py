"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

MarkerMode = Literal["safe", "paper"]


class UtteranceIn(BaseModel):
    id: str
    tokens: list[str]


class ReferenceIn(UtteranceIn):
    iv_flags: list[Optional[bool]] = Field(default_factory=list)


class SkipOut(BaseModel):
    line_no: int
    id: Optional[str]
    error: str


class SpanDecisionOut(BaseModel):
    n: int
    r_max: float
    r_max_exact: str
    maxi: Optional[int]
    action: str
    tie_flag: bool
    surface_before: list[str]
    surface_after: list[str]


class CorrectionOut(BaseModel):
    id: str
    tokens: list[str]
    spans: list[SpanDecisionOut]


class CorrectRequest(BaseModel):
    utterances: list[UtteranceIn]
    threshold: Optional[Union[str, float]] = None
    markers: MarkerMode = "safe"


class CorrectResponse(BaseModel):
    outcomes: list[CorrectionOut]
    skipped: list[SkipOut]
    lexicon_size: int


class SimilarityRequest(BaseModel):
    a: list[str]
    b: list[str]


class SimilarityResponse(BaseModel):
    matched: int
    r: float
    r_exact: str


class SegmentOut(BaseModel):
    kind: Literal["plain", "entity"]
    token: Optional[str] = None
    surface: Optional[list[str]] = None
    phonemes: Optional[list[str]] = None
    degenerate: Optional[bool] = None


class ParseRequest(BaseModel):
    tokens: list[str]
    markers: MarkerMode = "safe"


class ParseResponse(BaseModel):
    segments: list[SegmentOut]
    n_entities: int


class ScoreRequest(BaseModel):
    refs: list[ReferenceIn]
    hyps: list[UtteranceIn]
    hyps_raw: Optional[list[UtteranceIn]] = None
    vocab: Optional[list[list[str]]] = None
    markers: MarkerMode = "safe"
    per_utt: bool = False


class LexiconInfo(BaseModel):
    path: Optional[str]
    size: int


class HealthOut(BaseModel):
    status: str
    version: str
