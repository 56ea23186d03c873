"""HTTP service exposing the correction pipeline.

The server loads the dictionary once at startup and serves correction,
similarity, parsing, and scoring requests against it; editing the
dictionary is file-level, so a reload endpoint re-reads it in place.
Scoring and correction are pure functions of the request plus the
loaded dictionary, which keeps the service safe to scale out.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from fastapi import FastAPI, HTTPException

from . import __version__, schemas
from .corrector import (
    DEFAULT_THRESHOLD,
    ThresholdLike,
    as_threshold,
    correct_token_records,
    decision_to_dict,
)
from .lexicon import Lexicon, load_lexicon
from .nea import FormatConfig, MalformedSpanError, NeSpan, parse_hypothesis, parse_reference
from .scoring import IdMismatchError, corpus_report
from .similarity import gestalt_similarity


def create_app(
    dict_path: Union[str, Path, None] = None,
    default_threshold: ThresholdLike = DEFAULT_THRESHOLD,
    markers: str = "safe",
) -> FastAPI:
    app = FastAPI(title="nephon", version=__version__)
    app.state.dict_path = str(dict_path) if dict_path else None
    app.state.lexicon = load_lexicon(dict_path) if dict_path else Lexicon()
    app.state.default_threshold = as_threshold(default_threshold)
    app.state.default_markers = markers

    @app.get("/health", response_model=schemas.HealthOut)
    def health() -> schemas.HealthOut:
        return schemas.HealthOut(status="ok", version=__version__)

    @app.get("/lexicon", response_model=schemas.LexiconInfo)
    def lexicon_info() -> schemas.LexiconInfo:
        return schemas.LexiconInfo(path=app.state.dict_path, size=len(app.state.lexicon))

    @app.post("/lexicon/reload", response_model=schemas.LexiconInfo)
    def lexicon_reload() -> schemas.LexiconInfo:
        if not app.state.dict_path:
            raise HTTPException(status_code=400, detail="server started without a dictionary file")
        try:
            app.state.lexicon = load_lexicon(app.state.dict_path)
        except (OSError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"reload failed: {exc}")
        return schemas.LexiconInfo(path=app.state.dict_path, size=len(app.state.lexicon))

    @app.post("/similarity", response_model=schemas.SimilarityResponse)
    def similarity(req: schemas.SimilarityRequest) -> schemas.SimilarityResponse:
        score = gestalt_similarity(req.a, req.b)
        return schemas.SimilarityResponse(
            matched=score.matched, r=score.as_float, r_exact=score.exact()
        )

    @app.post("/parse", response_model=schemas.ParseResponse)
    def parse(req: schemas.ParseRequest) -> schemas.ParseResponse:
        fmt = FormatConfig.from_name(req.markers)
        try:
            hyp = parse_hypothesis("request", req.tokens, fmt)
        except MalformedSpanError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        segments = []
        for seg in hyp.segments:
            if isinstance(seg, NeSpan):
                segments.append(
                    schemas.SegmentOut(
                        kind="entity",
                        surface=list(seg.surface),
                        phonemes=list(seg.phonemes),
                        degenerate=seg.degenerate,
                    )
                )
            else:
                segments.append(schemas.SegmentOut(kind="plain", token=seg))
        return schemas.ParseResponse(segments=segments, n_entities=hyp.n_entities)

    @app.post("/correct", response_model=schemas.CorrectResponse)
    def correct_endpoint(req: schemas.CorrectRequest) -> schemas.CorrectResponse:
        fmt = FormatConfig.from_name(req.markers)
        try:
            threshold = (
                as_threshold(req.threshold)
                if req.threshold is not None
                else app.state.default_threshold
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        records = [(i + 1, u.id, u.tokens) for i, u in enumerate(req.utterances)]
        outcomes, skips = correct_token_records(records, app.state.lexicon, threshold, fmt)
        return schemas.CorrectResponse(
            outcomes=[
                schemas.CorrectionOut(
                    id=o.id,
                    tokens=list(o.corrected),
                    spans=[schemas.SpanDecisionOut(**decision_to_dict(d)) for d in o.decisions],
                )
                for o in outcomes
            ],
            skipped=[
                schemas.SkipOut(line_no=s.line_no, id=s.utt_id, error=s.error) for s in skips
            ],
            lexicon_size=len(app.state.lexicon),
        )

    @app.post("/score")
    def score_endpoint(req: schemas.ScoreRequest) -> dict:
        fmt = FormatConfig.from_name(req.markers)
        try:
            refs = [
                parse_reference(r.id, r.tokens, fmt, tuple(r.iv_flags)) for r in req.refs
            ]
            hyps = {u.id: tuple(u.tokens) for u in req.hyps}
            hyps_raw = None
            if req.hyps_raw is not None:
                hyps_raw = {
                    u.id: parse_hypothesis(u.id, u.tokens, fmt) for u in req.hyps_raw
                }
            vocab = {tuple(v) for v in req.vocab} if req.vocab is not None else None
            return corpus_report(refs, hyps, hyps_raw, vocab, per_utt=req.per_utt)
        except (ValueError, IdMismatchError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    return app
