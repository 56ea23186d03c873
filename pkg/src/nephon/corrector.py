"""Entity correction: per-span dictionary lookup behind a threshold gate.

Each tagged span is handled independently: its phoneme sequence is
matched against the dictionary, and when the best similarity STRICTLY
exceeds the threshold the surface spelling is replaced by the winning
entry's. Either way the markers and phonemes are stripped, so the
output is an ordinary token sequence. Plain tokens pass through
untouched.

Thresholds and similarities are compared as exact rationals; a span
whose similarity lands exactly on the threshold is kept.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

from .lexicon import BestMatch, Lexicon
from .nea import FormatConfig, MalformedSpanError, NeSpan, NeaHypothesis, parse_hypothesis
from .similarity import SimilarityScore

ThresholdLike = Union[Fraction, float, int, str]

DEFAULT_THRESHOLD = Fraction(4, 5)


def as_threshold(value: ThresholdLike) -> Fraction:
    """Normalize a threshold to an exact fraction in [0, 1].

    Floats are read through their decimal representation, so 0.8 means
    exactly 4/5 rather than the nearest binary float; strings accept
    both decimal ("0.8") and ratio ("4/5") forms.
    """
    if isinstance(value, Fraction):
        th = value
    elif isinstance(value, bool):
        raise ValueError("threshold must be a number, not a bool")
    elif isinstance(value, int):
        th = Fraction(value)
    elif isinstance(value, float):
        th = Fraction(Decimal(repr(value)))
    elif isinstance(value, str):
        try:
            th = Fraction(value)
        except (ValueError, ZeroDivisionError):
            try:
                th = Fraction(Decimal(value))
            except InvalidOperation:
                raise ValueError(f"cannot parse threshold {value!r}") from None
    else:
        raise ValueError(f"cannot parse threshold {value!r}")
    if not 0 <= th <= 1:
        raise ValueError(f"threshold must lie in [0, 1], got {th}")
    return th


class Action(str, enum.Enum):
    REPLACED = "replaced"
    KEPT = "kept"
    NO_LEXICON = "no_lexicon"
    DEGENERATE_EMPTY = "degenerate_empty"


@dataclass(frozen=True, slots=True)
class SpanDecision:
    """What happened to one span, in utterance order.

    ``maxi`` is the 1-based dictionary entry number of the best match
    (None when no lookup ran); ``tie_flag`` reports that several entries
    attained the maximum and the first registered one was used.
    """

    span_index: int
    r_max: SimilarityScore
    maxi: int | None
    action: Action
    tie_flag: bool
    surface_before: tuple[str, ...]
    surface_after: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class CorrectionOutcome:
    """Corrected plain token sequence plus one decision per span."""

    id: str
    corrected: tuple[str, ...]
    decisions: tuple[SpanDecision, ...]

    @property
    def replaced_count(self) -> int:
        return sum(1 for d in self.decisions if d.action is Action.REPLACED)


_NO_SCORE = SimilarityScore(0, 0)


def decide_span(
    span_index: int,
    span: NeSpan,
    lexicon: Lexicon,
    threshold: Fraction,
    match: BestMatch | None = None,
) -> SpanDecision:
    """Decision for a single span; ``match`` may carry a precomputed scan."""
    if len(lexicon) == 0:
        return SpanDecision(
            span_index, _NO_SCORE, None, Action.NO_LEXICON, False, span.surface, span.surface
        )
    if span.degenerate:
        return SpanDecision(
            span_index, _NO_SCORE, None, Action.DEGENERATE_EMPTY, False, span.surface, span.surface
        )
    if match is None:
        match = lexicon.best_match(span.phonemes)
    if match.score.ratio > threshold:
        replacement = lexicon.entry(match.maxi).surface
        return SpanDecision(
            span_index, match.score, match.maxi, Action.REPLACED, match.tie, span.surface, replacement
        )
    return SpanDecision(
        span_index, match.score, match.maxi, Action.KEPT, match.tie, span.surface, span.surface
    )


def correct(
    hyp: NeaHypothesis, lexicon: Lexicon, threshold: ThresholdLike = DEFAULT_THRESHOLD
) -> CorrectionOutcome:
    """Apply the dictionary to every span of one utterance."""
    th = as_threshold(threshold)
    corrected: list[str] = []
    decisions: list[SpanDecision] = []
    n = 0
    for seg in hyp.segments:
        if isinstance(seg, NeSpan):
            n += 1
            decision = decide_span(n, seg, lexicon, th)
            decisions.append(decision)
            corrected.extend(decision.surface_after)
        else:
            corrected.append(seg)
    return CorrectionOutcome(hyp.id, tuple(corrected), tuple(decisions))


def correct_batch(
    hyps: Iterable[NeaHypothesis],
    lexicon: Lexicon,
    threshold: ThresholdLike = DEFAULT_THRESHOLD,
) -> Iterator[CorrectionOutcome]:
    """Correct a stream of utterances, order preserved."""
    th = as_threshold(threshold)
    for hyp in hyps:
        yield correct(hyp, lexicon, th)


@dataclass(frozen=True, slots=True)
class SkipRecord:
    """An input record that could not be parsed and was dropped."""

    line_no: int
    utt_id: str | None
    error: str


def correct_token_records(
    records: Iterable[tuple[int, str, Sequence[str]]],
    lexicon: Lexicon,
    threshold: ThresholdLike,
    fmt: FormatConfig,
) -> tuple[list[CorrectionOutcome], list[SkipRecord]]:
    """Parse and correct (line_no, id, tokens) records.

    Malformed utterances become skip records instead of aborting the
    batch; callers decide whether skips are fatal.
    """
    th = as_threshold(threshold)
    outcomes: list[CorrectionOutcome] = []
    skips: list[SkipRecord] = []
    for line_no, utt_id, tokens in records:
        try:
            hyp = parse_hypothesis(utt_id, tokens, fmt)
        except MalformedSpanError as exc:
            skips.append(SkipRecord(line_no, utt_id, str(exc)))
            continue
        outcomes.append(correct(hyp, lexicon, th))
    return outcomes, skips


def decision_to_dict(d: SpanDecision) -> dict:
    return {
        "n": d.span_index,
        "r_max": d.r_max.as_float,
        "r_max_exact": d.r_max.exact(),
        "maxi": d.maxi,
        "action": d.action.value,
        "tie_flag": d.tie_flag,
        "surface_before": list(d.surface_before),
        "surface_after": list(d.surface_after),
    }


def outcome_to_dict(outcome: CorrectionOutcome) -> dict:
    return {
        "id": outcome.id,
        "spans": [decision_to_dict(d) for d in outcome.decisions],
    }
