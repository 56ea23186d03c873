"""NE-aware token sequences: data model, parsing, rendering.

An utterance is a flat token stream in which named-entity spans are
delimited by marker tokens::

    my name is <SNE> A b e <SEP> a b e <ENE>

Everything between the start marker and the separator is the entity's
surface spelling; everything between the separator and the end marker is
its phoneme sequence. Parsing turns the stream into a segment list of
plain tokens and entity spans; rendering is the exact inverse, so
``parse(render(h)) == h``.

Tokens are opaque non-empty strings. No assumption is made about the
writing system or the phone set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

SAFE_MARKERS = ("<SNE>", "<SEP>", "<ENE>")
PAPER_MARKERS = ("<", ",", ">")


class MalformedSpanError(ValueError):
    """Marker tokens do not form flat, well-balanced spans."""

    def __init__(self, reason: str, position: int, utt_id: str | None = None):
        self.reason = reason
        self.position = position
        self.utt_id = utt_id
        where = f" in utterance {utt_id!r}" if utt_id is not None else ""
        super().__init__(f"{reason} at token index {position}{where}")


class ReservedTokenCollisionError(ValueError):
    """A token value equals a marker string under the active format."""


@dataclass(frozen=True, slots=True)
class FormatConfig:
    """Marker triple delimiting entity spans in the token stream.

    The ``safe`` triple uses strings that cannot occur as real tokens in
    ordinary transcripts. The ``paper`` triple uses the literal ``<``,
    ``,``, ``>`` tokens; pick it only when the upstream tagger emits
    those and the transcript itself never contains them.
    """

    sne: str = "<SNE>"
    sep: str = "<SEP>"
    ene: str = "<ENE>"

    def __post_init__(self) -> None:
        if len({self.sne, self.sep, self.ene}) != 3:
            raise ValueError("marker strings must be three distinct tokens")
        if not (self.sne and self.sep and self.ene):
            raise ValueError("marker strings must be non-empty")

    @property
    def markers(self) -> tuple[str, str, str]:
        return (self.sne, self.sep, self.ene)

    @classmethod
    def from_name(cls, name: str) -> "FormatConfig":
        if name == "safe":
            return cls(*SAFE_MARKERS)
        if name == "paper":
            return cls(*PAPER_MARKERS)
        raise ValueError(f"unknown marker set {name!r} (expected 'safe' or 'paper')")


def _check_tokens(tokens: Iterable[str], what: str) -> None:
    for t in tokens:
        if not isinstance(t, str) or not t:
            raise ValueError(f"{what} must be non-empty strings, got {t!r}")


@dataclass(frozen=True, slots=True)
class NeSpan:
    """One tagged entity: surface spelling plus phoneme sequence.

    ``phonemes`` may be empty only for spans coming from a tagger that
    failed to emit a pronunciation; such spans are degenerate and can
    never match a dictionary entry.
    """

    surface: tuple[str, ...]
    phonemes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "surface", tuple(self.surface))
        object.__setattr__(self, "phonemes", tuple(self.phonemes))
        if not self.surface:
            raise ValueError("entity span surface must be non-empty")
        _check_tokens(self.surface, "surface tokens")
        _check_tokens(self.phonemes, "phoneme tokens")

    @property
    def degenerate(self) -> bool:
        return not self.phonemes


Segment = Union[str, NeSpan]


@dataclass(frozen=True, slots=True)
class NeaHypothesis:
    """One utterance: ordered plain tokens and entity spans."""

    id: str
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        for seg in self.segments:
            if isinstance(seg, NeSpan):
                continue
            if not isinstance(seg, str) or not seg:
                raise ValueError(f"plain segment must be a non-empty string, got {seg!r}")

    @property
    def entities(self) -> tuple[NeSpan, ...]:
        return tuple(s for s in self.segments if isinstance(s, NeSpan))

    @property
    def n_entities(self) -> int:
        return sum(1 for s in self.segments if isinstance(s, NeSpan))

    def plain_tokens(self) -> tuple[str, ...]:
        """Flatten to surface text: markers and phonemes dropped."""
        out: list[str] = []
        for seg in self.segments:
            if isinstance(seg, NeSpan):
                out.extend(seg.surface)
            else:
                out.append(seg)
        return tuple(out)

    def span_ranges(self) -> tuple[tuple[int, int], ...]:
        """Half-open [start, end) positions of each span in plain_tokens()."""
        ranges: list[tuple[int, int]] = []
        pos = 0
        for seg in self.segments:
            if isinstance(seg, NeSpan):
                ranges.append((pos, pos + len(seg.surface)))
                pos += len(seg.surface)
            else:
                pos += 1
        return tuple(ranges)


@dataclass(frozen=True, slots=True)
class Reference(NeaHypothesis):
    """Gold utterance. Every span carries a complete phoneme sequence.

    ``iv_flags`` marks, per span, whether the entity was in the training
    vocabulary; ``None`` means unknown.
    """

    iv_flags: tuple[Union[bool, None], ...] = ()

    def __post_init__(self) -> None:
        NeaHypothesis.__post_init__(self)
        n = self.n_entities
        flags = tuple(self.iv_flags) if self.iv_flags else (None,) * n
        object.__setattr__(self, "iv_flags", flags)
        if len(flags) != n:
            raise ValueError(f"iv_flags has {len(flags)} entries for {n} spans")
        for span in self.entities:
            if span.degenerate:
                raise ValueError(
                    f"reference {self.id!r} has a span without phonemes: {span.surface}"
                )


def extract_phoneme(hyp: NeaHypothesis, n: int) -> tuple[str, ...]:
    """Return the phoneme sequence of the n-th entity span, 1-based.

    Raises IndexError when the utterance has fewer than n spans.
    """
    if n < 1:
        raise IndexError(f"span index must be >= 1, got {n}")
    entities = hyp.entities
    if n > len(entities):
        raise IndexError(f"span index {n} out of range: utterance has {len(entities)} spans")
    return entities[n - 1].phonemes


def parse_token_stream(
    tokens: Sequence[str], fmt: FormatConfig, utt_id: str | None = None
) -> tuple[Segment, ...]:
    """Parse a marker-delimited token stream into segments.

    Spans must be flat: a start marker inside an open span, an end
    marker or separator outside one, a span without separator, or an
    unclosed span at end of stream all raise MalformedSpanError with the
    offending token index.
    """
    sne, sep, ene = fmt.markers
    segments: list[Segment] = []
    surface: list[str] = []
    phonemes: list[str] = []
    # state: 0 = outside span, 1 = reading surface, 2 = reading phonemes
    state = 0
    start_pos = -1
    for pos, tok in enumerate(tokens):
        if state == 0:
            if tok == sne:
                state, start_pos = 1, pos
                surface, phonemes = [], []
            elif tok == ene:
                raise MalformedSpanError("end marker without start marker", pos, utt_id)
            elif tok == sep:
                raise MalformedSpanError("separator outside span", pos, utt_id)
            else:
                segments.append(tok)
        elif state == 1:
            if tok == sep:
                if not surface:
                    raise MalformedSpanError("span has empty surface", pos, utt_id)
                state = 2
            elif tok == sne:
                raise MalformedSpanError("nested start marker", pos, utt_id)
            elif tok == ene:
                raise MalformedSpanError("span missing separator", pos, utt_id)
            else:
                surface.append(tok)
        else:
            if tok == ene:
                segments.append(NeSpan(tuple(surface), tuple(phonemes)))
                state = 0
            elif tok == sne:
                raise MalformedSpanError("nested start marker", pos, utt_id)
            elif tok == sep:
                raise MalformedSpanError("duplicate separator in span", pos, utt_id)
            else:
                phonemes.append(tok)
    if state != 0:
        raise MalformedSpanError("unclosed span at end of utterance", start_pos, utt_id)
    return tuple(segments)


def parse_hypothesis(
    utt_id: str, tokens: Sequence[str], fmt: FormatConfig
) -> NeaHypothesis:
    return NeaHypothesis(utt_id, parse_token_stream(tokens, fmt, utt_id))


def parse_reference(
    utt_id: str,
    tokens: Sequence[str],
    fmt: FormatConfig,
    iv_flags: Sequence[Union[bool, None]] = (),
) -> Reference:
    return Reference(utt_id, parse_token_stream(tokens, fmt, utt_id), tuple(iv_flags))


def render_tokens(hyp: NeaHypothesis, fmt: FormatConfig) -> tuple[str, ...]:
    """Serialize back to a flat token stream, markers reinserted.

    Raises ReservedTokenCollisionError when any token value equals one
    of the active markers, since the result could not be re-parsed.
    """
    reserved = set(fmt.markers)
    out: list[str] = []
    for seg in hyp.segments:
        if isinstance(seg, NeSpan):
            for tok in (*seg.surface, *seg.phonemes):
                if tok in reserved:
                    raise ReservedTokenCollisionError(
                        f"span token {tok!r} collides with a marker in utterance {hyp.id!r}"
                    )
            out.append(fmt.sne)
            out.extend(seg.surface)
            out.append(fmt.sep)
            out.extend(seg.phonemes)
            out.append(fmt.ene)
        else:
            if seg in reserved:
                raise ReservedTokenCollisionError(
                    f"plain token {seg!r} collides with a marker in utterance {hyp.id!r}"
                )
            out.append(seg)
    return tuple(out)
