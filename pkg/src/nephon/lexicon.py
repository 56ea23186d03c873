"""The user-editable entity dictionary: loading, validation, lookup.

A dictionary is an ordered list of (surface tokens, phoneme tokens)
entries, kept exactly in file order. Entries with identical phoneme
sequences are allowed; that is the enharmonic case the whole tool
exists for, and lookups resolve such ties to the first registered
entry while flagging that a tie occurred.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .similarity import SimilarityScore, gestalt_similarity


class LexiconFormatError(ValueError):
    """A dictionary file line could not be loaded."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class EmptySurfaceError(LexiconFormatError):
    pass


class EmptyPhonemesError(LexiconFormatError):
    pass


class EmptyLexiconError(ValueError):
    """Lookup against a dictionary with no entries."""


@dataclass(frozen=True, slots=True)
class DictEntry:
    surface: tuple[str, ...]
    phonemes: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "surface", tuple(self.surface))
        object.__setattr__(self, "phonemes", tuple(self.phonemes))
        if not self.surface:
            raise EmptySurfaceError("dictionary entry has empty surface")
        if not self.phonemes:
            raise EmptyPhonemesError("dictionary entry has empty phoneme sequence")
        for tok in (*self.surface, *self.phonemes):
            if not isinstance(tok, str) or not tok:
                raise LexiconFormatError(f"entry tokens must be non-empty strings, got {tok!r}")


@dataclass(frozen=True, slots=True)
class BestMatch:
    """Result of a dictionary scan.

    ``maxi`` is the 1-based registration number of the winning entry;
    ``tie`` reports that at least one other entry attains the same
    similarity, in which case the smallest registration number wins.
    """

    maxi: int
    score: SimilarityScore
    tie: bool


class Lexicon:
    """Immutable, ordered entity dictionary."""

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[DictEntry] = ()):
        self.entries: tuple[DictEntry, ...] = tuple(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[DictEntry]:
        return iter(self.entries)

    def entry(self, maxi: int) -> DictEntry:
        """Entry by 1-based registration number."""
        if not 1 <= maxi <= len(self.entries):
            raise IndexError(f"entry number {maxi} out of range 1..{len(self.entries)}")
        return self.entries[maxi - 1]

    def first(self, count: int) -> "Lexicon":
        """The dictionary truncated to its first ``count`` registrations."""
        return Lexicon(self.entries[:count])

    def best_match(self, query: Sequence[str]) -> BestMatch:
        """Scan all entries and return the highest-similarity one.

        The scan is a plain linear pass computing one similarity per
        entry; ties on the maximum resolve to the first registered
        entry. An empty query scores 0 against every entry.
        """
        if not self.entries:
            raise EmptyLexiconError("best_match called on a dictionary with no entries")
        q = tuple(query)
        best_score: SimilarityScore | None = None
        best_i = 0
        tie = False
        for i, entry in enumerate(self.entries, start=1):
            score = gestalt_similarity(entry.phonemes, q)
            if best_score is None:
                best_score, best_i, tie = score, i, False
                continue
            # compare 2k/total by cross multiplication, exactly
            lhs = score.matched * best_score.length_sum
            rhs = best_score.matched * score.length_sum
            if lhs > rhs:
                best_score, best_i, tie = score, i, False
            elif lhs == rhs:
                tie = True
        assert best_score is not None
        return BestMatch(best_i, best_score, tie)


def _entry_from_obj(obj: object, line_no: int) -> DictEntry:
    if not isinstance(obj, dict):
        raise LexiconFormatError("expected a JSON object with surface/phonemes", line_no)
    surface = obj.get("surface")
    phonemes = obj.get("phonemes")
    if not isinstance(surface, list) or not isinstance(phonemes, list):
        raise LexiconFormatError("surface and phonemes must be arrays of strings", line_no)
    try:
        return DictEntry(tuple(surface), tuple(phonemes))
    except LexiconFormatError as exc:
        raise type(exc)(str(exc), line_no) from None


def _iter_tsv_entries(lines: Iterable[str]) -> Iterator[DictEntry]:
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise LexiconFormatError(f"expected 2 tab-separated columns, got {len(cols)}", line_no)
        surface = tuple(cols[0].split())
        phonemes = tuple(cols[1].split())
        if not surface:
            raise EmptySurfaceError("empty surface column", line_no)
        if not phonemes:
            raise EmptyPhonemesError("empty phoneme column", line_no)
        try:
            yield DictEntry(surface, phonemes)
        except LexiconFormatError as exc:
            raise type(exc)(str(exc), line_no) from None


def _iter_jsonl_entries(lines: Iterable[str]) -> Iterator[DictEntry]:
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LexiconFormatError(f"invalid JSON: {exc.msg}", line_no) from None
        yield _entry_from_obj(obj, line_no)


def load_lexicon(path: Union[str, Path]) -> Lexicon:
    """Load a dictionary file, format inferred from the extension.

    ``.tsv``: surface tokens, a tab, phoneme tokens, both space-joined.
    ``.jsonl``: one ``{"surface": [...], "phonemes": [...]}`` per line.
    Entry order is preserved; blank lines are skipped.
    """
    p = Path(path)
    # utf-8-sig: user-edited files often arrive with a spreadsheet BOM
    text = p.read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    suffix = p.suffix.lower()
    if suffix == ".tsv":
        return Lexicon(_iter_tsv_entries(lines))
    if suffix == ".jsonl":
        return Lexicon(_iter_jsonl_entries(lines))
    raise LexiconFormatError(f"unsupported dictionary extension {p.suffix!r} (use .tsv or .jsonl)")
