from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import nephon.lexicon as lexicon_mod
from nephon.lexicon import (
    DictEntry,
    EmptyLexiconError,
    EmptyPhonemesError,
    EmptySurfaceError,
    Lexicon,
    LexiconFormatError,
    load_lexicon,
)
from nephon.similarity import gestalt_similarity


def entry(surface: str, phonemes: str) -> DictEntry:
    return DictEntry(tuple(surface.split()), tuple(phonemes.split()))


def test_load_tsv_preserves_order(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text("安 倍\ta b e\nX\ts a t o\nY Z\tk i\n", encoding="utf-8")
    lex = load_lexicon(path)
    assert len(lex) == 3
    assert lex.entry(1) == entry("安 倍", "a b e")
    assert lex.entry(3) == entry("Y Z", "k i")


def test_load_jsonl(tmp_path):
    path = tmp_path / "dict.jsonl"
    path.write_text(
        '{"surface": ["安", "倍"], "phonemes": ["a", "b", "e"]}\n'
        '{"surface": ["X"], "phonemes": ["s"]}\n',
        encoding="utf-8",
    )
    lex = load_lexicon(path)
    assert len(lex) == 2
    assert lex.entry(2).surface == ("X",)


def test_load_tsv_with_byte_order_mark(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_bytes("安 倍\ta b e\n".encode("utf-8-sig"))
    lex = load_lexicon(path)
    assert lex.entry(1).surface == ("安", "倍")


def test_load_empty_file_gives_empty_lexicon(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text("", encoding="utf-8")
    assert len(load_lexicon(path)) == 0


def test_empty_phoneme_column_reports_line(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text("X\ta b\nY\t \n", encoding="utf-8")
    with pytest.raises(EmptyPhonemesError) as err:
        load_lexicon(path)
    assert err.value.line == 2


def test_empty_surface_column_reports_line(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text(" \ta b\n", encoding="utf-8")
    with pytest.raises(EmptySurfaceError) as err:
        load_lexicon(path)
    assert err.value.line == 1


def test_bad_column_count(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text("only one column\n", encoding="utf-8")
    with pytest.raises(LexiconFormatError) as err:
        load_lexicon(path)
    assert err.value.line == 1


def test_unknown_extension(tmp_path):
    path = tmp_path / "dict.csv"
    path.write_text("x\ta\n", encoding="utf-8")
    with pytest.raises(LexiconFormatError):
        load_lexicon(path)


def test_duplicate_phonemes_are_permitted():
    lex = Lexicon([entry("安 倍", "a b e"), entry("阿 部", "a b e")])
    assert len(lex) == 2


def test_best_match_exact_hit():
    lex = Lexicon([entry("X", "a b e"), entry("Y", "s a t o")])
    match = lex.best_match(("a", "b", "e"))
    assert match.maxi == 1
    assert match.score.ratio == 1
    assert not match.tie


def test_best_match_enharmonic_tie_goes_to_first_registered():
    lex = Lexicon([entry("安 倍", "a b e"), entry("阿 部", "a b e")])
    match = lex.best_match(("a", "b", "e"))
    assert match.maxi == 1
    assert match.tie


def test_best_match_partial_similarity():
    lex = Lexicon([entry("X", "a b e")])
    match = lex.best_match(("a", "b", "u"))
    assert match.score.ratio == Fraction(2, 3)


def test_best_match_empty_query_scores_zero():
    lex = Lexicon([entry("X", "a b e"), entry("Y", "k i")])
    match = lex.best_match(())
    assert match.score.ratio == 0
    assert match.maxi == 1


def test_best_match_on_empty_lexicon():
    with pytest.raises(EmptyLexiconError):
        Lexicon().best_match(("a",))


def test_scan_cost_is_exactly_one_call_per_entry(monkeypatch):
    calls = []

    def counting(a, b):
        calls.append(1)
        return gestalt_similarity(a, b)

    monkeypatch.setattr(lexicon_mod, "gestalt_similarity", counting)
    lex = Lexicon([entry("A", "a b e"), entry("B", "a b e"), entry("C", "x y")])
    lex.best_match(("a", "b", "e"))  # exact hit at entry 1: still a full scan
    assert len(calls) == 3


def test_first_subsets():
    lex = Lexicon([entry("A", "a"), entry("B", "b"), entry("C", "c")])
    assert len(lex.first(0)) == 0
    assert lex.first(2).entries == lex.entries[:2]


phoneme_seq = st.lists(st.sampled_from("aekst"), min_size=1, max_size=5).map(tuple)


@given(
    st.lists(phoneme_seq, min_size=1, max_size=8),
    phoneme_seq,
)
def test_adding_entries_never_decreases_best_score(entry_phonemes, query):
    entries = [DictEntry(("s",), ph) for ph in entry_phonemes]
    prev = Fraction(-1)
    for i in range(1, len(entries) + 1):
        score = Lexicon(entries[:i]).best_match(query).score.ratio
        assert score >= prev
        prev = score


@given(st.lists(phoneme_seq, min_size=1, max_size=6), phoneme_seq)
def test_best_match_is_deterministic_argmax(entry_phonemes, query):
    entries = [DictEntry((f"s{i}",), ph) for i, ph in enumerate(entry_phonemes)]
    lex = Lexicon(entries)
    match = lex.best_match(query)
    scores = [gestalt_similarity(e.phonemes, query).ratio for e in entries]
    best = max(scores)
    assert match.score.ratio == best
    assert match.maxi == scores.index(best) + 1
    assert match.tie == (scores.count(best) > 1)
