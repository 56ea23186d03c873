from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from nephon.nea import NeSpan, NeaHypothesis, Reference
from nephon.scoring import (
    AlignOp,
    EditOps,
    EmptyReferenceError,
    IdMismatchError,
    NoNeSpansError,
    align,
    breakdown_utterance,
    corpus_report,
    ne_edit_ops,
    score_utterance,
)


def ref_of(*segments, flags=()) -> Reference:
    return Reference("r1", tuple(segments), tuple(flags))


def span(surface: str, phonemes: str = "p") -> NeSpan:
    return NeSpan(tuple(surface.split()), tuple(phonemes.split()))


# alignment ------------------------------------------------------------------


def test_align_identical():
    a = align(list("abc"), list("abc"))
    assert a.edit == EditOps(0, 0, 0, 3)
    assert a.cer == 0
    assert all(op.kind == "match" for op in a.ops)


def test_align_sub_and_del():
    a = align(list("abcd"), list("axc"))
    assert a.edit == EditOps(subs=1, ins=0, dels=1, n_ref=4)
    assert a.cer == 0.5


def test_align_insertion():
    a = align(["a"], ["a", "b"])
    assert a.edit == EditOps(0, 1, 0, 1)
    assert a.cer == 1.0


def test_align_empty_hypothesis():
    a = align(list("ab"), [])
    assert a.edit == EditOps(0, 0, 2, 2)


def test_align_empty_reference_rejected():
    with pytest.raises(EmptyReferenceError):
        align([], ["a"])


def test_align_backtrace_prefers_match_then_sub():
    # "ab" -> "b": deleting 'a' (cost 1) beats sub+del readings
    a = align(list("ab"), list("b"))
    assert [op.kind for op in a.ops] == ["del", "match"]
    # canonical tie: sub preferred over del+ins pairs
    b = align(list("ab"), list("cb"))
    assert [op.kind for op in b.ops] == ["sub", "match"]


def test_align_positions_are_recorded():
    a = align(list("ab"), list("axb"))
    assert a.ops == (
        AlignOp("match", 0, 0),
        AlignOp("ins", None, 1),
        AlignOp("match", 1, 2),
    )


# entity-restricted rate -------------------------------------------------------


def test_cer_ne_identical_is_zero():
    ref = ref_of("hello", span("安 倍", "a b e"))
    ops = ne_edit_ops(ref, ("hello", "安", "倍"))
    assert ops == EditOps(0, 0, 0, 2)
    assert ops.rate == 0


def test_cer_ne_enharmonic_worst_case():
    ref = ref_of("hello", span("安 倍", "a b e"))
    ops = ne_edit_ops(ref, ("hello", "阿", "部"))
    assert ops == EditOps(subs=2, ins=0, dels=0, n_ref=2)
    assert ops.rate == 1.0


def test_cer_ne_span_fully_deleted():
    ref = ref_of("a", span("X Y Z", "p q r"), "b")
    ops = ne_edit_ops(ref, ("a", "b"))
    assert ops == EditOps(0, 0, 3, 3)
    assert ops.rate == 1.0


def test_cer_ne_insertion_inside_span_counts():
    ref = ref_of("w", span("A B", "p"), "v")
    ops = ne_edit_ops(ref, ("w", "A", "q", "B", "v"))
    assert ops == EditOps(0, 1, 0, 2)


def test_cer_ne_insertion_at_left_boundary_not_counted():
    ref = ref_of("w", span("A B", "p"))
    ops = ne_edit_ops(ref, ("w", "q", "A", "B"))
    assert ops == EditOps(0, 0, 0, 2)


def test_cer_ne_insertion_at_right_boundary_not_counted():
    ref = ref_of(span("A B", "p"), "w")
    ops = ne_edit_ops(ref, ("A", "B", "q", "w"))
    assert ops == EditOps(0, 0, 0, 2)


def test_cer_ne_insertion_between_adjacent_spans_not_counted():
    ref = ref_of(span("A1 A2", "p"), span("B1 B2", "q"))
    ops = ne_edit_ops(ref, ("A1", "A2", "x", "B1", "B2"))
    assert ops == EditOps(0, 0, 0, 4)


def test_cer_ne_insertion_at_utterance_edge_not_counted():
    ref = ref_of("w", span("A", "p"))
    ops = ne_edit_ops(ref, ("w", "A", "q"))
    assert ops == EditOps(0, 0, 0, 1)


def test_cer_ne_plain_errors_do_not_count():
    ref = ref_of("w1", "w2", span("A", "p"))
    ops = ne_edit_ops(ref, ("x1", "A"))
    assert ops == EditOps(0, 0, 0, 1)
    assert ops.rate == 0


def test_cer_ne_requires_spans():
    with pytest.raises(NoNeSpansError):
        ne_edit_ops(ref_of("only", "plain"), ("only", "plain"))


def test_score_utterance_combines_both_rates():
    ref = ref_of("w", span("A B", "p"))
    scored = score_utterance(ref, ("x", "A", "C"))
    assert scored.all_ops == EditOps(2, 0, 0, 3)
    assert scored.ne_ops == EditOps(1, 0, 0, 2)


# decomposition property -------------------------------------------------------

token_st = st.sampled_from("abcxy")
ref_st = st.builds(
    Reference,
    st.just("r"),
    st.lists(
        st.one_of(
            token_st,
            st.builds(
                NeSpan,
                st.lists(token_st, min_size=1, max_size=3).map(tuple),
                st.just(("p",)),
            ),
        ),
        min_size=1,
        max_size=6,
    ).map(tuple),
    st.just(()),
)


@given(ref_st, st.lists(token_st, max_size=12))
def test_ne_ops_never_exceed_total_ops(ref, hyp_tokens):
    scored = score_utterance(ref, tuple(hyp_tokens))
    if scored.ne_ops is None:
        return
    assert scored.ne_ops.subs <= scored.all_ops.subs
    assert scored.ne_ops.ins <= scored.all_ops.ins
    assert scored.ne_ops.dels <= scored.all_ops.dels
    assert scored.ne_ops.n_ref <= scored.all_ops.n_ref


def _distance_oracle(a, b) -> int:
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j - 1] + cost, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[-1]


@given(st.lists(token_st, min_size=1, max_size=16), st.lists(token_st, max_size=16))
def test_alignment_cost_is_minimal(a, b):
    assert align(a, b).edit.errors == _distance_oracle(a, b)


@given(st.lists(token_st, min_size=1, max_size=10), st.lists(token_st, max_size=10))
def test_alignment_is_deterministic(a, b):
    assert align(a, b) == align(a, b)


# breakdown ---------------------------------------------------------------------


def hyp_of(*segments) -> NeaHypothesis:
    return NeaHypothesis("r1", tuple(segments))


def test_breakdown_recovered_span():
    ref = ref_of("w", span("安 倍", "a b e"), flags=[True])
    before = hyp_of("w", span("阿 部", "a b e"))
    report = breakdown_utterance(ref, before, ("w", "安", "倍"))
    assert report.ref_spans == 1
    assert report.extracted == 1
    assert report.extracted_iv == 1
    assert report.sub_error_pre == 1
    assert report.sub_error_post == 0


def test_breakdown_not_extracted():
    ref = ref_of("w", span("安 倍", "a b e"))
    before = hyp_of("w", "安", "倍")  # surface right but never tagged
    report = breakdown_utterance(ref, before, ("w", "安", "倍"))
    assert report.extracted == 0
    assert report.not_extracted == 1
    assert report.spurious == 0


def test_breakdown_spurious_extraction():
    ref = ref_of("w1", "w2")
    before = hyp_of("w1", span("w2", "q q"))
    report = breakdown_utterance(ref, before, ("w1", "w2"))
    assert report.ref_spans == 0
    assert report.spurious == 1


def test_breakdown_vocab_fallback_and_unknown():
    ref = Reference(
        "r1",
        ("w", NeSpan(("IN",), ("a",)), NeSpan(("OUT",), ("b",)), NeSpan(("MYSTERY",), ("c",))),
        (None, None, None),
    )
    before = NeaHypothesis(
        "r1",
        ("w", NeSpan(("IN",), ("a",)), NeSpan(("OUT",), ("b",)), NeSpan(("MYSTERY",), ("c",))),
    )
    corrected = ref.plain_tokens()
    with_vocab = breakdown_utterance(ref, before, corrected, vocab={("IN",)})
    assert with_vocab.extracted_iv == 1
    assert with_vocab.extracted_oov == 2
    without_vocab = breakdown_utterance(ref, before, corrected, vocab=None)
    assert without_vocab.extracted_unknown == 3
    fr = without_vocab.fractions()
    assert fr["iv"] + fr["oov"] + fr["unknown"] == pytest.approx(1.0)


def test_breakdown_one_to_one_matching_prefers_greatest_overlap():
    ref = ref_of(span("A B C", "p"), "w", span("D E", "q"))
    # one hypothesis span covering most of the first ref span
    before = hyp_of(span("A B C", "x"), "w", "D", "E")
    report = breakdown_utterance(ref, before, ref.plain_tokens())
    assert report.extracted == 1
    assert report.not_extracted == 1


def test_corpus_report_aggregates():
    refs = [
        Reference("a", ("w", NeSpan(("N",), ("p",))), ()),
        Reference("b", ("x", "y"), ()),
    ]
    hyps = {"a": ("w", "N"), "b": ("x", "z")}
    report = corpus_report(refs, hyps)
    assert report["utterances"] == 2
    assert report["cer_all"] == pytest.approx(1 / 4)
    assert report["cer_ne"] == 0.0
    assert report["ops_ne"]["n_ref"] == 1


def test_corpus_report_id_mismatch():
    refs = [Reference("a", ("w",), ())]
    with pytest.raises(IdMismatchError):
        corpus_report(refs, {"b": ("w",)})


def test_corpus_report_rejects_duplicate_reference_ids():
    refs = [Reference("a", ("w",), ()), Reference("a", ("x",), ())]
    with pytest.raises(IdMismatchError):
        corpus_report(refs, {"a": ("w",)})


def test_corpus_report_with_breakdown_and_per_utt():
    refs = [Reference("a", ("w", NeSpan(("N", "M"), ("p",))), (False,))]
    raw = {"a": NeaHypothesis("a", ("w", NeSpan(("N", "X"), ("p",))))}
    hyps = {"a": ("w", "N", "M")}
    report = corpus_report(refs, hyps, raw, per_utt=True)
    assert report["breakdown"]["extracted"] == 1
    assert report["breakdown"]["extracted_oov"] == 1
    assert report["breakdown"]["sub_error_pre"] == 1
    assert report["breakdown"]["sub_error_post"] == 0
    assert report["per_utterance"][0]["id"] == "a"
    assert report["per_utterance"][0]["cer_ne"] == 0.0
