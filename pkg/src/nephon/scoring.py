"""Token error rates over whole utterances and over entity spans.

Alignment is plain Levenshtein with unit costs. Among minimum-cost
alignments the backtrace prefers Match over Sub over Del over Ins at
every step, which fixes one canonical op sequence so error attribution
is deterministic.

The entity-restricted rate divides the substitutions, insertions and
deletions attributed to entity spans by the number of reference tokens
inside those spans. A substitution or deletion is attributed by its
reference position. An insertion is attributed only when the reference
positions on both sides of it in the backtrace belong to the same span;
insertions at span edges count against the surrounding text instead,
so nothing is double counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .nea import NeaHypothesis, Reference


class EmptyReferenceError(ValueError):
    """Error rate requested against an empty reference."""


class NoNeSpansError(ValueError):
    """Entity error rate requested for a reference without spans."""


class IdMismatchError(ValueError):
    """Paired streams disagree on utterance ids."""


class AlignOp(NamedTuple):
    kind: str  # "match" | "sub" | "del" | "ins"
    ref_pos: int | None
    hyp_pos: int | None


@dataclass(frozen=True, slots=True)
class EditOps:
    subs: int
    ins: int
    dels: int
    n_ref: int

    @property
    def errors(self) -> int:
        return self.subs + self.ins + self.dels

    @property
    def rate(self) -> float:
        if self.n_ref == 0:
            raise ZeroDivisionError("error rate undefined for empty reference")
        return self.errors / self.n_ref

    def __add__(self, other: "EditOps") -> "EditOps":
        return EditOps(
            self.subs + other.subs,
            self.ins + other.ins,
            self.dels + other.dels,
            self.n_ref + other.n_ref,
        )


ZERO_OPS = EditOps(0, 0, 0, 0)


@dataclass(frozen=True, slots=True)
class Alignment:
    ops: tuple[AlignOp, ...]
    edit: EditOps

    @property
    def cer(self) -> float:
        return self.edit.rate


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimum-edit alignment of hypothesis against reference."""
    n, m = len(ref), len(hyp)
    if n == 0:
        raise EmptyReferenceError("cannot align against an empty reference")
    # dist[i][j] = edit distance between ref[:i] and hyp[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        rtok = ref[i - 1]
        for j in range(1, m + 1):
            cost = 0 if rtok == hyp[j - 1] else 1
            row[j] = min(prev[j - 1] + cost, prev[j] + 1, row[j - 1] + 1)
    ops: list[AlignOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == dist[i - 1][j - 1]:
            ops.append(AlignOp("match", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and here == dist[i - 1][j - 1] + 1:
            ops.append(AlignOp("sub", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and here == dist[i - 1][j] + 1:
            ops.append(AlignOp("del", i - 1, None))
            i -= 1
        else:
            ops.append(AlignOp("ins", None, j - 1))
            j -= 1
    ops.reverse()
    subs = sum(1 for op in ops if op.kind == "sub")
    ins = sum(1 for op in ops if op.kind == "ins")
    dels = sum(1 for op in ops if op.kind == "del")
    return Alignment(tuple(ops), EditOps(subs, ins, dels, n))


def _position_spans(ref: Reference) -> tuple[list[int | None], int]:
    """Map each flattened reference position to its span index (or None)."""
    plain = ref.plain_tokens()
    owner: list[int | None] = [None] * len(plain)
    n_ne = 0
    for idx, (start, end) in enumerate(ref.span_ranges()):
        for pos in range(start, end):
            owner[pos] = idx
        n_ne += end - start
    return owner, n_ne


def ne_edit_ops(ref: Reference, hyp_tokens: Sequence[str]) -> EditOps:
    """Edit operations attributed to entity spans, per the rules above."""
    owner, n_ne = _position_spans(ref)
    if n_ne == 0:
        raise NoNeSpansError(f"reference {ref.id!r} has no entity spans")
    alignment = align(ref.plain_tokens(), hyp_tokens)
    return _attribute_ne_ops(alignment.ops, owner, n_ne)


def _attribute_ne_ops(
    ops: Sequence[AlignOp], owner: Sequence[int | None], n_ne: int
) -> EditOps:
    subs = dels = ins = 0
    # reference position active on each side of every op, for insertions
    prev_ref: list[int | None] = []
    last = None
    for op in ops:
        prev_ref.append(last)
        if op.ref_pos is not None:
            last = op.ref_pos
    next_ref: list[int | None] = [None] * len(ops)
    following = None
    for k in range(len(ops) - 1, -1, -1):
        if ops[k].ref_pos is not None:
            following = ops[k].ref_pos
        else:
            next_ref[k] = following
    for k, op in enumerate(ops):
        if op.kind == "sub":
            if owner[op.ref_pos] is not None:
                subs += 1
        elif op.kind == "del":
            if owner[op.ref_pos] is not None:
                dels += 1
        elif op.kind == "ins":
            left, right = prev_ref[k], next_ref[k]
            if (
                left is not None
                and right is not None
                and owner[left] is not None
                and owner[left] == owner[right]
            ):
                ins += 1
    return EditOps(subs, ins, dels, n_ne)


@dataclass(frozen=True, slots=True)
class UtteranceScore:
    id: str
    all_ops: EditOps
    ne_ops: EditOps | None


def score_utterance(ref: Reference, hyp_tokens: Sequence[str]) -> UtteranceScore:
    alignment = align(ref.plain_tokens(), hyp_tokens)
    owner, n_ne = _position_spans(ref)
    ne_ops = _attribute_ne_ops(alignment.ops, owner, n_ne) if n_ne else None
    return UtteranceScore(ref.id, alignment.edit, ne_ops)


# ---------------------------------------------------------------------------
# breakdown of entity recognition outcomes
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class BreakdownReport:
    """How each reference span fared through extraction and correction.

    A reference span counts as extracted when some hypothesis span's
    aligned reference positions overlap it by at least one token;
    matching is one-to-one by greatest overlap, ties to the earliest
    span. Substitution status of an extracted span is whether all of
    its reference positions align as matches, judged before and after
    correction.
    """

    ref_spans: int = 0
    extracted: int = 0
    not_extracted: int = 0
    spurious: int = 0
    extracted_iv: int = 0
    extracted_oov: int = 0
    extracted_unknown: int = 0
    sub_error_pre: int = 0
    sub_error_post: int = 0

    def merge(self, other: "BreakdownReport") -> None:
        self.ref_spans += other.ref_spans
        self.extracted += other.extracted
        self.not_extracted += other.not_extracted
        self.spurious += other.spurious
        self.extracted_iv += other.extracted_iv
        self.extracted_oov += other.extracted_oov
        self.extracted_unknown += other.extracted_unknown
        self.sub_error_pre += other.sub_error_pre
        self.sub_error_post += other.sub_error_post

    def fractions(self) -> dict:
        out: dict[str, float] = {}
        if self.ref_spans:
            out["extracted"] = self.extracted / self.ref_spans
            out["not_extracted"] = self.not_extracted / self.ref_spans
        if self.extracted:
            out["iv"] = self.extracted_iv / self.extracted
            out["oov"] = self.extracted_oov / self.extracted
            out["unknown"] = self.extracted_unknown / self.extracted
            out["sub_error_pre"] = self.sub_error_pre / self.extracted
            out["sub_error_post"] = self.sub_error_post / self.extracted
        return out

    def to_dict(self) -> dict:
        return {
            "ref_spans": self.ref_spans,
            "extracted": self.extracted,
            "not_extracted": self.not_extracted,
            "spurious": self.spurious,
            "extracted_iv": self.extracted_iv,
            "extracted_oov": self.extracted_oov,
            "extracted_unknown": self.extracted_unknown,
            "sub_error_pre": self.sub_error_pre,
            "sub_error_post": self.sub_error_post,
            "fractions": self.fractions(),
        }


def _aligned_ref_positions(ops: Sequence[AlignOp]) -> dict[int, int]:
    """hyp position -> reference position, for match/sub ops."""
    return {
        op.hyp_pos: op.ref_pos
        for op in ops
        if op.kind in ("match", "sub")
    }


def _span_all_match(ops: Sequence[AlignOp], start: int, end: int) -> bool:
    matched = {op.ref_pos for op in ops if op.kind == "match"}
    return all(pos in matched for pos in range(start, end))


def _vocab_status(
    ref: Reference, span_idx: int, vocab: set[tuple[str, ...]] | None
) -> str:
    flag = ref.iv_flags[span_idx]
    if flag is True:
        return "iv"
    if flag is False:
        return "oov"
    if vocab is not None:
        span = ref.entities[span_idx]
        return "iv" if span.surface in vocab else "oov"
    return "unknown"


def breakdown_utterance(
    ref: Reference,
    hyp_before: NeaHypothesis,
    corrected: Sequence[str],
    vocab: set[tuple[str, ...]] | None = None,
) -> BreakdownReport:
    report = BreakdownReport()
    ref_plain = ref.plain_tokens()
    ref_ranges = ref.span_ranges()
    report.ref_spans = len(ref_ranges)
    hyp_plain = hyp_before.plain_tokens()
    hyp_ranges = hyp_before.span_ranges()
    if not ref_plain:
        report.spurious = len(hyp_ranges)
        return report
    pre = align(ref_plain, hyp_plain)
    hyp_to_ref = _aligned_ref_positions(pre.ops)
    # overlap of every hypothesis span with every reference span
    candidates: list[tuple[int, int, int]] = []
    for h_idx, (hs, he) in enumerate(hyp_ranges):
        touched = {hyp_to_ref[p] for p in range(hs, he) if p in hyp_to_ref}
        for r_idx, (rs, re_) in enumerate(ref_ranges):
            overlap = sum(1 for pos in touched if rs <= pos < re_)
            if overlap:
                candidates.append((overlap, r_idx, h_idx))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    matched_refs: set[int] = set()
    matched_hyps: set[int] = set()
    for overlap, r_idx, h_idx in candidates:
        if r_idx in matched_refs or h_idx in matched_hyps:
            continue
        matched_refs.add(r_idx)
        matched_hyps.add(h_idx)
    report.spurious = len(hyp_ranges) - len(matched_hyps)
    report.not_extracted = len(ref_ranges) - len(matched_refs)
    report.extracted = len(matched_refs)
    if not matched_refs:
        return report
    post = align(ref_plain, tuple(corrected))
    for r_idx in matched_refs:
        rs, re_ = ref_ranges[r_idx]
        status = _vocab_status(ref, r_idx, vocab)
        if status == "iv":
            report.extracted_iv += 1
        elif status == "oov":
            report.extracted_oov += 1
        else:
            report.extracted_unknown += 1
        if not _span_all_match(pre.ops, rs, re_):
            report.sub_error_pre += 1
        if not _span_all_match(post.ops, rs, re_):
            report.sub_error_post += 1
    return report


# ---------------------------------------------------------------------------
# corpus-level aggregation
# ---------------------------------------------------------------------------


def _pair_by_id(
    refs: Sequence[Reference], others: Mapping[str, object], what: str
) -> None:
    ref_ids = [r.id for r in refs]
    if len(set(ref_ids)) != len(ref_ids):
        dupes = sorted({i for i in ref_ids if ref_ids.count(i) > 1})
        raise IdMismatchError(f"duplicate reference ids: {dupes[:5]}")
    missing = [i for i in ref_ids if i not in others]
    extra = [i for i in others if i not in set(ref_ids)]
    if missing or extra:
        raise IdMismatchError(
            f"{what} ids disagree with references"
            f" (missing: {missing[:5]}, unexpected: {extra[:5]})"
        )


def corpus_report(
    refs: Sequence[Reference],
    hyps: Mapping[str, Sequence[str]],
    hyps_raw: Mapping[str, NeaHypothesis] | None = None,
    vocab: set[tuple[str, ...]] | None = None,
    per_utt: bool = False,
) -> dict:
    """Aggregate CER-all, CER-NE and the optional extraction breakdown.

    ``hyps`` maps utterance id to corrected plain tokens; ``hyps_raw``,
    when given, maps id to the uncorrected tagged hypothesis and enables
    the breakdown section.
    """
    _pair_by_id(refs, hyps, "hypothesis")
    if hyps_raw is not None:
        _pair_by_id(refs, hyps_raw, "raw hypothesis")
    all_total = ZERO_OPS
    ne_total = ZERO_OPS
    details = []
    breakdown = BreakdownReport() if hyps_raw is not None else None
    for ref in refs:
        scored = score_utterance(ref, hyps[ref.id])
        all_total += scored.all_ops
        if scored.ne_ops is not None:
            ne_total += scored.ne_ops
        if breakdown is not None:
            breakdown.merge(
                breakdown_utterance(ref, hyps_raw[ref.id], hyps[ref.id], vocab)
            )
        if per_utt:
            details.append(
                {
                    "id": ref.id,
                    "cer_all": scored.all_ops.rate,
                    "ops_all": _ops_dict(scored.all_ops),
                    "cer_ne": scored.ne_ops.rate if scored.ne_ops else None,
                    "ops_ne": _ops_dict(scored.ne_ops) if scored.ne_ops else None,
                }
            )
    report = {
        "utterances": len(refs),
        "cer_all": all_total.rate if all_total.n_ref else None,
        "ops_all": _ops_dict(all_total),
        "cer_ne": ne_total.rate if ne_total.n_ref else None,
        "ops_ne": _ops_dict(ne_total),
    }
    if breakdown is not None:
        report["breakdown"] = breakdown.to_dict()
    if per_utt:
        report["per_utterance"] = details
    return report


def _ops_dict(ops: EditOps) -> dict:
    return {"subs": ops.subs, "ins": ops.ins, "dels": ops.dels, "n_ref": ops.n_ref}
