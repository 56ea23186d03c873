"""Gestalt pattern matching between token sequences.

Similarity is ``2*K / (len(a) + len(b))`` where ``K`` counts the tokens
matched by the Ratcliff/Obershelp procedure: find the longest common
contiguous block, then recurse on the pieces to its left and to its
right, summing block lengths. When several blocks tie for longest, the
one with the smallest start in ``a`` wins, then the smallest start in
``b``; the fixed rule makes results deterministic and lets a naive
reference implementation reproduce them exactly.

Scores carry the matched count and the summed length so the ratio is
available as an exact fraction; threshold comparisons must never go
through floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ORACLE_MAX_TOTAL_LENGTH = 24


class SizeLimitExceededError(ValueError):
    """Inputs too long for the exponential-safe reference implementation."""


@dataclass(frozen=True, slots=True)
class SimilarityScore:
    """Matched-token count plus the summed input lengths."""

    matched: int
    length_sum: int

    @property
    def ratio(self) -> Fraction:
        # two empty inputs score 0, not 1: an empty phoneme sequence
        # must never "perfectly match" anything
        if self.length_sum == 0:
            return Fraction(0)
        return Fraction(2 * self.matched, self.length_sum)

    @property
    def as_float(self) -> float:
        return float(self.ratio)

    def exact(self) -> str:
        r = self.ratio
        return f"{r.numerator}/{r.denominator}"


def _longest_block(
    a: Sequence[str],
    b: Sequence[str],
    alo: int,
    ahi: int,
    blo: int,
    bhi: int,
    b2j: dict,
) -> tuple[int, int, int]:
    """Longest block a[i:i+k] == b[j:j+k] within the given windows.

    Ties resolve to the smallest i, then the smallest j: block ends are
    visited in ascending i, and for equal size an earlier end implies an
    earlier start, so the first maximal block found is the canonical one.
    """
    besti, bestj, bestsize = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        newj2len: dict[int, int] = {}
        for j in b2j.get(a[i], ()):
            if j < blo:
                continue
            if j >= bhi:
                break
            k = j2len.get(j - 1, 0) + 1
            newj2len[j] = k
            if k > bestsize:
                besti, bestj, bestsize = i - k + 1, j - k + 1, k
        j2len = newj2len
    return besti, bestj, bestsize


def _matched_count(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    b2j: dict[str, list[int]] = {}
    for j, tok in enumerate(b):
        b2j.setdefault(tok, []).append(j)
    total = 0
    windows = [(0, len(a), 0, len(b))]
    while windows:
        alo, ahi, blo, bhi = windows.pop()
        i, j, k = _longest_block(a, b, alo, ahi, blo, bhi, b2j)
        if k:
            total += k
            if alo < i and blo < j:
                windows.append((alo, i, blo, j))
            if i + k < ahi and j + k < bhi:
                windows.append((i + k, ahi, j + k, bhi))
    return total


def gestalt_similarity(a: Sequence[str], b: Sequence[str]) -> SimilarityScore:
    """Ratcliff/Obershelp similarity of two token sequences."""
    return SimilarityScore(_matched_count(a, b), len(a) + len(b))


def _all_maximal_blocks(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int, int]]:
    """Every (size, i, j) common block found by direct extension scanning."""
    found = []
    la, lb = len(a), len(b)
    for i in range(la):
        for j in range(lb):
            if a[i] != b[j]:
                continue
            k = 1
            while i + k < la and j + k < lb and a[i + k] == b[j + k]:
                k += 1
            found.append((k, i, j))
    return found


def _naive_matched(a: tuple, b: tuple) -> tuple[int, bool]:
    """Matched count by literal recursion on slices; also reports ties."""
    blocks = _all_maximal_blocks(a, b)
    if not blocks:
        return 0, False
    best = max(k for k, _, _ in blocks)
    candidates = sorted((i, j) for k, i, j in blocks if k == best)
    i, j = candidates[0]
    tied = len(candidates) > 1
    left, left_tied = _naive_matched(a[:i], b[:j])
    right, right_tied = _naive_matched(a[i + best:], b[j + best:])
    return best + left + right, tied or left_tied or right_tied


def oracle_similarity(a: Sequence[str], b: Sequence[str]) -> SimilarityScore:
    """Reference implementation for testing, exponential-safe sizes only.

    Enumerates every common block outright and recurses on actual slice
    copies; shares no code with gestalt_similarity beyond the tie rule.
    """
    total = len(a) + len(b)
    if total > ORACLE_MAX_TOTAL_LENGTH:
        raise SizeLimitExceededError(
            f"combined length {total} exceeds cap {ORACLE_MAX_TOTAL_LENGTH}"
        )
    matched, _ = _naive_matched(tuple(a), tuple(b))
    return SimilarityScore(matched, total)
