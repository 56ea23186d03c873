"""Seeded error channel that corrupts gold utterances into noisy
tagged hypotheses, standing in for a live recognizer.

Per entity span, independently: the surface may be swapped for an
enharmonic variant from a confusion table, the span may be emitted
untagged (extraction failure), and the phoneme sequence undergoes
per-position substitution/insertion/deletion noise. Optionally a run of
plain tokens is spuriously tagged as an entity. Plain tokens otherwise
pass through unchanged, because only span behavior affects the
entity-restricted error rate.

Corruption is a pure function of (utterance id, seed): each utterance
draws from a Mersenne Twister generator seeded with the first 8 bytes
of SHA-256("nephon:<seed>:<id>"), so batches can be corrupted in any
order, or in parallel, with identical results.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .corrector import ThresholdLike, as_threshold, correct, decide_span
from .lexicon import Lexicon
from .nea import NeSpan, NeaHypothesis, Reference, Segment
from .scoring import ZERO_OPS, score_utterance

logger = logging.getLogger(__name__)

PRESETS: dict[str, dict[str, float]] = {
    # roughly one span in ten missed, half enharmonically confused
    "default": {
        "p_phon_sub": 0.05,
        "p_phon_ins": 0.02,
        "p_phon_del": 0.02,
        "p_surface_confuse": 0.5,
        "p_miss": 0.1,
        "p_false": 0.05,
    },
    "clean": {
        "p_phon_sub": 0.0,
        "p_phon_ins": 0.0,
        "p_phon_del": 0.0,
        "p_surface_confuse": 0.0,
        "p_miss": 0.0,
        "p_false": 0.0,
    },
    "confusion_only": {
        "p_phon_sub": 0.0,
        "p_phon_ins": 0.0,
        "p_phon_del": 0.0,
        "p_surface_confuse": 1.0,
        "p_miss": 0.0,
        "p_false": 0.0,
    },
}


@dataclass(frozen=True, slots=True)
class ChannelParams:
    p_phon_sub: float = 0.05
    p_phon_ins: float = 0.02
    p_phon_del: float = 0.02
    p_surface_confuse: float = 0.5
    p_miss: float = 0.1
    p_false: float = 0.05
    seed: int = 0
    corrupt_plain: bool = False

    def __post_init__(self) -> None:
        for name in (
            "p_phon_sub",
            "p_phon_ins",
            "p_phon_del",
            "p_surface_confuse",
            "p_miss",
            "p_false",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.p_phon_sub + self.p_phon_ins + self.p_phon_del > 1.0:
            raise ValueError("per-position phoneme noise probabilities must sum to <= 1")

    @classmethod
    def preset(cls, name: str, seed: int = 0) -> "ChannelParams":
        if name not in PRESETS:
            raise ValueError(f"unknown channel preset {name!r} (have {sorted(PRESETS)})")
        return cls(seed=seed, **PRESETS[name])

    @classmethod
    def from_file(cls, path: Union[str, Path], seed: int | None = None) -> "ChannelParams":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(obj, dict):
            raise ValueError("channel config must be a JSON object")
        if seed is not None:
            obj["seed"] = seed
        return cls(**obj)

    def with_seed(self, seed: int) -> "ChannelParams":
        return replace(self, seed=seed)


class ConfusionTable:
    """Enharmonic surface variants keyed by exact phoneme sequence."""

    __slots__ = ("variants",)

    def __init__(
        self, variants: Mapping[tuple[str, ...], Sequence[tuple[str, ...]]] | None = None
    ):
        self.variants: dict[tuple[str, ...], tuple[tuple[str, ...], ...]] = {
            tuple(k): tuple(tuple(v) for v in vs) for k, vs in (variants or {}).items()
        }

    def __len__(self) -> int:
        return len(self.variants)

    def lookup(self, phonemes: Sequence[str]) -> tuple[tuple[str, ...], ...]:
        return self.variants.get(tuple(phonemes), ())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ConfusionTable":
        table: dict[tuple[str, ...], tuple[tuple[str, ...], ...]] = {}
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8-sig").splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"confusion table line {line_no}: invalid JSON: {exc.msg}")
            phonemes = tuple(obj["phonemes"])
            variants = tuple(tuple(v) for v in obj["variants"])
            if not phonemes or not all(variants):
                raise ValueError(f"confusion table line {line_no}: empty key or variant")
            table[phonemes] = table.get(phonemes, ()) + variants
        return cls(table)

    def dump(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for phonemes, variants in self.variants.items():
                fh.write(
                    json.dumps(
                        {"phonemes": list(phonemes), "variants": [list(v) for v in variants]},
                        ensure_ascii=False,
                    )
                    + "\n"
                )


def utterance_rng(seed: int, utt_id: str) -> random.Random:
    digest = hashlib.sha256(f"nephon:{seed}:{utt_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def phoneme_inventory(refs: Iterable[Reference]) -> tuple[str, ...]:
    symbols = {p for ref in refs for span in ref.entities for p in span.phonemes}
    return tuple(sorted(symbols))


def _corrupt_positions(
    tokens: Sequence[str],
    rng: random.Random,
    inventory: Sequence[str],
    p_sub: float,
    p_ins: float,
    p_del: float,
) -> tuple[str, ...]:
    out: list[str] = []
    for tok in tokens:
        u = rng.random()
        if u < p_sub:
            out.append(rng.choice(inventory))
        elif u < p_sub + p_ins:
            out.append(rng.choice(inventory))
            out.append(tok)
        elif u < p_sub + p_ins + p_del:
            continue
        else:
            out.append(tok)
    return tuple(out)


def _confused_surface(
    span: NeSpan, table: ConfusionTable, rng: random.Random, utt_id: str
) -> tuple[str, ...]:
    options = [v for v in table.lookup(span.phonemes) if v != span.surface]
    if not options:
        logger.warning(
            "no confusion entry for phonemes %s (utterance %s); span passes through",
            " ".join(span.phonemes),
            utt_id,
        )
        return span.surface
    return tuple(rng.choice(options))


def _spurious_span(segments: list[Segment], rng: random.Random, inventory: Sequence[str]) -> None:
    """Tag a random run of plain tokens as an entity, in place."""
    runs: list[tuple[int, int]] = []
    start = None
    for idx, seg in enumerate(segments):
        if isinstance(seg, str):
            if start is None:
                start = idx
        else:
            if start is not None:
                runs.append((start, idx))
                start = None
    if start is not None:
        runs.append((start, len(segments)))
    if not runs or not inventory:
        return
    run_start, run_end = runs[rng.randrange(len(runs))]
    length = min(run_end - run_start, rng.randint(1, 3))
    offset = rng.randrange(run_end - run_start - length + 1)
    begin = run_start + offset
    surface = tuple(segments[begin:begin + length])  # type: ignore[arg-type]
    phonemes = tuple(rng.choice(inventory) for _ in range(rng.randint(2, 6)))
    segments[begin:begin + length] = [NeSpan(surface, phonemes)]


def corrupt(
    ref: Reference,
    params: ChannelParams,
    table: ConfusionTable,
    inventory: Sequence[str],
) -> NeaHypothesis:
    """Derive a noisy tagged hypothesis from one gold utterance."""
    rng = utterance_rng(params.seed, ref.id)
    segments: list[Segment] = []
    for seg in ref.segments:
        if isinstance(seg, str):
            segments.append(seg)
            continue
        surface = seg.surface
        if rng.random() < params.p_surface_confuse:
            surface = _confused_surface(seg, table, rng, ref.id)
        if rng.random() < params.p_miss:
            segments.extend(surface)
            continue
        phonemes = _corrupt_positions(
            seg.phonemes, rng, inventory, params.p_phon_sub, params.p_phon_ins, params.p_phon_del
        )
        segments.append(NeSpan(surface, phonemes))
    if params.corrupt_plain:
        plain_inventory = tuple(sorted({s for s in segments if isinstance(s, str)}))
        if plain_inventory:
            rebuilt: list[Segment] = []
            for seg in segments:
                if isinstance(seg, str):
                    rebuilt.extend(
                        _corrupt_positions(
                            (seg,),
                            rng,
                            plain_inventory,
                            params.p_phon_sub,
                            params.p_phon_ins,
                            params.p_phon_del,
                        )
                    )
                else:
                    rebuilt.append(seg)
            segments = rebuilt
    if rng.random() < params.p_false:
        _spurious_span(segments, rng, inventory)
    return NeaHypothesis(ref.id, tuple(segments))


def corrupt_corpus(
    refs: Sequence[Reference],
    params: ChannelParams,
    table: ConfusionTable,
    inventory: Sequence[str] | None = None,
) -> list[NeaHypothesis]:
    inv = tuple(inventory) if inventory is not None else phoneme_inventory(refs)
    return [corrupt(ref, params, table, inv) for ref in refs]


# ---------------------------------------------------------------------------
# experiment sweeps
# ---------------------------------------------------------------------------


def _corpus_rates(
    refs: Sequence[Reference], corrected: Mapping[str, Sequence[str]]
) -> tuple[float | None, float | None]:
    all_total = ZERO_OPS
    ne_total = ZERO_OPS
    for ref in refs:
        scored = score_utterance(ref, corrected[ref.id])
        all_total += scored.all_ops
        if scored.ne_ops is not None:
            ne_total += scored.ne_ops
    cer_all = all_total.rate if all_total.n_ref else None
    cer_ne = ne_total.rate if ne_total.n_ref else None
    return cer_all, cer_ne


def run_dict_sweep(
    refs: Sequence[Reference],
    base_lexicon: Lexicon,
    sizes: Sequence[int],
    params: ChannelParams,
    table: ConfusionTable,
    threshold: ThresholdLike,
) -> list[dict]:
    """CER-NE as a function of dictionary size.

    The corrupted hypotheses are generated once; each row scores the
    correction that uses only the first ``size`` registrations.
    """
    th = as_threshold(threshold)
    hyps = corrupt_corpus(refs, params, table)
    rows = []
    for size in sizes:
        if not 0 <= size <= len(base_lexicon):
            raise ValueError(f"dictionary size {size} out of range 0..{len(base_lexicon)}")
        lex = base_lexicon.first(size)
        corrected = {h.id: correct(h, lex, th).corrected for h in hyps}
        _, cer_ne = _corpus_rates(refs, corrected)
        rows.append({"I": size, "cer_ne": cer_ne})
    return rows


def run_threshold_sweep(
    refs: Sequence[Reference],
    lexicon: Lexicon,
    thresholds: Sequence[ThresholdLike],
    params: ChannelParams,
    table: ConfusionTable,
) -> list[dict]:
    """CER-all and CER-NE as a function of the replacement threshold.

    One corrupt pass is shared by all rows, and the per-span dictionary
    scans are computed once since only the gate depends on the
    threshold.
    """
    hyps = corrupt_corpus(refs, params, table)
    matches: list[list] = []
    for hyp in hyps:
        row = []
        for span in hyp.entities:
            if len(lexicon) and not span.degenerate:
                row.append(lexicon.best_match(span.phonemes))
            else:
                row.append(None)
        matches.append(row)
    rows = []
    for raw_th in thresholds:
        th = as_threshold(raw_th)
        corrected: dict[str, tuple[str, ...]] = {}
        for hyp, span_matches in zip(hyps, matches):
            out: list[str] = []
            n = 0
            for seg in hyp.segments:
                if isinstance(seg, NeSpan):
                    decision = decide_span(n + 1, seg, lexicon, th, span_matches[n])
                    out.extend(decision.surface_after)
                    n += 1
                else:
                    out.append(seg)
            corrected[hyp.id] = tuple(out)
        cer_all, cer_ne = _corpus_rates(refs, corrected)
        rows.append({"v_th": float(th), "cer_all": cer_all, "cer_ne": cer_ne})
    return rows
