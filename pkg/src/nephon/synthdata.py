"""Seeded generator for desk-scale evaluation corpora.

Produces a pool of synthetic personal names, gold utterances that
mention them, a dictionary whose first entries are exactly the
in-corpus names followed by distractors, and a confusion table of
enharmonic variants.

Geometry notes, tuned so the channel's error modes are all observable:

* In-corpus names use four phonemes over a small inventory, so one
  noisy phoneme moves the similarity to a known rung (sub 3/4, del 6/7,
  ins 8/9) rather than drowning in length variance.
* Distractors are mostly three-phoneme "stem" names densely covering
  the short-sequence space, the way a large name dictionary is full of
  short near-miss entries. A lightly corrupted query then acquires a
  wrong best match just below exact similarity while clean queries
  still resolve to their own entry, which is what makes both a too-low
  and a too-high threshold measurably worse than a moderate one.
* Variant surfaces are token-disjoint from the gold surface and the
  same length, so an uncorrected confusion is wrong in every position,
  and distractor surfaces never collide with gold ones, so a wrong
  replacement never earns partial credit.

Run ``python -m nephon.synthdata --out DIR`` to materialize the files
consumed by the command-line workflows.
"""

from __future__ import annotations

import argparse
import itertools
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .channel import ConfusionTable
from .lexicon import DictEntry, Lexicon
from .nea import NeSpan, Reference, Segment

PHONEME_INVENTORY = tuple("a e i o u k s t".split())
NAME_PHONEME_LENGTH = 4
STEM_PHONEME_LENGTH = 3
MAX_STEM_DISTRACTORS = 480
FILLER_WORDS = tuple(f"w{i:02d}" for i in range(120))


@dataclass(frozen=True, slots=True)
class SynthName:
    surface: tuple[str, ...]
    phonemes: tuple[str, ...]
    variants: tuple[tuple[str, ...], ...]
    in_vocabulary: bool


@dataclass(slots=True)
class SynthCorpus:
    refs: list[Reference]
    lexicon: Lexicon  # in-corpus names first, then distractors
    table: ConfusionTable
    names: list[SynthName]
    n_corpus_names: int

    @property
    def gold_lexicon(self) -> Lexicon:
        return self.lexicon.first(self.n_corpus_names)

    def vocab(self) -> set[tuple[str, ...]]:
        return {n.surface for n in self.names[: self.n_corpus_names] if n.in_vocabulary}


class _Pools:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.phonemes: set = set()
        self.surfaces: set = set()

    def fresh_phonemes(self, length: int) -> tuple[str, ...]:
        while True:
            seq = tuple(self.rng.choice(PHONEME_INVENTORY) for _ in range(length))
            if seq not in self.phonemes:
                self.phonemes.add(seq)
                return seq

    def fresh_surface(self, prefix: str, length: int) -> tuple[str, ...]:
        while True:
            tokens = tuple(f"{prefix}{self.rng.randrange(400):03d}" for _ in range(length))
            if tokens not in self.surfaces:
                self.surfaces.add(tokens)
                return tokens


def _make_name(pools: _Pools, phonemes: tuple[str, ...], prefix: str, variant_prefix: str,
               n_variants: int, in_vocabulary: bool) -> SynthName:
    length = pools.rng.randint(2, 3)
    surface = pools.fresh_surface(prefix, length)
    variants = tuple(pools.fresh_surface(variant_prefix, length) for _ in range(n_variants))
    return SynthName(surface, phonemes, variants, in_vocabulary)


def build_corpus(
    seed: int,
    n_utterances: int = 300,
    n_corpus_names: int = 33,
    n_distractors: int = 967,
    span_rate: float = 0.85,
    two_span_rate: float = 0.12,
) -> SynthCorpus:
    """Generate references, dictionary, and confusion table.

    ``span_rate`` of the utterances mention one name, ``two_span_rate``
    of those a second one; the rest are plain. Name mentions cycle
    through the pool so every name is exercised.
    """
    rng = random.Random(seed)
    pools = _Pools(rng)
    corpus_names = [
        _make_name(pools, pools.fresh_phonemes(NAME_PHONEME_LENGTH), "g", "v",
                   rng.randint(1, 2), idx % 2 == 0)
        for idx in range(n_corpus_names)
    ]
    stems = list(itertools.product(PHONEME_INVENTORY, repeat=STEM_PHONEME_LENGTH))
    rng.shuffle(stems)
    stems = [s for s in stems if s not in pools.phonemes]
    n_stems = min(MAX_STEM_DISTRACTORS, n_distractors, len(stems))
    distractors = []
    for idx in range(n_distractors):
        if idx < n_stems:
            phonemes = stems[idx]
            pools.phonemes.add(phonemes)
        else:
            phonemes = pools.fresh_phonemes(rng.randint(4, 5))
        distractors.append(_make_name(pools, phonemes, "d", "x", 1, False))
    names = corpus_names + distractors
    entries = [DictEntry(n.surface, n.phonemes) for n in names]
    table = ConfusionTable({n.phonemes: n.variants for n in names})
    iv_by_phonemes = {n.phonemes: n.in_vocabulary for n in corpus_names}
    refs = []
    mention = 0
    for u in range(n_utterances):
        segments: list[Segment] = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(3, 8))]
        n_spans = 0
        if corpus_names and rng.random() < span_rate:
            n_spans = 2 if rng.random() < two_span_rate else 1
        for _ in range(n_spans):
            name = corpus_names[mention % len(corpus_names)]
            mention += 1
            pos = rng.randrange(len(segments) + 1)
            segments.insert(pos, NeSpan(name.surface, name.phonemes))
        # iv_flags follow span position order; phoneme sequences are unique
        ordered_flags = tuple(
            iv_by_phonemes[seg.phonemes] for seg in segments if isinstance(seg, NeSpan)
        )
        refs.append(Reference(f"utt{u:05d}", tuple(segments), ordered_flags))
    return SynthCorpus(refs, Lexicon(entries), table, names, n_corpus_names)


def write_corpus_files(corpus: SynthCorpus, out_dir: Path, fmt_name: str = "safe") -> list[Path]:
    from .fileio import write_references

    out_dir.mkdir(parents=True, exist_ok=True)
    refs_path = out_dir / "refs.jsonl"
    dict_path = out_dir / "dict.tsv"
    table_path = out_dir / "confusion.jsonl"
    vocab_path = out_dir / "vocab.txt"
    write_references(refs_path, corpus.refs, fmt_name)
    with open(dict_path, "w", encoding="utf-8") as fh:
        for entry in corpus.lexicon:
            fh.write(" ".join(entry.surface) + "\t" + " ".join(entry.phonemes) + "\n")
    corpus.table.dump(table_path)
    with open(vocab_path, "w", encoding="utf-8") as fh:
        for surface in sorted(corpus.vocab()):
            fh.write(" ".join(surface) + "\n")
    return [refs_path, dict_path, table_path, vocab_path]


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m nephon.synthdata",
        description="generate a synthetic evaluation corpus (references, dictionary, confusion table)",
    )
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--utterances", type=int, default=300)
    parser.add_argument("--names", type=int, default=33)
    parser.add_argument("--distractors", type=int, default=967)
    parser.add_argument("--markers", choices=("safe", "paper"), default="safe")
    args = parser.parse_args(argv)
    corpus = build_corpus(
        args.seed,
        n_utterances=args.utterances,
        n_corpus_names=args.names,
        n_distractors=args.distractors,
    )
    paths = write_corpus_files(corpus, args.out, args.markers)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
