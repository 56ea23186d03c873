"""Readers and writers for utterance, dictionary-adjacent, and report files.

Hypotheses and references travel as JSONL (one object per line with an
``id`` and a flat ``tokens`` array, markers inline; references may add
``iv_flags``) or as marker-text (whitespace-separated tokens, one
utterance per line, ids derived from line numbers). All output files
are written to a temporary sibling and renamed into place so failed
runs leave no partial output.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .corrector import CorrectionOutcome, outcome_to_dict
from .nea import FormatConfig, NeaHypothesis, Reference, parse_reference, render_tokens


class RecordFormatError(ValueError):
    """An input line is not a well-formed utterance record."""

    def __init__(self, message: str, line_no: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def detect_form(path: Union[str, Path]) -> str:
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json") else "text"


def iter_token_records(
    lines: Iterable[str], form: str = "jsonl"
) -> Iterator[tuple[int, str, list[str], list]]:
    """Yield (line_no, id, tokens, iv_flags) from utterance lines."""
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if form == "jsonl":
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON: {exc.msg}", line_no)
            if not isinstance(obj, dict) or "id" not in obj or "tokens" not in obj:
                raise RecordFormatError("expected an object with id and tokens", line_no)
            tokens = obj["tokens"]
            if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
                raise RecordFormatError("tokens must be an array of strings", line_no)
            flags = obj.get("iv_flags", [])
            if not isinstance(flags, list):
                raise RecordFormatError("iv_flags must be an array", line_no)
            yield line_no, str(obj["id"]), tokens, flags
        else:
            yield line_no, f"u{line_no}", line.split(), []


def read_token_records(
    path: Union[str, Path], form: str | None = None
) -> list[tuple[int, str, list[str], list]]:
    p = Path(path)
    form = form or detect_form(p)
    with open(p, encoding="utf-8-sig") as fh:
        return list(iter_token_records(fh, form))


def read_references(
    path: Union[str, Path], fmt: FormatConfig, form: str | None = None
) -> list[Reference]:
    refs = []
    for line_no, utt_id, tokens, flags in read_token_records(path, form):
        try:
            refs.append(parse_reference(utt_id, tokens, fmt, tuple(flags)))
        except ValueError as exc:
            raise RecordFormatError(str(exc), line_no) from None
    return refs


def read_plain_map(path: Union[str, Path], form: str | None = None) -> dict[str, tuple[str, ...]]:
    """id -> token sequence, for already-corrected (marker-free) files."""
    out: dict[str, tuple[str, ...]] = {}
    for _, utt_id, tokens, _ in read_token_records(path, form):
        out[utt_id] = tuple(tokens)
    return out


def read_vocab(path: Union[str, Path]) -> set[tuple[str, ...]]:
    vocab = set()
    for raw in Path(path).read_text(encoding="utf-8-sig").splitlines():
        tokens = tuple(raw.split())
        if tokens:
            vocab.add(tokens)
    return vocab


class AtomicWriter:
    """Write to ``path.tmp`` and rename into place on success."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.tmp = self.path.with_name(self.path.name + ".tmp")
        self.fh = None

    def __enter__(self):
        self.fh = open(self.tmp, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            self.tmp.unlink(missing_ok=True)
        return False


def write_hypotheses(
    path: Union[str, Path], hyps: Iterable[NeaHypothesis], fmt_name: str = "safe"
) -> None:
    fmt = FormatConfig.from_name(fmt_name)
    with AtomicWriter(path) as fh:
        for hyp in hyps:
            obj = {"id": hyp.id, "tokens": list(render_tokens(hyp, fmt))}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_references(
    path: Union[str, Path], refs: Iterable[Reference], fmt_name: str = "safe"
) -> None:
    fmt = FormatConfig.from_name(fmt_name)
    with AtomicWriter(path) as fh:
        for ref in refs:
            obj = {
                "id": ref.id,
                "tokens": list(render_tokens(ref, fmt)),
                "iv_flags": list(ref.iv_flags),
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_corrected(path: Union[str, Path], outcomes: Iterable[CorrectionOutcome]) -> None:
    with AtomicWriter(path) as fh:
        for outcome in outcomes:
            obj = {"id": outcome.id, "tokens": list(outcome.corrected)}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_decisions(path: Union[str, Path], outcomes: Iterable[CorrectionOutcome]) -> None:
    with AtomicWriter(path) as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome_to_dict(outcome), ensure_ascii=False) + "\n")


def write_json(path: Union[str, Path], payload: dict) -> None:
    with AtomicWriter(path) as fh:
        fh.write(json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def write_sweep_csv(path: Union[str, Path], rows: Sequence[dict], columns: Sequence[str]) -> None:
    with AtomicWriter(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)
