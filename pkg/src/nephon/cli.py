"""Command-line entry point.

Subcommands cover the whole workflow: ``correct`` rewrites tagged
hypotheses against a dictionary, ``score`` computes CER-all / CER-NE
and the extraction breakdown, ``simulate`` corrupts gold references
through the synthetic channel, ``sweep-dict`` and ``sweep-threshold``
reproduce the dictionary-size and threshold experiments, ``sim`` is a
similarity debugging probe, and ``serve`` starts the HTTP service.

``correct``, ``score`` and ``sim`` can also run as thin clients against
a running service via ``--server URL``; outputs are identical to local
runs. All randomness flows from ``--seed``; logs go to stderr and data
to files, so runs with the same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .channel import ChannelParams, ConfusionTable, corrupt_corpus, run_dict_sweep, run_threshold_sweep
from .corrector import as_threshold, correct_token_records
from .fileio import (
    RecordFormatError,
    read_plain_map,
    read_references,
    read_token_records,
    read_vocab,
    write_corrected,
    write_decisions,
    write_hypotheses,
    write_json,
    write_sweep_csv,
)
from .lexicon import load_lexicon
from .nea import FormatConfig, parse_hypothesis
from .scoring import IdMismatchError, corpus_report
from .similarity import gestalt_similarity

logger = logging.getLogger("nephon")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


class ConfigError(Exception):
    """Bad flags, unreadable inputs, unusable configuration."""


class StrictDataError(Exception):
    """Malformed data encountered while --strict is active."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.format_usage().strip()}\nerror: {message}")


def _add_markers_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--markers",
        choices=("safe", "paper"),
        default="safe",
        help="marker token set: safe = <SNE>/<SEP>/<ENE>, paper = literal '<' ',' '>'",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="nephon", description="enharmonic named-entity correction for ASR output")
    parser.add_argument("--version", action="version", version=f"nephon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="correct tagged hypotheses against a dictionary")
    p.add_argument("--dict", dest="dict_path", help="dictionary file (.tsv or .jsonl)")
    p.add_argument("--threshold", default="0.8", help="replacement threshold in [0,1], default 0.8")
    _add_markers_flag(p)
    p.add_argument("--in", dest="in_path", required=True, help="hypotheses (.jsonl or marker-text)")
    p.add_argument("--out", dest="out_path", required=True, help="corrected tokens, JSONL")
    p.add_argument("--decisions", dest="decisions_path", help="per-span decision log, JSONL")
    p.add_argument("--strict", action="store_true", help="exit 2 on malformed utterances instead of skipping")
    p.add_argument("--server", help="run against this service URL instead of loading the dictionary")

    p = sub.add_parser("score", help="CER-all / CER-NE and extraction breakdown")
    p.add_argument("--refs", required=True, help="gold references, JSONL")
    p.add_argument("--hyps", required=True, help="corrected (plain) hypotheses, JSONL")
    p.add_argument("--hyps-raw", dest="hyps_raw", help="uncorrected tagged hypotheses, enables breakdown")
    p.add_argument("--vocab", help="in-vocabulary surface list, one space-joined entry per line")
    p.add_argument("--report", required=True, help="output report path, JSON")
    p.add_argument("--per-utt", dest="per_utt", action="store_true", help="include per-utterance detail")
    p.add_argument("--require-ne", dest="require_ne", action="store_true",
                   help="fail when the references contain no entity spans")
    _add_markers_flag(p)
    p.add_argument("--server", help="run against this service URL")

    p = sub.add_parser("simulate", help="corrupt gold references into noisy tagged hypotheses")
    p.add_argument("--refs", required=True)
    p.add_argument("--out", dest="out_path", required=True, help="corrupted hypotheses, JSONL")
    p.add_argument("--confusion", required=True, help="enharmonic confusion table, JSONL")
    p.add_argument("--channel", default="default", help="channel preset name or JSON config path")
    p.add_argument("--seed", type=int, default=0)
    _add_markers_flag(p)

    p = sub.add_parser("sweep-dict", help="CER-NE as a function of dictionary size")
    p.add_argument("--refs", required=True)
    p.add_argument("--dict", dest="dict_path", required=True)
    p.add_argument("--confusion", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated entry counts, e.g. 0,33,100,1000")
    p.add_argument("--threshold", default="0.8")
    p.add_argument("--channel", default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="out_path", required=True, help="output CSV")
    _add_markers_flag(p)

    p = sub.add_parser("sweep-threshold", help="CER-all/CER-NE as a function of the threshold")
    p.add_argument("--refs", required=True)
    p.add_argument("--dict", dest="dict_path", required=True)
    p.add_argument("--confusion", required=True)
    p.add_argument("--thresholds", required=True, help="comma-separated thresholds, e.g. 0,0.5,0.8,1.0")
    p.add_argument("--channel", default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="out_path", required=True, help="output CSV")
    _add_markers_flag(p)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--dict", dest="dict_path", help="dictionary to load at startup")
    p.add_argument("--threshold", default="0.8", help="default threshold for /correct")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8300)
    _add_markers_flag(p)

    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _threshold_or_config_error(text: str) -> Fraction:
    try:
        return as_threshold(text)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _load_lexicon_or_config_error(path: Optional[str]):
    if not path:
        raise ConfigError("--dict is required (or use --server)")
    try:
        return load_lexicon(path)
    except OSError as exc:
        raise ConfigError(f"cannot read dictionary: {exc}")
    except ValueError as exc:
        raise ConfigError(f"bad dictionary: {exc}")


def _read_records_or_config_error(path: str):
    try:
        return read_token_records(path)
    except OSError as exc:
        raise ConfigError(f"cannot read input: {exc}")
    except RecordFormatError as exc:
        raise ConfigError(str(exc))


def _channel_params(source: str, seed: int) -> ChannelParams:
    try:
        if source.endswith(".json") or "/" in source or "\\" in source:
            return ChannelParams.from_file(source, seed=seed)
        return ChannelParams.preset(source, seed=seed)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad channel config: {exc}")


def _confusion_table(path: str) -> ConfusionTable:
    try:
        return ConfusionTable.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad confusion table: {exc}")


def _read_refs(path: str, fmt: FormatConfig):
    try:
        return read_references(path, fmt)
    except OSError as exc:
        raise ConfigError(f"cannot read references: {exc}")
    except RecordFormatError as exc:
        raise ConfigError(str(exc))


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


def _make_client(base_url: str):
    import httpx

    return httpx.Client(base_url=base_url, timeout=60.0)


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        raise ConfigError(f"server error {resp.status_code} on {path}: {resp.text[:200]}")
    return resp.json()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_correct(args) -> int:
    fmt = FormatConfig.from_name(args.markers)
    threshold = _threshold_or_config_error(args.threshold)
    records = _read_records_or_config_error(args.in_path)
    triples = [(line_no, utt_id, tokens) for line_no, utt_id, tokens, _ in records]

    if args.server:
        if args.dict_path:
            raise ConfigError("--dict and --server are mutually exclusive; the server owns the dictionary")
        outcomes_json: list[dict] = []
        skips_json: list[dict] = []
        with _make_client(args.server) as client:
            for start in range(0, len(triples), 500):
                chunk = triples[start:start + 500]
                payload = {
                    "utterances": [{"id": i, "tokens": t} for _, i, t in chunk],
                    "threshold": str(args.threshold),
                    "markers": args.markers,
                }
                body = _post(client, "/correct", payload)
                # server line numbers are chunk-relative
                for skip in body["skipped"]:
                    skip["line_no"] = chunk[skip["line_no"] - 1][0]
                outcomes_json.extend(body["outcomes"])
                skips_json.extend(body["skipped"])
        for skip in skips_json:
            logger.warning("skipped line %d: %s", skip["line_no"], skip["error"])
        if skips_json and args.strict:
            raise StrictDataError(f"{len(skips_json)} malformed utterances")
        _write_corrected_json(args, outcomes_json, skips_json)
        replaced = sum(
            1 for o in outcomes_json for d in o["spans"] if d["action"] == "replaced"
        )
        spans = sum(len(o["spans"]) for o in outcomes_json)
        _correct_summary(len(outcomes_json), spans, replaced, len(skips_json))
        return EXIT_OK

    lexicon = _load_lexicon_or_config_error(args.dict_path)
    outcomes, skips = correct_token_records(triples, lexicon, threshold, fmt)
    for skip in skips:
        logger.warning("skipped line %d: %s", skip.line_no, skip.error)
    if skips and args.strict:
        raise StrictDataError(f"{len(skips)} malformed utterances")
    write_corrected(args.out_path, outcomes)
    if args.decisions_path:
        write_decisions(args.decisions_path, outcomes)
    spans = sum(len(o.decisions) for o in outcomes)
    replaced = sum(o.replaced_count for o in outcomes)
    _correct_summary(len(outcomes), spans, replaced, len(skips))
    return EXIT_OK


def _write_corrected_json(args, outcomes_json: list[dict], skips_json: list[dict]) -> None:
    from .fileio import AtomicWriter

    with AtomicWriter(args.out_path) as fh:
        for o in outcomes_json:
            fh.write(json.dumps({"id": o["id"], "tokens": o["tokens"]}, ensure_ascii=False) + "\n")
    if args.decisions_path:
        with AtomicWriter(args.decisions_path) as fh:
            for o in outcomes_json:
                fh.write(json.dumps({"id": o["id"], "spans": o["spans"]}, ensure_ascii=False) + "\n")


def _correct_summary(utterances: int, spans: int, replaced: int, skipped: int) -> None:
    logger.info(
        "utterances=%d spans=%d replaced=%d skipped=%d", utterances, spans, replaced, skipped
    )


def cmd_score(args) -> int:
    fmt = FormatConfig.from_name(args.markers)
    if args.server:
        return _score_via_server(args)
    refs = _read_refs(args.refs, fmt)
    try:
        hyps = read_plain_map(args.hyps)
    except (OSError, RecordFormatError) as exc:
        raise ConfigError(f"cannot read hypotheses: {exc}")
    hyps_raw = None
    if args.hyps_raw:
        hyps_raw = {}
        for line_no, utt_id, tokens, _ in _read_records_or_config_error(args.hyps_raw):
            try:
                hyps_raw[utt_id] = parse_hypothesis(utt_id, tokens, fmt)
            except ValueError as exc:
                raise ConfigError(f"bad raw hypothesis at line {line_no}: {exc}")
    vocab = None
    if args.vocab:
        try:
            vocab = read_vocab(args.vocab)
        except OSError as exc:
            raise ConfigError(f"cannot read vocab: {exc}")
    try:
        report = corpus_report(refs, hyps, hyps_raw, vocab, per_utt=args.per_utt)
    except IdMismatchError as exc:
        raise ConfigError(str(exc))
    if args.require_ne and report["ops_ne"]["n_ref"] == 0:
        raise ConfigError("references contain no entity spans and --require-ne is set")
    write_json(args.report, report)
    logger.info("cer_all=%s cer_ne=%s", report["cer_all"], report["cer_ne"])
    return EXIT_OK


def _score_via_server(args) -> int:
    records = _read_records_or_config_error(args.refs)
    refs_payload = [
        {"id": utt_id, "tokens": tokens, "iv_flags": flags}
        for _, utt_id, tokens, flags in records
    ]
    hyps_payload = [
        {"id": utt_id, "tokens": tokens}
        for _, utt_id, tokens, _ in _read_records_or_config_error(args.hyps)
    ]
    payload = {
        "refs": refs_payload,
        "hyps": hyps_payload,
        "markers": args.markers,
        "per_utt": args.per_utt,
    }
    if args.hyps_raw:
        payload["hyps_raw"] = [
            {"id": utt_id, "tokens": tokens}
            for _, utt_id, tokens, _ in _read_records_or_config_error(args.hyps_raw)
        ]
    if args.vocab:
        try:
            payload["vocab"] = [list(v) for v in sorted(read_vocab(args.vocab))]
        except OSError as exc:
            raise ConfigError(f"cannot read vocab: {exc}")
    with _make_client(args.server) as client:
        report = _post(client, "/score", payload)
    if args.require_ne and report["ops_ne"]["n_ref"] == 0:
        raise ConfigError("references contain no entity spans and --require-ne is set")
    write_json(args.report, report)
    logger.info("cer_all=%s cer_ne=%s", report["cer_all"], report["cer_ne"])
    return EXIT_OK


def cmd_simulate(args) -> int:
    fmt_name = args.markers
    refs = _read_refs(args.refs, FormatConfig.from_name(fmt_name))
    params = _channel_params(args.channel, args.seed)
    table = _confusion_table(args.confusion)
    hyps = corrupt_corpus(refs, params, table)
    write_hypotheses(args.out_path, hyps, fmt_name)
    logger.info("corrupted %d utterances (seed=%d)", len(hyps), params.seed)
    return EXIT_OK


def cmd_sweep_dict(args) -> int:
    fmt = FormatConfig.from_name(args.markers)
    refs = _read_refs(args.refs, fmt)
    lexicon = _load_lexicon_or_config_error(args.dict_path)
    table = _confusion_table(args.confusion)
    params = _channel_params(args.channel, args.seed)
    threshold = _threshold_or_config_error(args.threshold)
    sizes = _int_list(args.sizes)
    bad = [s for s in sizes if not 0 <= s <= len(lexicon)]
    if bad:
        raise ConfigError(f"sizes {bad} out of range 0..{len(lexicon)}")
    rows = run_dict_sweep(refs, lexicon, sizes, params, table, threshold)
    write_sweep_csv(args.out_path, rows, ["I", "cer_ne"])
    logger.info("wrote %d rows to %s", len(rows), args.out_path)
    return EXIT_OK


def cmd_sweep_threshold(args) -> int:
    fmt = FormatConfig.from_name(args.markers)
    refs = _read_refs(args.refs, fmt)
    lexicon = _load_lexicon_or_config_error(args.dict_path)
    table = _confusion_table(args.confusion)
    params = _channel_params(args.channel, args.seed)
    thresholds = []
    for part in args.thresholds.split(","):
        if part:
            thresholds.append(_threshold_or_config_error(part))
    rows = run_threshold_sweep(refs, lexicon, thresholds, params, table)
    write_sweep_csv(args.out_path, rows, ["v_th", "cer_all", "cer_ne"])
    logger.info("wrote %d rows to %s", len(rows), args.out_path)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    threshold = _threshold_or_config_error(args.threshold)
    try:
        app = create_app(args.dict_path, threshold, args.markers)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot start service: {exc}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_sim(argv: Sequence[str]) -> int:
    args = list(argv)
    server = None
    if "--server" in args:
        idx = args.index("--server")
        if idx + 1 >= len(args):
            raise ConfigError("--server needs a URL")
        server = args[idx + 1]
        del args[idx:idx + 2]
    if "--" not in args:
        raise ConfigError("usage: nephon sim TOKEN... -- TOKEN...")
    split = args.index("--")
    a, b = args[:split], args[split + 1:]
    if server:
        with _make_client(server) as client:
            body = _post(client, "/similarity", {"a": a, "b": b})
        matched, r, exact = body["matched"], body["r"], body["r_exact"]
    else:
        score = gestalt_similarity(a, b)
        matched, r, exact = score.matched, score.as_float, score.exact()
    print(f"k={matched} r={r} ({exact})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry
# ---------------------------------------------------------------------------

_HANDLERS = {
    "correct": cmd_correct,
    "score": cmd_score,
    "simulate": cmd_simulate,
    "sweep-dict": cmd_sweep_dict,
    "sweep-threshold": cmd_sweep_threshold,
    "serve": cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        if args and args[0] == "sim":
            return cmd_sim(args[1:])
        parser = build_parser()
        ns = parser.parse_args(args)
        return _HANDLERS[ns.command](ns)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except StrictDataError as exc:
        logger.error("%s", exc)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
