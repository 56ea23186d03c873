from __future__ import annotations

import logging

import pytest

from nephon.channel import (
    ChannelParams,
    ConfusionTable,
    corrupt,
    corrupt_corpus,
    phoneme_inventory,
    run_dict_sweep,
    run_threshold_sweep,
    utterance_rng,
)
from nephon.corrector import correct
from nephon.lexicon import DictEntry, Lexicon
from nephon.nea import NeSpan, Reference
from nephon.scoring import ZERO_OPS, score_utterance

REF = Reference(
    "utt1",
    ("well", NeSpan(("安", "倍"), ("a", "b", "e")), "spoke", "today"),
    (True,),
)
TABLE = ConfusionTable({("a", "b", "e"): (("阿", "部"),)})
INV = ("a", "b", "e", "s", "t")


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(p_miss=1.5)
    with pytest.raises(ValueError):
        ChannelParams(p_phon_sub=0.5, p_phon_ins=0.4, p_phon_del=0.2)
    with pytest.raises(ValueError):
        ChannelParams.preset("nope")


def test_params_from_file(tmp_path):
    path = tmp_path / "chan.json"
    path.write_text('{"p_miss": 0.25, "seed": 3}', encoding="utf-8")
    params = ChannelParams.from_file(path)
    assert params.p_miss == 0.25
    assert params.seed == 3
    assert ChannelParams.from_file(path, seed=9).seed == 9


def test_identity_channel_reproduces_reference():
    params = ChannelParams.preset("clean", seed=11)
    hyp = corrupt(REF, params, TABLE, INV)
    assert hyp.id == REF.id
    assert hyp.segments == REF.segments


def test_corrupt_is_deterministic():
    params = ChannelParams.preset("default", seed=5)
    assert corrupt(REF, params, TABLE, INV) == corrupt(REF, params, TABLE, INV)
    # per-utterance derivation: independent of batch order
    other = Reference("utt2", ("hi", NeSpan(("X",), ("s", "t"))), ())
    batch = corrupt_corpus([REF, other], params, TABLE, INV)
    flipped = corrupt_corpus([other, REF], params, TABLE, INV)
    assert batch[0] == flipped[1]
    assert batch[1] == flipped[0]


def test_different_seeds_differ():
    outs = {
        tuple(corrupt(REF, ChannelParams.preset("default", seed=s), TABLE, INV).plain_tokens())
        for s in range(30)
    }
    assert len(outs) > 1


def test_confusion_swaps_surface_and_keeps_phonemes():
    params = ChannelParams.preset("confusion_only", seed=1)
    hyp = corrupt(REF, params, TABLE, INV)
    span = hyp.entities[0]
    assert span.surface == ("阿", "部")
    assert span.phonemes == ("a", "b", "e")
    # plain tokens untouched
    assert hyp.segments[0] == "well"
    assert hyp.segments[2:] == ("spoke", "today")


def test_confusion_then_correction_restores_gold():
    params = ChannelParams.preset("confusion_only", seed=1)
    hyp = corrupt(REF, params, TABLE, INV)
    lex = Lexicon([DictEntry(("安", "倍"), ("a", "b", "e"))])
    out = correct(hyp, lex, "0.8")
    assert out.corrected == REF.plain_tokens()


def test_missing_confusion_entry_passes_through_and_warns(caplog):
    ref = Reference("u", (NeSpan(("X",), ("z", "z")),), ())
    params = ChannelParams.preset("confusion_only", seed=2)
    with caplog.at_level(logging.WARNING, logger="nephon.channel"):
        hyp = corrupt(ref, params, TABLE, INV)
    assert hyp.entities[0].surface == ("X",)
    assert any("no confusion entry" in r.message for r in caplog.records)


def test_missed_span_surface_flows_into_plain_stream():
    params = ChannelParams(
        p_phon_sub=0, p_phon_ins=0, p_phon_del=0,
        p_surface_confuse=0, p_miss=1.0, p_false=0, seed=4,
    )
    hyp = corrupt(REF, params, TABLE, INV)
    assert hyp.n_entities == 0
    assert hyp.plain_tokens() == REF.plain_tokens()


def test_false_span_tags_plain_run():
    params = ChannelParams(
        p_phon_sub=0, p_phon_ins=0, p_phon_del=0,
        p_surface_confuse=0, p_miss=0, p_false=1.0, seed=6,
    )
    hyp = corrupt(REF, params, TABLE, INV)
    assert hyp.n_entities == 2
    # token content of the utterance is preserved
    assert hyp.plain_tokens() == REF.plain_tokens()
    false_span = [s for s in hyp.entities if s.surface != ("安", "倍")][0]
    assert 2 <= len(false_span.phonemes) <= 6
    assert all(p in INV for p in false_span.phonemes)


def test_phoneme_noise_draws_from_inventory():
    params = ChannelParams(
        p_phon_sub=1.0, p_phon_ins=0, p_phon_del=0,
        p_surface_confuse=0, p_miss=0, p_false=0, seed=8,
    )
    hyp = corrupt(REF, params, TABLE, INV)
    assert all(p in INV for p in hyp.entities[0].phonemes)
    assert len(hyp.entities[0].phonemes) == 3


def test_deletion_can_empty_phonemes_into_degenerate_span():
    params = ChannelParams(
        p_phon_sub=0, p_phon_ins=0, p_phon_del=1.0,
        p_surface_confuse=0, p_miss=0, p_false=0, seed=9,
    )
    hyp = corrupt(REF, params, TABLE, INV)
    assert hyp.entities[0].degenerate


def test_plain_corruption_is_off_by_default_and_reachable():
    noisy = ChannelParams(
        p_phon_sub=0.3, p_phon_ins=0, p_phon_del=0,
        p_surface_confuse=0, p_miss=0, p_false=0, seed=21,
    )
    hyp = corrupt(REF, noisy, TABLE, INV)
    assert [s for s in hyp.segments if isinstance(s, str)] == ["well", "spoke", "today"]
    flagged = ChannelParams(
        p_phon_sub=0.9, p_phon_ins=0, p_phon_del=0,
        p_surface_confuse=0, p_miss=0, p_false=0, seed=21, corrupt_plain=True,
    )
    outs = {corrupt(REF, flagged.with_seed(s), TABLE, INV).plain_tokens() for s in range(10)}
    assert any(out != REF.plain_tokens() for out in outs)


def test_utterance_rng_is_stable():
    a = utterance_rng(7, "utt1").random()
    b = utterance_rng(7, "utt1").random()
    c = utterance_rng(8, "utt1").random()
    assert a == b != c


def test_parallel_corruption_matches_sequential():
    from concurrent.futures import ThreadPoolExecutor

    refs = [
        Reference(f"u{i}", ("w", NeSpan((f"s{i}",), ("a", "b", "e"))), ())
        for i in range(40)
    ]
    params = ChannelParams.preset("default", seed=17)
    sequential = corrupt_corpus(refs, params, TABLE, INV)
    with ThreadPoolExecutor(max_workers=8) as pool:
        parallel = list(pool.map(lambda r: corrupt(r, params, TABLE, INV), refs))
    assert parallel == sequential


def test_phoneme_inventory_is_sorted_union():
    other = Reference("u2", (NeSpan(("Y",), ("e", "k")),), ())
    assert phoneme_inventory([REF, other]) == ("a", "b", "e", "k")


def test_dict_sweep_i0_matches_empty_lexicon_cross_check():
    refs = [REF, Reference("utt9", ("plain", "only"), ())]
    lex = Lexicon([DictEntry(("安", "倍"), ("a", "b", "e"))])
    params = ChannelParams.preset("default", seed=3)
    rows = run_dict_sweep(refs, lex, [0, 1], params, TABLE, "0.8")
    hyps = corrupt_corpus(refs, params, TABLE)
    total = ZERO_OPS
    for ref, hyp in zip(refs, hyps):
        scored = score_utterance(ref, correct(hyp, Lexicon(), "0.8").corrected)
        if scored.ne_ops is not None:
            total += scored.ne_ops
    assert rows[0]["I"] == 0
    assert rows[0]["cer_ne"] == pytest.approx(total.rate)


def test_dict_sweep_validates_sizes():
    lex = Lexicon([DictEntry(("X",), ("a",))])
    with pytest.raises(ValueError):
        run_dict_sweep([REF], lex, [5], ChannelParams.preset("clean"), TABLE, "0.8")


def test_threshold_sweep_zero_noise_gives_zero_cer():
    lex = Lexicon([DictEntry(("安", "倍"), ("a", "b", "e"))])
    params = ChannelParams.preset("clean", seed=1)
    rows = run_threshold_sweep([REF], lex, ["0", "0.5", "0.8"], params, TABLE)
    for row in rows:
        assert row["cer_all"] == 0.0
        assert row["cer_ne"] == 0.0


def test_threshold_sweep_matches_direct_correction():
    params = ChannelParams.preset("default", seed=13)
    refs = [REF]
    lex = Lexicon([DictEntry(("安", "倍"), ("a", "b", "e")), DictEntry(("X",), ("s", "t"))])
    rows = run_threshold_sweep(refs, lex, ["0.8"], params, TABLE)
    hyps = corrupt_corpus(refs, params, TABLE)
    scored = score_utterance(refs[0], correct(hyps[0], lex, "0.8").corrected)
    assert rows[0]["cer_ne"] == pytest.approx(scored.ne_ops.rate)
    assert rows[0]["cer_all"] == pytest.approx(scored.all_ops.rate)
