"""Patch generation on a trained model: NA rules and their precedence,
argument reinsertion, the exact-match baseline, and re-thresholding."""

import json

import pytest

from patchloom.generation import (
    NA_IDENTICAL,
    NA_INVALID,
    NA_LOW_SCORE,
    NA_NO_MATCH,
    NA_UNTOKENIZABLE,
    BaselineIndex,
    GenerationResult,
    baseline_suggest,
    generate,
    rethreshold,
    write_results,
)


def run(rule_model, query, threshold=None, **kwargs):
    return generate(query, rule_model.params, rule_model.src_vocab,
                    rule_model.tgt_vocab, threshold=threshold, **kwargs)


def test_learned_rewrite_is_provided(rule_model):
    res = run(rule_model, "return this . width ;")
    assert res.na_reason is None
    assert res.patch is not None
    assert res.patch.tokens.tokens == ("return", "width", ";")
    assert res.patch.valid
    assert res.score is not None and res.score < 0.0
    assert res.source == "model"


def test_arguments_travel_through_the_rewrite(rule_model):
    res = run(rule_model, "cursor . log ( a + b ) ;")
    assert res.patch is not None
    assert res.patch.tokens.tokens == ("cursor", ".", "debug", "(", "a", "+",
                                       "b", ")", ";")
    assert res.patch.arguments_reinserted
    assert res.abstracted_output == ("cursor", ".", "debug", "(", "arg", ")",
                                     ";")


def test_identity_output_is_withheld(rule_model):
    res = run(rule_model, "int cursor = 0 ;")
    assert res.patch is None
    assert res.na_reason == NA_IDENTICAL
    assert res.identical


def test_low_score_na_under_tight_threshold(rule_model):
    # scores are log probabilities, so a threshold of zero rejects all
    res = run(rule_model, "return this . width ;", threshold=0.0)
    assert res.patch is None
    assert res.na_reason == NA_LOW_SCORE
    assert res.score is not None


def test_low_score_takes_precedence_over_identical(rule_model):
    res = run(rule_model, "int cursor = 0 ;", threshold=0.0)
    assert res.na_reason == NA_LOW_SCORE


def test_untokenizable_query(rule_model):
    res = run(rule_model, 'return "unclosed ;')
    assert res.patch is None
    assert res.na_reason == NA_UNTOKENIZABLE
    assert res.score is None


def test_default_threshold_accepts_confident_rewrites(rule_model):
    # the trained fixture scores its rules well above the default cut
    res = generate("return this . height ;", rule_model.params,
                   rule_model.src_vocab, rule_model.tgt_vocab)
    assert res.patch is not None
    assert res.score > -0.7


def test_rethreshold_matches_fresh_generation(rule_model):
    loose = run(rule_model, "return this . width ;", threshold=None)
    tight = rethreshold(loose, 0.0)
    assert tight.na_reason == NA_LOW_SCORE
    again = rethreshold(tight, None)
    assert again.na_reason is None
    assert again.patch is not None
    assert again.patch.tokens.tokens == loose.patch.tokens.tokens


def test_rethreshold_preserves_untokenizable(rule_model):
    res = run(rule_model, 'return "unclosed ;')
    assert rethreshold(res, None).na_reason == NA_UNTOKENIZABLE


def test_rethreshold_is_monotonic_in_threshold(rule_model):
    queries = ["return this . width ;", "int cursor = 0 ;",
               "monitor . log ( k ) ;", "return this . queue ;"]
    results = [run(rule_model, q) for q in queries]
    provided_at = []
    for threshold in (None, -0.7, -0.05, 0.0):
        adjusted = [rethreshold(r, threshold) for r in results]
        provided_at.append(sum(1 for r in adjusted if r.patch is not None))
    # tightening the threshold never provides more patches
    assert provided_at == sorted(provided_at, reverse=True)


def test_invalid_concrete_output_is_withheld():
    # finalization logic alone: a decoded but unparseable candidate
    res = GenerationResult(
        query="int a = 0 ;", source="model", score=-0.01,
        abstracted_output=("int", "a", "=", ";"),
        concrete_output=("int", "a", "=", ";"),
        valid=False, identical=False, finished=True,
    )
    out = rethreshold(res, None)
    assert out.patch is None
    assert out.na_reason == NA_INVALID


# ---------------------------------------------------------------------------
# baseline

def test_baseline_returns_seen_mapping(rule_model):
    index = BaselineIndex.from_parallel(rule_model.pre_lines,
                                        rule_model.post_lines)
    res = baseline_suggest("return this . width ;", index)
    assert res.source == "baseline"
    assert res.patch is not None
    assert res.patch.tokens.tokens == ("return", "width", ";")


def test_baseline_reinserts_concrete_arguments(rule_model):
    index = BaselineIndex.from_parallel(rule_model.pre_lines,
                                        rule_model.post_lines)
    res = baseline_suggest("monitor . log ( x , y ) ;", index)
    assert res.patch is not None
    assert res.patch.tokens.tokens == ("monitor", ".", "debug", "(", "x", ",",
                                       "y", ")", ";")


def test_baseline_unseen_query_is_na(rule_model):
    index = BaselineIndex.from_parallel(rule_model.pre_lines,
                                        rule_model.post_lines)
    res = baseline_suggest("byte [ ] raw = decode ( s ) ;", index)
    assert res.patch is None
    assert res.na_reason == NA_NO_MATCH
    assert rethreshold(res, -0.7).na_reason == NA_NO_MATCH


def test_baseline_identity_mapping_is_withheld():
    index = BaselineIndex.from_parallel([["int", "a", ";"]], [["int", "a", ";"]])
    res = baseline_suggest("int a ;", index)
    assert res.patch is None
    assert res.na_reason == NA_IDENTICAL


def test_baseline_first_mapping_wins():
    index = BaselineIndex.from_parallel(
        [["x", ";"], ["x", ";"]], [["y", ";"], ["z", ";"]])
    assert index.entries[("x", ";")] == ("y", ";")
    assert len(index) == 1


def test_write_results_jsonl(tmp_path, rule_model):
    results = [run(rule_model, "return this . width ;"),
               run(rule_model, 'return "unclosed ;')]
    path = tmp_path / "patches.jsonl"
    write_results(str(path), results)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(rows) == 2
    assert rows[0]["patch"] == "return width ;"
    assert rows[0]["na_reason"] is None
    assert rows[1]["patch"] is None
    assert rows[1]["na_reason"] == NA_UNTOKENIZABLE
    assert {"query", "patch", "score", "valid", "na_reason", "source"} <= set(rows[0])
