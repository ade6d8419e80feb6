"""Metric oracles: hand-enumerated n-gram counts, hand Levenshtein
fixtures, and the documented invariants."""

import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from subtrans.errors import EmptyCorpus, EmptyReference, LengthMismatch
from subtrans.metrics import (
    EPSILON,
    CorpusStats,
    MetricScore,
    bleu,
    corpus_stats,
    suber_lite,
    tokenize,
)
from subtrans.srt import SubtitleEntry, SubtitleFile, Timestamp


def entry(index, start_ms, end_ms, text):
    return SubtitleEntry(
        index=index,
        start=Timestamp(start_ms),
        end=Timestamp(end_ms),
        lines=tuple(text.split("\n")),
    )


def subfile(*specs):
    return SubtitleFile.from_entries(
        entry(i + 1, s, e, text) for i, (s, e, text) in enumerate(specs)
    )


# --- tokenize -----------------------------------------------------------


def test_tokenize_whitespace():
    assert tokenize("the  quick\tfox") == ["the", "quick", "fox"]


def test_tokenize_character_drops_whitespace():
    assert tokenize("你 好啊", "character") == ["你", "好", "啊"]


def test_tokenize_unknown_raises():
    with pytest.raises(ValueError):
        tokenize("x", "bytes")


# --- bleu ---------------------------------------------------------------


def test_bleu_identity_is_exactly_100():
    corpus = ["the cat sat down", "a long sentence with many words in it"]
    assert bleu(corpus, corpus).value == 100.0


def test_bleu_identity_short_sentence_uses_effective_order():
    # two tokens: orders 3 and 4 have no n-grams and drop out of the mean
    score = bleu(["hello world"], ["hello world"])
    assert score.value == 100.0
    assert score.details["effective_order"] == 2
    assert score.details["totals"] == [2, 1, 0, 0]


def test_bleu_no_unigram_overlap_is_zero():
    assert bleu(["alpha beta"], ["gamma delta"]).value == 0.0


def test_bleu_hand_oracle_clipping_and_smoothing():
    # hyp "the the the cat" vs ref "the cat sat down", enumerated by hand:
    #   1-grams: clip(the:3 -> 1) + clip(cat:1 -> 1) = 2 of 4
    #   2-grams: "the cat" matches = 1 of 3
    #   3-grams: 0 of 2 -> epsilon
    #   4-grams: 0 of 1 -> epsilon
    #   lengths 4 vs 4 -> brevity penalty 1
    score = bleu(["the the the cat"], ["the cat sat down"])
    assert score.details["matches"] == [2, 1, 0, 0]
    assert score.details["totals"] == [4, 3, 2, 1]
    assert score.details["brevity_penalty"] == 1.0
    expected = 100.0 * math.exp(
        (
            math.log(2 / 4)
            + math.log(1 / 3)
            + math.log(EPSILON / 2)
            + math.log(EPSILON / 1)
        )
        / 4
    )
    assert abs(score.value - expected) < 0.01


def test_bleu_brevity_penalty_hand_oracle():
    # perfect precision, half-length hypothesis: bp = exp(1 - 4/2)
    score = bleu(["the cat"], ["the cat sat down"])
    assert score.details["precisions"][0] == 1.0
    assert score.details["precisions"][1] == 1.0
    expected = 100.0 * math.exp(1.0 - 4 / 2)
    assert math.isclose(score.value, expected, rel_tol=1e-12)


def test_bleu_corpus_level_not_sentence_average():
    # pooled counts differ from averaging per-sentence scores
    hyps = ["the cat", "x"]
    refs = ["the cat", "y"]
    score = bleu(hyps, refs)
    assert score.details["matches"][0] == 2
    assert score.details["totals"][0] == 3


def test_bleu_permutation_invariant():
    hyps = ["the cat sat", "dogs bark loudly", "green ideas sleep"]
    refs = ["the cat sat down", "dogs bark", "colorless green ideas sleep"]
    base = bleu(hyps, refs).value
    order = [2, 0, 1]
    assert bleu([hyps[i] for i in order], [refs[i] for i in order]).value == base


def test_bleu_character_tokenizer():
    assert bleu(["你好世界"], ["你好世界"], tokenizer="character").value == 100.0
    # spacing differences vanish under character tokens
    assert bleu(["你 好 世 界"], ["你好世界"], tokenizer="character").value == 100.0


def test_bleu_character_tokenizer_partial():
    score = bleu(["今天天气好"], ["今天天氣好"], tokenizer="character")
    assert 0.0 < score.value < 100.0


def test_bleu_empty_hypothesis_strings():
    score = bleu([""], ["the cat"])
    assert score.value == 0.0


def test_bleu_length_mismatch():
    with pytest.raises(LengthMismatch):
        bleu(["a"], ["a", "b"])


def test_bleu_empty_corpus():
    with pytest.raises(EmptyCorpus):
        bleu([], [])


def test_bleu_monotone_under_cumulative_corruption():
    # substituting hyp tokens with out-of-vocabulary sentinels can only
    # remove n-gram matches, so the score must not increase
    for seed in range(5):
        rng = random.Random(seed)
        refs = [
            " ".join(rng.choice("abcdefgh") for _ in range(rng.randint(4, 12)))
            for _ in range(6)
        ]
        tokens = [r.split() for r in refs]
        positions = [(i, j) for i, row in enumerate(tokens) for j in range(len(row))]
        rng.shuffle(positions)
        scores = []
        corrupted = [row[:] for row in tokens]
        checkpoints = [0, len(positions) // 4, len(positions) // 2, len(positions)]
        done = 0
        for stop in checkpoints:
            for k in range(done, stop):
                i, j = positions[k]
                corrupted[i][j] = f"ZZ{k}"
            done = stop
            scores.append(bleu([" ".join(r) for r in corrupted], refs).value)
        assert scores[0] == 100.0
        for a, b in zip(scores, scores[1:]):
            assert b <= a + 1e-9


@given(
    pairs=st.lists(
        st.tuples(
            st.lists(st.sampled_from("abcdef"), max_size=8).map(" ".join),
            st.lists(st.sampled_from("abcdef"), max_size=8).map(" ".join),
        ),
        min_size=1,
        max_size=6,
    )
)
def test_bleu_range_invariant(pairs):
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    score = bleu(hyps, refs)
    assert 0.0 <= score.value <= 100.0 + 1e-9


# --- suber_lite ---------------------------------------------------------


def test_suber_identity_is_zero():
    f = subfile((0, 1000, "hello there"), (1500, 2500, "general kenobi"))
    score = suber_lite(f, f)
    assert score.value == 0.0
    assert score.details["edits"] == 0


def test_suber_empty_hypothesis_is_100():
    ref = subfile((0, 1000, "a b"), (2000, 3000, "c"))
    score = suber_lite(SubtitleFile(entries=()), ref)
    assert score.value == 100.0
    # 2 + break, 1 + break
    assert score.details["ref_tokens"] == 5
    assert score.details["edits"] == 5


def test_suber_hand_oracle_single_substitution():
    # "a b c" vs "a x c", same timing: streams of 4 tokens with the
    # break, one substitution -> 1/4 -> 25.0
    ref = subfile((0, 2000, "a b c"))
    hyp = subfile((0, 2000, "a x c"))
    score = suber_lite(hyp, ref)
    assert score.value == 25.0
    assert score.details["edits"] == 1
    assert score.details["ref_tokens"] == 4


def test_suber_break_token_costs_one_edit():
    # same words, different block split: one break insertion
    hyp = subfile((0, 2000, "a b"))
    ref = subfile((0, 1000, "a"), (1000, 2000, "b"))
    score = suber_lite(hyp, ref)
    assert score.details["edits"] == 1
    assert score.details["ref_tokens"] == 4
    assert score.value == 25.0


def test_suber_uniform_shift_invariance():
    ref = subfile((5000, 7000, "a b c"), (8000, 9500, "d e"))
    hyp = subfile((5000, 7000, "a x c"), (8000, 9500, "d e"))
    base = suber_lite(hyp, ref).value
    for shift in (-5000, 5000):
        ref2 = SubtitleFile.from_entries(
            entry(e.index, e.start.ms + shift, e.end.ms + shift, e.text)
            for e in ref.entries
        )
        hyp2 = SubtitleFile.from_entries(
            entry(e.index, e.start.ms + shift, e.end.ms + shift, e.text)
            for e in hyp.entries
        )
        assert suber_lite(hyp2, ref2).value == base


def test_suber_disjoint_blocks_cost_insert_plus_delete():
    hyp = subfile((0, 1000, "x"))
    ref = subfile((5000, 6000, "y"))
    score = suber_lite(hyp, ref)
    # two singleton groups: 2 insertions + 2 deletions over 2 ref tokens
    assert score.details["groups"] == 2
    assert score.details["edits"] == 4
    assert score.value == 200.0


def test_suber_overlap_grouping_is_transitive():
    # hyp block bridges two ref blocks that do not touch each other
    hyp = subfile((0, 3000, "a b"))
    ref = subfile((0, 1400, "a"), (1600, 3000, "b"))
    score = suber_lite(hyp, ref)
    assert score.details["groups"] == 1


def test_suber_empty_reference_raises():
    with pytest.raises(EmptyReference):
        suber_lite(subfile((0, 1000, "a")), SubtitleFile(entries=()))


def test_suber_identity_random_files():
    rng = random.Random(7)
    for _ in range(20):
        t = 0
        specs = []
        for i in range(rng.randint(1, 12)):
            start = t + rng.randint(0, 2000)
            end = start + rng.randint(200, 4000)
            words = " ".join(
                rng.choice(["so", "we", "attack", "now", "孢子", "飞龙"])
                for _ in range(rng.randint(1, 6))
            )
            specs.append((start, end, words))
            t = end
        f = subfile(*specs)
        assert suber_lite(f, f).value == 0.0


def test_suber_score_is_nonnegative_property():
    rng = random.Random(11)
    for _ in range(15):
        def rand_file():
            t = rng.randint(0, 3000)
            specs = []
            for _ in range(rng.randint(1, 6)):
                start = t + rng.randint(0, 1500)
                end = start + rng.randint(100, 2500)
                specs.append((start, end, " ".join(rng.choice("abc") for _ in range(rng.randint(1, 4)))))
                t = end
            return subfile(*specs)

        score = suber_lite(rand_file(), rand_file())
        assert score.value >= 0.0


# --- corpus_stats -------------------------------------------------------


def test_corpus_stats_single_file():
    f = subfile(*((i * 1000, i * 1000 + 900, f"line {i}") for i in range(10)))
    stats = corpus_stats([(f, 60.0)])
    assert stats.video_count == 1
    assert stats.total_lines == 10
    assert stats.avg_lines == 10.0
    assert stats.avg_duration_s == 60.0


def test_corpus_stats_word_totals():
    f1 = subfile((0, 1000, " ".join(["w"] * 100)))
    f2 = subfile((0, 1000, " ".join(["w"] * 200)))
    stats = corpus_stats([(f1, 10.0), (f2, 20.0)])
    assert stats.total_words == 300
    assert stats.avg_words == 150.0
    assert stats.total_duration_s == 30.0
    assert stats.avg_duration_s == 15.0


def test_corpus_stats_character_fallback_counts():
    f = subfile((0, 1000, "你好 世界"))
    stats = corpus_stats([(f, 1.0)])
    assert stats.total_words == 2
    assert stats.total_chars == 4


def test_corpus_stats_averages_consistent():
    files = [
        (subfile(*((j * 1000, j * 1000 + 500, f"w{j} x") for j in range(n))), 30.0 * n)
        for n in (3, 5, 8)
    ]
    stats = corpus_stats(files)
    assert stats.avg_lines == stats.total_lines / stats.video_count
    assert stats.avg_words == stats.total_words / stats.video_count
    assert stats.avg_duration_s == stats.total_duration_s / stats.video_count


def test_corpus_stats_empty_raises():
    with pytest.raises(EmptyCorpus):
        corpus_stats([])


def test_metric_score_shape():
    score = bleu(["a"], ["a"])
    assert isinstance(score, MetricScore)
    assert score.name == "bleu"
    assert isinstance(score.details, dict)
    assert isinstance(corpus_stats([(subfile((0, 1, "x")), 1.0)]), CorpusStats)
