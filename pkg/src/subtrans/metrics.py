"""String-based evaluation: corpus BLEU, SubER-lite, corpus statistics.

SubER-lite is a deliberately shift-free simplification of the published
subtitle edit rate: blocks are aligned by time overlap only, break
tokens are scored like words, and there is no TER-style block-shift
search.  It exists as a deterministic in-repo regression metric, not a
drop-in replacement for the published one, and its output says so.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyCorpus, EmptyReference, LengthMismatch
from .srt import SubtitleEntry, SubtitleFile

MAX_ORDER = 4
EPSILON = 1e-9
TOKENIZERS = ("whitespace", "character")

# break token between subtitle blocks; a real token can never contain
# a newline, so this cannot collide
BREAK_TOKEN = "\n"


@dataclass(frozen=True)
class MetricScore:
    name: str
    value: float
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusStats:
    video_count: int
    total_duration_s: float
    avg_duration_s: float
    total_lines: int
    avg_lines: float
    total_words: int
    avg_words: float
    total_chars: int
    avg_chars: float


def tokenize(text: str, tokenizer: str = "whitespace") -> list[str]:
    """whitespace: split on runs of whitespace.  character: every
    non-whitespace character is one token (for CJK-style targets)."""
    if tokenizer == "whitespace":
        return text.split()
    if tokenizer == "character":
        return [ch for ch in text if not ch.isspace()]
    raise ValueError(f"unknown tokenizer {tokenizer!r}; expected one of {TOKENIZERS}")


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    hypotheses: Sequence[str],
    references: Sequence[str],
    tokenizer: str = "whitespace",
) -> MetricScore:
    """Corpus BLEU: clipped n-gram precision for n=1..4, geometric mean,
    exponential brevity penalty.

    Orders the corpus is too short to populate are dropped from the
    mean, so a one-word identity corpus still scores 100.  Zero match
    counts at orders 2..4 are floored at EPSILON; zero matches at order
    1 mean no overlap at all and score 0.0.
    """
    hyp_list = list(hypotheses)
    ref_list = list(references)
    if len(hyp_list) != len(ref_list):
        raise LengthMismatch(
            f"corpus size mismatch: {len(hyp_list)} hypotheses vs {len(ref_list)} references"
        )
    if not hyp_list:
        raise EmptyCorpus("cannot score an empty corpus")

    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyp_list, ref_list):
        hyp_tokens = tokenize(hyp, tokenizer)
        ref_tokens = tokenize(ref, tokenizer)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, MAX_ORDER + 1):
            total = max(len(hyp_tokens) - n + 1, 0)
            if total == 0:
                continue
            totals[n - 1] += total
            ref_grams = _ngram_counts(ref_tokens, n)
            for gram, count in _ngram_counts(hyp_tokens, n).items():
                matches[n - 1] += min(count, ref_grams.get(gram, 0))

    details = {
        "matches": list(matches),
        "totals": list(totals),
        "hyp_tokens": hyp_len,
        "ref_tokens": ref_len,
        "tokenizer": tokenizer,
        "smoothing": f"add-epsilon {EPSILON} on zero match counts at orders 2..{MAX_ORDER}",
    }

    if hyp_len == 0 or matches[0] == 0:
        details["precisions"] = [None] * MAX_ORDER
        details["brevity_penalty"] = 0.0 if hyp_len == 0 else None
        return MetricScore(name="bleu", value=0.0, details=details)

    log_sum = 0.0
    effective = 0
    precisions: list[float | None] = []
    for n in range(MAX_ORDER):
        if totals[n] == 0:
            precisions.append(None)
            continue
        numerator = matches[n] if matches[n] > 0 else EPSILON
        p = numerator / totals[n]
        precisions.append(p)
        log_sum += math.log(p)
        effective += 1
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    value = 100.0 * bp * math.exp(log_sum / effective)

    details["precisions"] = precisions
    details["brevity_penalty"] = bp
    details["effective_order"] = effective
    return MetricScore(name="bleu", value=value, details=details)


def _block_tokens(entry: SubtitleEntry) -> list[str]:
    return " ".join(entry.lines).split() + [BREAK_TOKEN]


def _levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        row = [i]
        for j, y in enumerate(b, start=1):
            row.append(min(prev[j] + 1, row[-1] + 1, prev[j - 1] + (x != y)))
        prev = row
    return prev[-1]


def _overlap_groups(hyp: SubtitleFile, ref: SubtitleFile):
    """Connected components of blocks under time overlap, each a pair
    (hyp entries, ref entries) in temporal order."""
    events = [(e.start.ms, e.end.ms, 0, i, e) for i, e in enumerate(hyp.entries)]
    events += [(e.start.ms, e.end.ms, 1, i, e) for i, e in enumerate(ref.entries)]
    events.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    groups: list[tuple[list, list]] = []
    max_end = None
    for start, end, side, _, entry in events:
        if max_end is None or start >= max_end:
            groups.append(([], []))
            max_end = end
        else:
            max_end = max(max_end, end)
        groups[-1][side].append(entry)
    return groups


def suber_lite(hyp: SubtitleFile, ref: SubtitleFile) -> MetricScore:
    """Subtitle edit rate, shift-free: 100 * edits / reference tokens.

    Both files flatten to token streams with one break token per block;
    word edit distance runs independently inside each time-overlap group
    (a co-timed error costs a substitution, a disjoint one costs a
    deletion plus an insertion).  Identity scores 0; values above 100
    are possible for insert-heavy hypotheses.
    """
    if not ref.entries:
        raise EmptyReference("reference subtitle file has no entries")
    groups = _overlap_groups(hyp, ref)
    edits = 0
    for hyp_entries, ref_entries in groups:
        hyp_stream = [t for e in hyp_entries for t in _block_tokens(e)]
        ref_stream = [t for e in ref_entries for t in _block_tokens(e)]
        edits += _levenshtein(hyp_stream, ref_stream)
    ref_tokens = sum(len(_block_tokens(e)) for e in ref.entries)
    hyp_tokens = sum(len(_block_tokens(e)) for e in hyp.entries)
    value = 100.0 * edits / ref_tokens
    return MetricScore(
        name="suber_lite",
        value=value,
        details={
            "edits": edits,
            "ref_tokens": ref_tokens,
            "hyp_tokens": hyp_tokens,
            "groups": len(groups),
            "note": "shift-free simplification of SubER: time-overlap alignment, "
            "break tokens scored, no block-shift search",
        },
    )


def corpus_stats(files: Iterable[tuple[SubtitleFile, float]]) -> CorpusStats:
    """Corpus-level statistics over (subtitle file, duration seconds)
    pairs.  Lines are subtitle entries; words are whitespace tokens, with
    a character count recorded alongside for languages whitespace
    misrepresents."""
    pairs = list(files)
    if not pairs:
        raise EmptyCorpus("cannot summarize an empty corpus")
    count = len(pairs)
    total_duration = float(sum(duration for _, duration in pairs))
    total_lines = sum(len(f.entries) for f, _ in pairs)
    total_words = 0
    total_chars = 0
    for f, _ in pairs:
        for entry in f.entries:
            text = entry.text
            total_words += len(text.split())
            total_chars += sum(1 for ch in text if not ch.isspace())
    return CorpusStats(
        video_count=count,
        total_duration_s=total_duration,
        avg_duration_s=total_duration / count,
        total_lines=total_lines,
        avg_lines=total_lines / count,
        total_words=total_words,
        avg_words=total_words / count,
        total_chars=total_chars,
        avg_chars=total_chars / count,
    )
