"""The translation team: translator, proofreader, editor.

Per segment, the translator drafts with everything short- and long-term
memory can contribute.  After the whole document is drafted, the
proofreader reviews it in batches and the editor revises each segment in
document order, reading earlier finals and later drafts, then writes its
final back into history so the next edit sees it.

The one invariant this module enforces unconditionally is that a
segment's final translation has exactly as many lines as its source:
model output that breaks it gets one corrective retry, then a
deterministic reflow.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import JobConfig
from .errors import BackendUnavailable, ResponseEmpty
from .media import ChunkBoundary
from .memory import (
    DomainGuide,
    HistoryEntry,
    Memory,
    query_domain,
    query_web,
    replace_history,
    retrieve_bidirectional_window,
    retrieve_history_window,
)
from .runtime import PASS, AgentRuntime, ChatMessage, Suggestion

logger = logging.getLogger(__name__)

PAD_LINE = "…"


@dataclass(frozen=True)
class SegmentDraft:
    """A translated segment before post-processing."""

    index: int
    source_lines: tuple[str, ...]
    draft_lines: tuple[str, ...]
    boundary: ChunkBoundary | None = None

    @property
    def source_text(self) -> str:
        return "\n".join(self.source_lines)

    @property
    def draft_text(self) -> str:
        return "\n".join(self.draft_lines)


@dataclass(frozen=True)
class TranslationRecord:
    """A segment after the full pass: draft, verdict, final, audit trail.

    revision_log stages: ("translator", draft) always; ("proofreader",
    suggestion) when the verdict was not PASS; ("editor", final) when the
    editor changed the text.
    """

    draft: SegmentDraft
    suggestion: Suggestion
    final_lines: tuple[str, ...]
    revision_log: tuple[tuple[str, str], ...]

    @property
    def final_text(self) -> str:
        return "\n".join(self.final_lines)


def _split_lines(text: str) -> list[str]:
    return [line for line in (raw.strip() for raw in text.splitlines()) if line]


def _split_line(line: str) -> tuple[str, str]:
    # split at the whitespace nearest the middle; scriptio continua gets
    # a hard character split instead
    mid = len(line) // 2
    best = None
    for j, ch in enumerate(line):
        if ch.isspace() and (best is None or abs(j - mid) < abs(best - mid)):
            best = j
    if best is not None:
        return line[:best].rstrip(), line[best + 1 :].lstrip()
    return line[:mid], line[mid:]


def reflow_lines(lines, want: int) -> tuple[str, ...]:
    """Force exactly want non-empty lines, deterministically.

    Too many lines: the extras merge into the last kept line.  Too few:
    the longest line splits at its middle (earliest wins length ties)
    until the count fits, padding with an ellipsis line if nothing is
    left to split.
    """
    if want < 1:
        raise ValueError(f"cannot reflow to {want} lines")
    out = [line for line in (str(l).strip() for l in lines) if line]
    if not out:
        out = [PAD_LINE]
    if len(out) > want:
        merged = " ".join(out[want - 1 :])
        out = out[: want - 1] + [merged]
    while len(out) < want:
        order = sorted(range(len(out)), key=lambda i: (-len(out[i]), i))
        for i in order:
            if len(out[i]) < 2:
                continue
            left, right = _split_line(out[i])
            if left and right:
                out[i : i + 1] = [left, right]
                break
        else:
            out.append(PAD_LINE)
    return tuple(out)


def _format_history(entries) -> str:
    return "\n\n".join(
        f"Segment {e.index}:\n{e.source}\n=>\n{e.translation}" for e in entries
    )


def _format_visual(cue) -> str:
    if cue is None or not cue.description:
        return ""
    text = cue.description
    if cue.entities:
        text += "\nEntities on screen: " + ", ".join(cue.entities)
    return text


def _format_audio(cue) -> str:
    if cue is None:
        return ""
    parts = []
    if cue.events:
        parts.append("Background sounds: " + ", ".join(cue.events))
    if cue.emotion:
        parts.append(f"Speaker tone: {cue.emotion}")
    if cue.silent:
        parts.append("No speech detected in this clip.")
    return "\n".join(parts)


def _format_web(docs) -> str:
    lines = []
    for d in docs:
        tail = f" ({d.url})" if d.url else ""
        lines.append(f"- {d.title}: {d.snippet}{tail}".rstrip())
    return "\n".join(lines)


def _cues_for(memory: Memory, chunk_index: int | None):
    stm = memory.short_term
    vis = aud = None
    if chunk_index is not None:
        if 0 <= chunk_index < len(stm.visual_cues):
            vis = stm.visual_cues[chunk_index]
        if 0 <= chunk_index < len(stm.audio_cues):
            aud = stm.audio_cues[chunk_index]
    return vis, aud


def _gather_long_term(
    memory: Memory, text: str, config: JobConfig, runtime: AgentRuntime
) -> tuple[DomainGuide, list]:
    """Domain guide and web docs for a piece of text, honoring the
    ablation switches and keeping retrieval counters for the report."""
    guide = DomainGuide()
    if config.enable_domain_memory:
        guide = query_domain(memory.long_term, text)
        runtime.counters["domain.queries"] = runtime.counters.get("domain.queries", 0) + 1
        runtime.counters["domain.terms_matched"] = (
            runtime.counters.get("domain.terms_matched", 0) + len(guide.terms)
        )
    web_docs = []
    if config.enable_web and memory.long_term.web is not None:
        runtime.counters["web.queries"] = runtime.counters.get("web.queries", 0) + 1
        web_docs = query_web(memory.long_term, text[:200])
    return guide, web_docs


def _with_line_count(
    runtime: AgentRuntime,
    role: str,
    messages: list[ChatMessage],
    response: str,
    want: int,
    segment_index: int,
) -> tuple[str, ...]:
    """Hold an agent to the line-count contract: one corrective retry,
    then a deterministic reflow."""
    lines = _split_lines(response)
    if len(lines) == want:
        return tuple(lines)
    correction = (
        f"Your previous answer had {len(lines)} lines, but the source has {want} lines. "
        f"Return the same translation reformatted into exactly {want} non-empty lines, "
        "with no commentary."
    )
    runtime.counters[f"repair.{role}_retry"] = runtime.counters.get(f"repair.{role}_retry", 0) + 1
    retry_messages = messages + [
        ChatMessage("assistant", response),
        ChatMessage("user", correction),
    ]
    try:
        second = runtime.chat(role, retry_messages)
        retry_lines = _split_lines(second)
        if len(retry_lines) == want:
            return tuple(retry_lines)
        lines = retry_lines
    except (BackendUnavailable, ResponseEmpty) as exc:
        runtime.warn(f"{role} retry failed for segment {segment_index} ({exc})")
    runtime.counters["repair.reflow"] = runtime.counters.get("repair.reflow", 0) + 1
    runtime.warn(
        f"{role} kept the wrong line count for segment {segment_index}; reflowed "
        f"{len(lines)} lines into {want}"
    )
    return reflow_lines(lines, want)


def translate_segment(
    source: str,
    index: int,
    memory: Memory,
    config: JobConfig,
    runtime: AgentRuntime,
    boundary: ChunkBoundary | None = None,
) -> SegmentDraft:
    """Draft one segment with full memory context.

    The draft has exactly as many lines as the source.  The caller owns
    appending the draft to history (and later replacing it with the
    edited final)."""
    source_lines = tuple(_split_lines(source))
    if not source_lines:
        raise ValueError(f"segment {index}: source has no text")
    history = retrieve_history_window(memory.short_term, index, config.history_window)
    chunk_index = boundary.index if boundary is not None else index
    vis, aud = _cues_for(memory, chunk_index)
    guide, web_docs = _gather_long_term(memory, "\n".join(source_lines), config, runtime)

    prompt = runtime.render(
        "translator",
        domain=config.domain,
        source_language=config.source_language,
        target_language=config.target_language,
        translation_history=_format_history(history),
        domain_guide=guide.render(),
        web_docs=_format_web(web_docs),
        visual_context=_format_visual(vis),
        audio_context=_format_audio(aud),
        text="\n".join(source_lines),
    )
    messages = [ChatMessage("user", prompt)]
    response = runtime.chat("translator", messages)
    draft_lines = _with_line_count(
        runtime, "translator", messages, response, len(source_lines), index
    )
    return SegmentDraft(
        index=index, source_lines=source_lines, draft_lines=draft_lines, boundary=boundary
    )


def _check_contiguous(drafts) -> None:
    for a, b in zip(drafts, drafts[1:]):
        if b.index != a.index + 1:
            raise ValueError(
                f"proofreader batches must be contiguous; got {a.index} then {b.index}"
            )


def proofread_batch(
    drafts: list[SegmentDraft],
    memory: Memory,
    config: JobConfig,
    runtime: AgentRuntime,
) -> list[Suggestion]:
    """Review one contiguous batch, one verdict per segment.

    Fails open: if the backend is down or replies nothing usable, every
    segment passes and the report gets a warning."""
    if not drafts:
        return []
    _check_contiguous(drafts)
    base = drafts[0].index
    segments_text = "\n\n".join(
        f"Segment {d.index}:\nSource:\n{d.source_text}\nTranslation:\n{d.draft_text}"
        for d in drafts
    )
    all_sources = "\n".join(d.source_text for d in drafts)
    guide, web_docs = _gather_long_term(memory, all_sources, config, runtime)
    recent = retrieve_history_window(memory.short_term, base, config.history_window)

    prompt = runtime.render(
        "proofreader",
        segment_count=len(drafts),
        segments=segments_text,
        domain=config.domain,
        short_term_memory=_format_history(recent),
        domain_guide=guide.render(),
        web_docs=_format_web(web_docs),
    )
    try:
        response = runtime.chat("proofreader", [ChatMessage("user", prompt)])
    except (BackendUnavailable, ResponseEmpty) as exc:
        runtime.warn(f"proofreader unavailable for segments {base}..{drafts[-1].index} "
                     f"({exc}); passing the batch through")
        return [Suggestion(index=d.index, kind=PASS) for d in drafts]
    return runtime.proofread_suggestions(response, len(drafts), base)


def edit_segment(
    draft: SegmentDraft,
    suggestion: Suggestion,
    memory: Memory,
    config: JobConfig,
    runtime: AgentRuntime,
) -> tuple[str, ...]:
    """Revise one segment with bidirectional context.  Earlier segments
    are already final in history, later ones still drafts.  Fails open to
    the draft, and holds the editor to the source line count."""
    before, after = retrieve_bidirectional_window(
        memory.short_term, draft.index, config.history_window
    )
    chunk_index = draft.boundary.index if draft.boundary is not None else draft.index
    vis, aud = _cues_for(memory, chunk_index)
    guide, web_docs = _gather_long_term(memory, draft.source_text, config, runtime)
    long_term_parts = [part for part in (guide.render(), _format_web(web_docs)) if part]

    prompt = runtime.render(
        "editor",
        segment_index=draft.index,
        source=draft.source_text,
        translation=draft.draft_text,
        suggestion=suggestion.text if suggestion.kind != PASS else None,
        user_instruction=config.user_instruction,
        visual_context=_format_visual(vis),
        audio_context=_format_audio(aud),
        previous_history=_format_history(before),
        next_history=_format_history(after),
        long_term_memory="\n\n".join(long_term_parts),
        domain=config.domain,
        target_language=config.target_language,
    )
    messages = [ChatMessage("user", prompt)]
    try:
        response = runtime.chat("editor", messages)
    except (BackendUnavailable, ResponseEmpty) as exc:
        runtime.warn(f"editor unavailable for segment {draft.index} ({exc}); keeping the draft")
        return draft.draft_lines
    return _with_line_count(
        runtime, "editor", messages, response, len(draft.source_lines), draft.index
    )


def post_process(
    drafts: list[SegmentDraft],
    memory: Memory,
    config: JobConfig,
    runtime: AgentRuntime,
) -> list[TranslationRecord]:
    """Document-wide review: batched proofreading, then in-order editing.

    Precondition: history holds one entry per draft (the translate loop
    appended them).  Each final replaces its draft in history before the
    next segment is edited."""
    if not drafts:
        return []
    _check_contiguous(drafts)

    suggestions: dict[int, Suggestion] = {}
    if config.enable_proofreader:
        for at in range(0, len(drafts), config.proofreader_batch):
            batch = drafts[at : at + config.proofreader_batch]
            for s in proofread_batch(batch, memory, config, runtime):
                suggestions[s.index] = s
    else:
        suggestions = {d.index: Suggestion(index=d.index, kind=PASS) for d in drafts}

    records: list[TranslationRecord] = []
    for draft in drafts:
        suggestion = suggestions[draft.index]
        final_lines = edit_segment(draft, suggestion, memory, config, runtime)
        replace_history(
            memory.short_term,
            HistoryEntry(
                index=draft.index,
                source=draft.source_text,
                translation="\n".join(final_lines),
            ),
        )
        log: list[tuple[str, str]] = [("translator", draft.draft_text)]
        if suggestion.kind != PASS:
            log.append(("proofreader", suggestion.text))
        if final_lines != draft.draft_lines:
            log.append(("editor", "\n".join(final_lines)))
        records.append(
            TranslationRecord(
                draft=draft,
                suggestion=suggestion,
                final_lines=final_lines,
                revision_log=tuple(log),
            )
        )
    return records
