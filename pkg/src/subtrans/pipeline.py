"""End-to-end orchestration: media in, validated subtitle files out.

The per-chunk loop runs vision before audio on purpose: the visual
entities of the current chunk join the keyword list that biases its own
transcription.  Silent chunks stay in the chunk record but produce no
subtitle segment, so segment indices and chunk indices are related
through each draft's boundary, not by equality.

Everything written to disk is deterministic for a given input, config,
and backend behavior; the run report carries no wall-clock data.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from . import media
from .audio_agent import AuditoryBackends, build_audio_cue, collect_context_keywords
from .backends import BackendSet, build_backend_set
from .config import PipelineConfig
from .errors import ConfigError
from .memory import HistoryEntry, Memory, append_audio_cue, append_history, append_visual_cue, init_memory
from .runtime import AgentRuntime, ChatParams
from .srt import SubtitleEntry, SubtitleFile, render_srt, validate_timeline
from .team import TranslationRecord, post_process, translate_segment
from .vision_agent import VisualCue, analyze_frames

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    source_srt: SubtitleFile
    target_srt: SubtitleFile
    records: list[TranslationRecord]
    report: dict
    source_path: Path
    target_path: Path
    report_path: Path
    muxed_video_path: Path | None = None


def _chat_params(config: PipelineConfig) -> ChatParams:
    debug_log = None
    if config.chat.debug_log is not None:
        debug_log = config.resolve(config.chat.debug_log)
    return ChatParams(
        model=config.chat.model,
        temperature=config.chat.temperature,
        max_tokens=config.chat.max_tokens,
        debug_log=debug_log,
    )


def _mux(
    asset: media.MediaAsset,
    target_path: Path,
    out_dir: Path,
    config: PipelineConfig,
    runtime: AgentRuntime,
) -> Path | None:
    """Best effort: burn the target subtitles into a video copy."""
    if not config.muxer_command:
        runtime.warn("emit_video is set but no muxer_command is configured; skipped")
        return None
    if asset.source_path is None:
        runtime.warn("emit_video is set but the asset has no source file; skipped")
        return None
    out_path = out_dir / f"{asset.name}.subbed.mp4"
    try:
        argv = [
            part.format(
                video=str(asset.source_path),
                srt=str(target_path),
                output=str(out_path),
            )
            for part in shlex.split(config.muxer_command)
        ]
    except (KeyError, IndexError) as exc:
        raise ConfigError(f"bad muxer_command placeholders: {exc}") from exc
    try:
        proc = subprocess.run(argv, capture_output=True)
    except OSError as exc:
        runtime.warn(f"muxer could not start: {exc}")
        return None
    if proc.returncode != 0 or not out_path.exists():
        runtime.warn(f"muxer exited with code {proc.returncode}; no video emitted")
        return None
    return out_path


def _build_report(
    asset: media.MediaAsset,
    config: PipelineConfig,
    chunks: list[media.Chunk],
    silent_chunks: list[int],
    records: list[TranslationRecord],
    memory: Memory,
    runtime: AgentRuntime,
    backends: BackendSet,
    target_srt: SubtitleFile,
    paths: dict[str, str | None],
) -> dict:
    counters = runtime.counters
    chat_calls = {k: v for k, v in counters.items() if k.startswith("chat.")}
    validation = validate_timeline(target_srt)
    return {
        "input": {
            "name": asset.name,
            "duration_ms": asset.duration_ms,
            "source_path": str(asset.source_path) if asset.source_path else None,
        },
        "job": config.job.model_dump(),
        "chunks": {
            "count": len(chunks),
            "boundaries_ms": [[c.boundary.start.ms, c.boundary.end.ms] for c in chunks],
            "decode_failed": [c.boundary.index for c in chunks if c.decode_failed],
            "silent": silent_chunks,
            "frames_sampled": sum(len(c.frames) for c in chunks),
        },
        "segments": {
            "count": len(records),
            "entries": [
                {
                    "index": rec.draft.index,
                    "chunk": rec.draft.boundary.index if rec.draft.boundary else None,
                    "start_ms": rec.draft.boundary.start.ms if rec.draft.boundary else None,
                    "end_ms": rec.draft.boundary.end.ms if rec.draft.boundary else None,
                    "source": rec.draft.source_text,
                    "draft": rec.draft.draft_text,
                    "final": rec.final_text,
                    "suggestion": {"kind": rec.suggestion.kind, "text": rec.suggestion.text},
                    "revision_log": [[stage, text] for stage, text in rec.revision_log],
                }
                for rec in records
            ],
        },
        "backend_calls": {**backends.call_counts(), **chat_calls},
        "domain_guide": {
            "queries": counters.get("domain.queries", 0),
            "terms_matched": counters.get("domain.terms_matched", 0),
        },
        "web": {"queries": counters.get("web.queries", 0)},
        "repairs": {
            k.removeprefix("repair."): v for k, v in counters.items() if k.startswith("repair.")
        },
        "memory": {
            "history_entries": len(memory.short_term.history),
            "kb_docs": len(memory.long_term.docs),
            "kb_terms": len(memory.long_term.terms),
        },
        "validation": {
            "ok": validation.ok,
            "overlaps": len(validation.overlaps),
            "order_violations": len(validation.order_violations),
        },
        "warnings": list(runtime.warnings),
        "outputs": paths,
    }


def run(
    asset: media.MediaAsset,
    config: PipelineConfig,
    backends: BackendSet | None = None,
) -> RunResult:
    """Run the whole pipeline on one asset.

    Chunk the audio by speech activity, extract per-chunk cues, draft
    with the translator, post-process document-wide, then write
    ``<name>.src.srt``, ``<name>.<target>.srt`` and ``<name>.report.json``
    into the output directory.
    """
    if backends is None:
        backends = build_backend_set(config)
    if backends.chat is None:
        raise ConfigError("translation needs a chat backend; backends.chat is 'none'")

    runtime = AgentRuntime(chat_backend=backends.chat, params=_chat_params(config))
    kb_paths = [config.resolve(p) for p in config.kb_paths]
    memory = init_memory(kb_paths, web=backends.web)
    domain_terms = [t.source_term for t in memory.long_term.terms]
    auditory = AuditoryBackends(
        asr=backends.asr, audio_tags=backends.audio_tags, emotion=backends.emotion
    )

    boundaries = media.segment(asset, backends.segmenter, config.segment)
    chunks = media.extract_chunks(asset, boundaries, config.keyframes)

    drafts = []
    silent_chunks: list[int] = []
    for chunk in chunks:
        index = chunk.boundary.index
        if config.job.enable_vision and chunk.frames and backends.vlm is not None:
            cue_v = analyze_frames(
                chunk.frames, memory.short_term.visual_cues, domain_terms, backends.vlm, index
            )
        else:
            cue_v = VisualCue(chunk_index=index, description="")
        append_visual_cue(memory.short_term, cue_v)

        keywords = collect_context_keywords(memory.short_term, memory.long_term)
        cue_a = build_audio_cue(
            chunk, keywords, auditory, language_hint=config.job.source_language
        )
        append_audio_cue(memory.short_term, cue_a)
        if cue_a.silent:
            silent_chunks.append(index)
            runtime.warn(f"chunk {index}: nothing transcribed; no segment emitted")
            continue

        segment_index = len(drafts)
        draft = translate_segment(
            cue_a.transcript,
            segment_index,
            memory,
            config.job,
            runtime,
            boundary=chunk.boundary,
        )
        append_history(
            memory.short_term,
            HistoryEntry(index=segment_index, source=draft.source_text, translation=draft.draft_text),
        )
        drafts.append(draft)

    records = post_process(drafts, memory, config.job, runtime)

    src_entries = []
    tgt_entries = []
    for position, rec in enumerate(records, start=1):
        b = rec.draft.boundary
        src_entries.append(
            SubtitleEntry(index=position, start=b.start, end=b.end, lines=rec.draft.source_lines)
        )
        tgt_entries.append(
            SubtitleEntry(index=position, start=b.start, end=b.end, lines=rec.final_lines)
        )
    source_srt = SubtitleFile(entries=tuple(src_entries))
    target_srt = SubtitleFile(entries=tuple(tgt_entries))

    out_dir = config.resolve(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source_path = out_dir / f"{asset.name}.src.srt"
    target_path = out_dir / f"{asset.name}.{config.job.target_language}.srt"
    report_path = out_dir / f"{asset.name}.report.json"
    source_path.write_text(render_srt(source_srt), encoding="utf-8")
    target_path.write_text(render_srt(target_srt), encoding="utf-8")

    muxed_path = None
    if config.emit_video:
        muxed_path = _mux(asset, target_path, out_dir, config, runtime)

    report = _build_report(
        asset,
        config,
        chunks,
        silent_chunks,
        records,
        memory,
        runtime,
        backends,
        target_srt,
        paths={
            "source_srt": source_path.name,
            "target_srt": target_path.name,
            "report": report_path.name,
            "muxed_video": muxed_path.name if muxed_path else None,
        },
    )
    report_path.write_text(
        json.dumps(report, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    return RunResult(
        source_srt=source_srt,
        target_srt=target_srt,
        records=records,
        report=report,
        source_path=source_path,
        target_path=target_path,
        report_path=report_path,
        muxed_video_path=muxed_path,
    )
