"""Auditory cue extraction: transcript, audio events, emotion.

The transcript is the one thing the pipeline cannot do without, so ASR
failures are fatal for the run.  Event tagging and emotion are advisory
context and degrade to nothing when their backends are missing or down.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .backends.base import AsrBackend, AudioTagBackend, EmotionBackend
from .errors import BackendUnavailable, TranscriptionFailed
from .media import AudioSpan, Chunk
from .memory import LongTermMemory, ShortTermMemory, _term_pattern

logger = logging.getLogger(__name__)

MAX_KEYWORD_CHARS = 64
KEYWORD_BUDGET = 20


def _dedup(values, max_chars=None) -> tuple[str, ...]:
    out: list[str] = []
    seen: set[str] = set()
    for v in values:
        v = str(v).strip()
        key = v.casefold()
        if not v or key in seen:
            continue
        if max_chars is not None and len(v) > max_chars:
            continue
        seen.add(key)
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class TranscriptionRequest:
    """What the ASR backend sees: the audio plus biasing keywords."""

    audio: AudioSpan
    context_keywords: tuple[str, ...] = ()
    language_hint: str | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "context_keywords", _dedup(self.context_keywords, MAX_KEYWORD_CHARS)
        )


@dataclass(frozen=True)
class AudioCue:
    """Everything the auditory pass learned about one chunk."""

    chunk_index: int
    transcript: str
    events: tuple[str, ...] = ()
    emotion: str | None = None
    speaker_hint: str | None = None
    silent: bool = False


@dataclass
class AuditoryBackends:
    asr: AsrBackend | None = None
    audio_tags: AudioTagBackend | None = None
    emotion: EmotionBackend | None = None


def transcribe(request: TranscriptionRequest, backend: AsrBackend | None) -> str:
    """Transcribe a span.  Zero-length audio is silently empty; a missing
    or unavailable backend is fatal because there is nothing to translate
    without a transcript."""
    if request.audio is None or request.audio.duration_ms <= 0:
        return ""
    chunk_index = request.audio.chunk_index if request.audio.chunk_index is not None else -1
    if backend is None:
        raise TranscriptionFailed(chunk_index, "no ASR backend configured")
    try:
        text = backend.transcribe(request)
    except BackendUnavailable as exc:
        raise TranscriptionFailed(chunk_index, str(exc)) from exc
    return (text or "").strip()


def extract_audio_events(audio: AudioSpan, backend: AudioTagBackend | None) -> list[str]:
    """Non-speech event tags (music, applause, ...).  Advisory: no
    backend or a failing one yields no tags."""
    if backend is None or audio is None:
        return []
    try:
        tags = backend.tag(audio)
    except BackendUnavailable as exc:
        logger.warning("audio tagging unavailable (%s); continuing without events", exc)
        return []
    return list(_dedup(tags))


def extract_emotion(audio: AudioSpan, backend: EmotionBackend | None) -> str | None:
    """Open-vocabulary emotion label, advisory like events."""
    if backend is None or audio is None:
        return None
    try:
        label = backend.classify(audio)
    except BackendUnavailable as exc:
        logger.warning("emotion backend unavailable (%s); continuing without it", exc)
        return None
    label = (label or "").strip()
    return label or None


def collect_context_keywords(
    short_term: ShortTermMemory,
    long_term: LongTermMemory | None = None,
    limit: int = KEYWORD_BUDGET,
) -> list[str]:
    """Keywords to bias ASR for the next chunk: visual-cue entities with
    the most recent chunk first, then domain terms that already appeared
    in earlier transcripts.  Deduplicated, oversized ones dropped, capped
    at limit."""
    candidates: list[str] = []
    for cue in reversed(short_term.visual_cues):
        candidates.extend(cue.entities)
    if long_term is not None and long_term.docs:
        prior_text = " ".join(c.transcript for c in short_term.audio_cues if c.transcript)
        if prior_text:
            for term in long_term.terms:
                if _term_pattern(term.source_term).search(prior_text):
                    candidates.append(term.source_term)
    return list(_dedup(candidates, MAX_KEYWORD_CHARS))[:limit]


def build_audio_cue(
    chunk: Chunk,
    keywords: list[str] | tuple[str, ...],
    backends: AuditoryBackends,
    language_hint: str | None = None,
) -> AudioCue:
    """Compose the full auditory cue for one chunk.  A chunk with no
    decodable audio produces a silent cue without touching any backend."""
    if chunk.audio is None:
        return AudioCue(chunk_index=chunk.boundary.index, transcript="", silent=True)
    request = TranscriptionRequest(
        audio=chunk.audio,
        context_keywords=tuple(keywords)[:KEYWORD_BUDGET],
        language_hint=language_hint,
    )
    transcript = transcribe(request, backends.asr)
    events = extract_audio_events(chunk.audio, backends.audio_tags)
    emotion = extract_emotion(chunk.audio, backends.emotion)
    return AudioCue(
        chunk_index=chunk.boundary.index,
        transcript=transcript,
        events=tuple(events),
        emotion=emotion,
        silent=not transcript,
    )
