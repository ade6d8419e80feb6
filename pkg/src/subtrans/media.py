"""Speaker-activity chunking of long media into translation-sized pieces.

An asset is decomposed by a segmenter backend (or a local energy VAD
fallback) into raw speech spans, which are then normalized: clipped,
merged across small gaps, grown to a minimum length, and split at energy
minima when they exceed the maximum.  Normalization is deterministic and
idempotent, so re-running it on its own output changes nothing.
"""

from __future__ import annotations

import io
import logging
import math
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .config import KeyframePolicy, SegmentConfig
from .errors import BackendUnavailable, SubtransError
from .srt import Timestamp

logger = logging.getLogger(__name__)

SAMPLE_RATE = 16_000
SAMPLES_PER_MS = SAMPLE_RATE // 1000

# (absolute start ms, rms) pairs over frames of a span
RmsProfile = list[tuple[int, float]]


@runtime_checkable
class AudioSource(Protocol):
    """Random-access mono float32 audio at SAMPLE_RATE."""

    duration_ms: int

    def read(self, start_ms: int, end_ms: int) -> np.ndarray: ...


@runtime_checkable
class FrameSource(Protocol):
    """Random-access still frames; grab returns (image bytes, format tag)."""

    def grab(self, ts_ms: int) -> tuple[bytes, str]: ...


@dataclass
class AudioSpan:
    """A time window into an audio source."""

    source: AudioSource
    start_ms: int
    end_ms: int
    chunk_index: int | None = None

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    def read(self) -> np.ndarray:
        return self.source.read(self.start_ms, self.end_ms)

    def to_wav_bytes(self) -> bytes:
        """Encode the span as 16-bit PCM WAV (what wire backends expect)."""
        samples = np.clip(self.read(), -1.0, 1.0)
        pcm = (samples * 32767.0).astype("<i2")
        buf = io.BytesIO()
        with wave.open(buf, "wb") as wav:
            wav.setnchannels(1)
            wav.setsampwidth(2)
            wav.setframerate(SAMPLE_RATE)
            wav.writeframes(pcm.tobytes())
        return buf.getvalue()


@dataclass(frozen=True)
class FrameRef:
    """One sampled still frame."""

    timestamp: Timestamp
    image: bytes
    format: str = "png"


@dataclass
class MediaAsset:
    """A loaded input: audio (mandatory) and optional frames."""

    name: str
    audio: AudioSource
    frames: FrameSource | None = None
    source_path: Path | None = None

    @property
    def duration_ms(self) -> int:
        return self.audio.duration_ms


@dataclass(frozen=True)
class ChunkBoundary:
    """One chunk's place in the timeline; index is 0-based."""

    index: int
    start: Timestamp
    end: Timestamp

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"chunk index must be >= 0, got {self.index}")
        if self.start >= self.end:
            raise ValueError(f"chunk {self.index}: start {self.start} not before end {self.end}")

    @property
    def duration_ms(self) -> int:
        return self.end.ms - self.start.ms


@dataclass
class Chunk:
    """A boundary plus the media extracted for it."""

    boundary: ChunkBoundary
    audio: AudioSpan | None
    frames: list[FrameRef] = field(default_factory=list)
    frame_source: FrameSource | None = None
    decode_failed: bool = False


class SegmenterBackend(Protocol):
    def detect_speech(self, span: AudioSpan) -> list[tuple[int, int]]: ...


def rms_frames(samples: np.ndarray, frame_ms: int) -> np.ndarray:
    """Root-mean-square energy per frame_ms frame (tail partial dropped)."""
    frame_len = frame_ms * SAMPLES_PER_MS
    n = len(samples) // frame_len
    if n == 0:
        return np.zeros(0)
    trimmed = samples[: n * frame_len].astype(np.float64).reshape(n, frame_len)
    return np.sqrt(np.mean(trimmed * trimmed, axis=1))


class EnergyVadSegmenter:
    """Threshold VAD over frame RMS with hangover smoothing.

    Deterministic and dependency-free; the fallback when no segmenter
    backend is configured or the configured one is unavailable.
    """

    def __init__(self, threshold: float = 0.01, frame_ms: int = 30, hangover_ms: int = 240):
        self.threshold = threshold
        self.frame_ms = frame_ms
        self.hangover_frames = max(0, hangover_ms // frame_ms)
        self.call_count = 0

    def detect_speech(self, span: AudioSpan) -> list[tuple[int, int]]:
        self.call_count += 1
        rms = rms_frames(span.read(), self.frame_ms)
        spans: list[tuple[int, int]] = []
        run_start = None
        hang = 0
        for i, value in enumerate(rms):
            if value > self.threshold:
                if run_start is None:
                    run_start = i
                hang = self.hangover_frames
            elif run_start is not None:
                if hang > 0:
                    hang -= 1
                else:
                    spans.append((run_start, i))
                    run_start = None
        if run_start is not None:
            spans.append((run_start, len(rms)))
        return [
            (span.start_ms + s * self.frame_ms, span.start_ms + e * self.frame_ms)
            for s, e in spans
        ]

    def rms_profile(self, span: AudioSpan, frame_ms: int | None = None) -> RmsProfile:
        frame_ms = frame_ms or self.frame_ms
        rms = rms_frames(span.read(), frame_ms)
        return [
            (span.start_ms + i * frame_ms + frame_ms // 2, float(v)) for i, v in enumerate(rms)
        ]


EnergyFn = Callable[[int, int], RmsProfile]


def _merge(spans: list[tuple[int, int]], merge_gap_ms: int) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for s, e in spans:
        # a negative gap (overlap) always satisfies this, so overlapping
        # spans merge even with merge_gap_ms == 0
        if out and s - out[-1][1] < merge_gap_ms:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def _grow(start: int, end: int, min_ms: int, duration_ms: int) -> tuple[int, int]:
    need = min_ms - (end - start)
    if need <= 0:
        return start, end
    before = need // 2
    start2, end2 = start - before, end + (need - before)
    if start2 < 0:
        end2 += -start2
        start2 = 0
    if end2 > duration_ms:
        start2 = max(0, start2 - (end2 - duration_ms))
        end2 = duration_ms
    return start2, end2


def _split_even(start: int, end: int, max_ms: int) -> list[tuple[int, int]]:
    d = end - start
    n = math.ceil(d / max_ms)
    cuts = [start + round(i * d / n) for i in range(n + 1)]
    return list(zip(cuts, cuts[1:]))


def _split(
    start: int, end: int, config: SegmentConfig, energy: EnergyFn | None
) -> list[tuple[int, int]]:
    if end - start <= config.max_chunk_ms:
        return [(start, end)]
    lo, hi = start + config.min_chunk_ms, end - config.min_chunk_ms
    if energy is not None and lo < hi:
        candidates = [(v, ms) for ms, v in energy(start, end) if lo <= ms <= hi]
        if candidates:
            # quietest admissible frame; earliest wins ties
            cut = min(candidates)[1]
            return _split(start, cut, config, energy) + _split(cut, end, config, energy)
    return _split_even(start, end, config.max_chunk_ms)


def normalize_boundaries(
    spans: list[tuple[int, int]],
    config: SegmentConfig,
    duration_ms: int,
    energy: EnergyFn | None = None,
) -> list[ChunkBoundary]:
    """Turn raw speech spans into clean chunk boundaries.

    Steps: clip to the asset and drop empties; merge spans separated by
    less than merge_gap_ms; grow spans under min_chunk_ms symmetrically
    (then re-merge); split spans over max_chunk_ms at the quietest
    admissible frame when an energy profile is available, else evenly.
    No speech at all yields one chunk covering the whole asset.
    """
    if duration_ms <= 0:
        raise ValueError(f"asset duration must be positive, got {duration_ms}")
    clean = []
    for s, e in spans:
        s, e = max(0, int(s)), min(int(e), duration_ms)
        if e > s:
            clean.append((s, e))
    clean.sort()
    if not clean:
        logger.warning("no speech spans detected; using the whole asset as one chunk")
        clean = [(0, duration_ms)]

    merged = _merge(clean, config.merge_gap_ms)
    grown = sorted(_grow(s, e, config.min_chunk_ms, duration_ms) for s, e in merged)
    merged = _merge(grown, config.merge_gap_ms)

    pieces: list[tuple[int, int]] = []
    for s, e in merged:
        pieces.extend(_split(s, e, config, energy))
    return [
        ChunkBoundary(index=i, start=Timestamp(s), end=Timestamp(e))
        for i, (s, e) in enumerate(pieces)
    ]


def segment(
    asset: MediaAsset,
    segmenter: SegmenterBackend | None,
    config: SegmentConfig | None = None,
) -> list[ChunkBoundary]:
    """Detect speech with the segmenter (energy VAD as fallback) and
    normalize the result into chunk boundaries."""
    config = config or SegmentConfig()
    full = AudioSpan(asset.audio, 0, asset.duration_ms)
    fallback = EnergyVadSegmenter(
        threshold=config.energy_threshold,
        frame_ms=config.frame_ms,
        hangover_ms=config.hangover_ms,
    )
    if segmenter is None:
        segmenter = fallback
    try:
        spans = segmenter.detect_speech(full)
    except BackendUnavailable as exc:
        logger.warning("segmenter backend unavailable (%s); falling back to energy VAD", exc)
        spans = fallback.detect_speech(full)

    def energy(start_ms: int, end_ms: int) -> RmsProfile:
        return fallback.rms_profile(AudioSpan(asset.audio, start_ms, end_ms))

    return normalize_boundaries(spans, config, asset.duration_ms, energy)


def sample_keyframes(chunk: Chunk, policy: KeyframePolicy | None = None) -> list[FrameRef]:
    """Sample up to policy.max_frames frames at uniform interior offsets
    start + (i+1) * duration / (n+1).  Duplicate timestamps collapse, so
    short chunks may yield fewer frames."""
    policy = policy or KeyframePolicy()
    if chunk.frame_source is None or policy.max_frames <= 0:
        return []
    b = chunk.boundary
    n = policy.max_frames
    frames: list[FrameRef] = []
    seen: set[int] = set()
    for i in range(n):
        ts = b.start.ms + (i + 1) * b.duration_ms // (n + 1)
        if ts in seen:
            continue
        seen.add(ts)
        try:
            image, fmt = chunk.frame_source.grab(ts)
        except SubtransError as exc:
            logger.warning("frame grab at %d ms failed: %s", ts, exc)
            continue
        frames.append(FrameRef(timestamp=Timestamp(ts), image=image, format=fmt))
    return frames


def extract_chunks(
    asset: MediaAsset,
    boundaries: list[ChunkBoundary],
    policy: KeyframePolicy | None = None,
) -> list[Chunk]:
    """Materialize chunks: audio spans (probed for decodability) plus
    sampled keyframes.  A chunk whose audio cannot be decoded is kept,
    flagged, and carries no audio."""
    chunks: list[Chunk] = []
    for b in boundaries:
        span = AudioSpan(asset.audio, b.start.ms, b.end.ms, chunk_index=b.index)
        failed = False
        try:
            span.read()
        except SubtransError as exc:
            logger.warning("chunk %d audio is undecodable: %s", b.index, exc)
            failed = True
        chunk = Chunk(
            boundary=b,
            audio=None if failed else span,
            frame_source=asset.frames,
            decode_failed=failed,
        )
        chunk.frames = sample_keyframes(chunk, policy)
        chunks.append(chunk)
    return chunks
