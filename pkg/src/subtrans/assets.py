"""Concrete audio and frame sources, and the input loader.

Real decoding of container formats is delegated to external tool
commands; what this module owns is WAV reading, deterministic synthetic
media for tests and demos, and the dispatch that turns an input path
into a MediaAsset.
"""

from __future__ import annotations

import io
import logging
import shlex
import subprocess
import tempfile
import wave
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from .config import MediaTools
from .errors import ConfigError, DecodeFailure, SubtransError
from .media import SAMPLE_RATE, SAMPLES_PER_MS, FrameSource, MediaAsset

logger = logging.getLogger(__name__)


class ArrayAudioSource:
    """Audio backed by an in-memory float32 array at SAMPLE_RATE."""

    def __init__(self, samples: np.ndarray):
        self._samples = np.asarray(samples, dtype=np.float32)
        self.duration_ms = len(self._samples) // SAMPLES_PER_MS

    def read(self, start_ms: int, end_ms: int) -> np.ndarray:
        lo = max(0, start_ms) * SAMPLES_PER_MS
        hi = min(end_ms * SAMPLES_PER_MS, len(self._samples))
        return self._samples[lo:hi]


class WavFileSource(ArrayAudioSource):
    """Loads a PCM WAV file, downmixing to mono and resampling to 16 kHz."""

    def __init__(self, path: Path | str):
        path = Path(path)
        try:
            with wave.open(str(path), "rb") as wav:
                channels = wav.getnchannels()
                width = wav.getsampwidth()
                rate = wav.getframerate()
                raw = wav.readframes(wav.getnframes())
        except (wave.Error, OSError, EOFError) as exc:
            raise DecodeFailure(-1, f"cannot read WAV {path}: {exc}") from exc
        if width != 2:
            raise DecodeFailure(-1, f"{path}: only 16-bit PCM WAV is supported, got {8 * width}-bit")
        samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
        if channels > 1:
            samples = samples.reshape(-1, channels).mean(axis=1)
        if rate != SAMPLE_RATE and len(samples):
            n_out = int(round(len(samples) * SAMPLE_RATE / rate))
            samples = np.interp(
                np.arange(n_out) / SAMPLE_RATE,
                np.arange(len(samples)) / rate,
                samples,
            ).astype(np.float32)
        super().__init__(samples)
        self.path = path


class SyntheticAudioSource(ArrayAudioSource):
    """Seeded noise with louder bursts inside designated speech spans.

    The burst level sits well above the default VAD threshold and the
    floor well below it, so energy segmentation recovers the spans.
    """

    def __init__(
        self,
        duration_ms: int,
        speech_spans_ms: list[tuple[int, int]] | None = None,
        seed: int = 0,
        amplitude: float = 0.25,
        floor: float = 0.002,
    ):
        rng = np.random.default_rng(seed)
        samples = (floor * rng.standard_normal(duration_ms * SAMPLES_PER_MS)).astype(np.float32)
        for start, end in speech_spans_ms or []:
            lo = max(0, start) * SAMPLES_PER_MS
            hi = min(end, duration_ms) * SAMPLES_PER_MS
            if hi > lo:
                samples[lo:hi] = (amplitude * rng.standard_normal(hi - lo)).astype(np.float32)
        super().__init__(samples)
        self.speech_spans_ms = [tuple(s) for s in speech_spans_ms or []]


class ToolAudioSource(ArrayAudioSource):
    """Extracts audio from arbitrary media by running an external command
    once, then serves the resulting WAV from memory.

    command placeholders: {input} {output}.
    """

    def __init__(self, media_path: Path | str, command: str):
        media_path = Path(media_path)
        with tempfile.TemporaryDirectory(prefix="subtrans-audio-") as tmp:
            out = Path(tmp) / "audio.wav"
            argv = [
                part.format(input=str(media_path), output=str(out))
                for part in shlex.split(command)
            ]
            try:
                subprocess.run(argv, check=True, capture_output=True)
            except (subprocess.CalledProcessError, OSError) as exc:
                raise DecodeFailure(-1, f"audio tool failed for {media_path}: {exc}") from exc
            if not out.exists():
                raise DecodeFailure(-1, f"audio tool produced no output for {media_path}")
            wav = WavFileSource(out)
        super().__init__(wav.read(0, wav.duration_ms))


class SyntheticFrameSource:
    """Deterministic solid-color PNG frames derived from the timestamp."""

    def __init__(self, seed: int = 0, size: tuple[int, int] = (32, 18)):
        self.seed = seed
        self.size = size

    def grab(self, ts_ms: int) -> tuple[bytes, str]:
        mix = (ts_ms * 2654435761 + self.seed * 40503) & 0xFFFFFF
        color = (mix >> 16 & 0xFF, mix >> 8 & 0xFF, mix & 0xFF)
        image = Image.new("RGB", self.size, color)
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return buf.getvalue(), "png"


class FrameDirectorySource:
    """Frames pre-extracted to files named <ms>.<ext> in one directory.

    grab returns the newest frame at or before the timestamp, or the
    earliest frame if none precedes it.
    """

    SUFFIXES = (".png", ".jpg", ".jpeg", ".webp")

    def __init__(self, directory: Path | str):
        directory = Path(directory)
        frames = []
        for p in sorted(directory.iterdir()) if directory.is_dir() else []:
            if p.suffix.lower() in self.SUFFIXES and p.stem.isdigit():
                frames.append((int(p.stem), p))
        if not frames:
            raise ConfigError(f"no <ms>.png style frames found in {directory}")
        self._frames = sorted(frames)

    def grab(self, ts_ms: int) -> tuple[bytes, str]:
        chosen = self._frames[0][1]
        for ms, path in self._frames:
            if ms > ts_ms:
                break
            chosen = path
        return chosen.read_bytes(), chosen.suffix.lstrip(".").lower()


class ToolFrameSource:
    """Grabs frames from arbitrary media via an external command per call.

    command placeholders: {input} {ts_ms} {output}.
    """

    def __init__(self, media_path: Path | str, command: str):
        self.media_path = Path(media_path)
        self.command = command

    def grab(self, ts_ms: int) -> tuple[bytes, str]:
        with tempfile.TemporaryDirectory(prefix="subtrans-frame-") as tmp:
            out = Path(tmp) / "frame.png"
            argv = [
                part.format(input=str(self.media_path), ts_ms=ts_ms, output=str(out))
                for part in shlex.split(self.command)
            ]
            try:
                subprocess.run(argv, check=True, capture_output=True)
            except (subprocess.CalledProcessError, OSError) as exc:
                raise DecodeFailure(-1, f"frame tool failed at {ts_ms} ms: {exc}") from exc
            if not out.exists():
                raise DecodeFailure(-1, f"frame tool produced no output at {ts_ms} ms")
            return out.read_bytes(), "png"


def _build_audio(spec: dict, base: Path) -> ArrayAudioSource:
    kind = spec.get("kind")
    if kind == "wav":
        return WavFileSource(_resolve(base, spec["path"]))
    if kind == "synthetic":
        return SyntheticAudioSource(
            duration_ms=int(spec["duration_ms"]),
            speech_spans_ms=[tuple(s) for s in spec.get("speech_spans_ms", [])],
            seed=int(spec.get("seed", 0)),
            amplitude=float(spec.get("amplitude", 0.25)),
        )
    raise ConfigError(f"unknown audio kind {kind!r} in asset spec")


def _build_frames(spec: dict | None, base: Path) -> FrameSource | None:
    if not spec:
        return None
    kind = spec.get("kind")
    if kind == "synthetic":
        return SyntheticFrameSource(seed=int(spec.get("seed", 0)))
    if kind == "directory":
        return FrameDirectorySource(_resolve(base, spec["path"]))
    raise ConfigError(f"unknown frames kind {kind!r} in asset spec")


def _resolve(base: Path, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() else base / path


def load_asset(path: Path | str, tools: MediaTools | None = None) -> MediaAsset:
    """Turn an input path into a MediaAsset.

    .wav loads natively; .yaml/.yml/.json describe a (possibly synthetic)
    asset; anything else needs MediaTools.audio_command, and gets frames
    only when frame_command is configured too.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input {path} does not exist")
    suffix = path.suffix.lower()

    if suffix == ".wav":
        return MediaAsset(name=path.stem, audio=WavFileSource(path), source_path=path)

    if suffix in (".yaml", ".yml", ".json"):
        try:
            spec = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad asset spec {path}: {exc}") from exc
        if not isinstance(spec, dict) or "audio" not in spec:
            raise ConfigError(f"asset spec {path} must be a mapping with an 'audio' section")
        base = path.resolve().parent
        try:
            audio = _build_audio(spec["audio"], base)
            frames = _build_frames(spec.get("frames"), base)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad asset spec {path}: {exc}") from exc
        return MediaAsset(
            name=str(spec.get("name", path.stem)),
            audio=audio,
            frames=frames,
            source_path=path,
        )

    tools = tools or MediaTools()
    if not tools.audio_command:
        raise ConfigError(
            f"no decoder for {path}: configure media_tools.audio_command to extract audio"
        )
    audio = ToolAudioSource(path, tools.audio_command)
    frames = ToolFrameSource(path, tools.frame_command) if tools.frame_command else None
    return MediaAsset(name=path.stem, audio=audio, frames=frames, source_path=path)
