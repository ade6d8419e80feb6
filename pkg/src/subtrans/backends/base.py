"""Backend protocols and the small value types that cross them.

Every capability the pipeline consumes from the outside world (speech
recognition, audio tagging, emotion, vision-language analysis, chat,
web search, speech segmentation) is a protocol here, so tests script
them, the service mocks them, and production points them at real
deployments without the core noticing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol, runtime_checkable

from ..media import AudioSpan, FrameRef

if TYPE_CHECKING:
    from ..audio_agent import TranscriptionRequest
    from ..runtime import ChatMessage


@dataclass(frozen=True)
class VlmRequest:
    """Frames plus the rendered analysis prompt."""

    images: tuple[FrameRef, ...]
    prompt: str


@dataclass(frozen=True)
class VlmResponse:
    text: str
    entities: tuple[str, ...] = ()


@dataclass(frozen=True)
class WebDoc:
    """One retrieved web snippet."""

    title: str
    snippet: str
    url: str = ""


@runtime_checkable
class AsrBackend(Protocol):
    def transcribe(self, request: "TranscriptionRequest") -> str: ...


@runtime_checkable
class AudioTagBackend(Protocol):
    def tag(self, audio: AudioSpan) -> list[str]: ...


@runtime_checkable
class EmotionBackend(Protocol):
    def classify(self, audio: AudioSpan) -> str | None: ...


@runtime_checkable
class VlmBackend(Protocol):
    def analyze(self, request: VlmRequest) -> VlmResponse: ...


@runtime_checkable
class ChatBackend(Protocol):
    def complete(self, messages: "list[ChatMessage]", model: str, temperature: float,
                 max_tokens: int) -> str: ...


@runtime_checkable
class WebSearchBackend(Protocol):
    def search(self, query: str) -> list[WebDoc]: ...


@runtime_checkable
class SegmenterBackend(Protocol):
    def detect_speech(self, span: AudioSpan) -> list[tuple[int, int]]: ...


@dataclass
class BackendSet:
    """The full complement a pipeline run draws from.  Only chat and asr
    are mandatory; everything else degrades gracefully when absent."""

    chat: ChatBackend | None = None
    asr: AsrBackend | None = None
    segmenter: SegmenterBackend | None = None
    audio_tags: AudioTagBackend | None = None
    emotion: EmotionBackend | None = None
    vlm: VlmBackend | None = None
    web: WebSearchBackend | None = None

    def call_counts(self) -> dict[str, int]:
        """Per-kind call counters for backends that keep one."""
        counts: dict[str, int] = {}
        for kind in ("chat", "asr", "segmenter", "audio_tags", "emotion", "vlm", "web"):
            backend = getattr(self, kind)
            n = getattr(backend, "call_count", None)
            if backend is not None and isinstance(n, int):
                counts[kind] = n
        return counts
