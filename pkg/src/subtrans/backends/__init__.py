"""Backend protocols, scripted mocks, HTTP clients, and the factory.

A backend spec string selects the implementation:

* ``mock:<path>``   scripted mock, path relative to the config file
* ``remote:<url>``  JSON-over-HTTP client
* ``energy``        (segmenter only) the built-in energy VAD
* ``none``          explicitly no backend for this kind
"""

from __future__ import annotations

from pathlib import Path

from ..config import HttpSettings, PipelineConfig
from ..errors import ConfigError
from .base import (
    AsrBackend,
    AudioTagBackend,
    BackendSet,
    ChatBackend,
    EmotionBackend,
    SegmenterBackend,
    VlmBackend,
    VlmRequest,
    VlmResponse,
    WebDoc,
    WebSearchBackend,
)
from .http import (
    HttpAsr,
    HttpAudioTagger,
    HttpChat,
    HttpEmotion,
    HttpSegmenter,
    HttpVlm,
    HttpWebSearch,
)
from .mocks import (
    ScriptedAsr,
    ScriptedAudioTagger,
    ScriptedChat,
    ScriptedEmotion,
    ScriptedSegmenter,
    ScriptedVlm,
    ScriptedWebSearch,
)

_MOCKS = {
    "segmenter": ScriptedSegmenter,
    "asr": ScriptedAsr,
    "audio_tags": ScriptedAudioTagger,
    "emotion": ScriptedEmotion,
    "vlm": ScriptedVlm,
    "chat": ScriptedChat,
    "web": ScriptedWebSearch,
}

_REMOTES = {
    "segmenter": HttpSegmenter,
    "asr": HttpAsr,
    "audio_tags": HttpAudioTagger,
    "emotion": HttpEmotion,
    "vlm": HttpVlm,
    "chat": HttpChat,
    "web": HttpWebSearch,
}


def build_backend(
    kind: str,
    spec: str,
    *,
    http: HttpSettings | None = None,
    base_dir: Path | None = None,
):
    """Build one backend from its spec string; None means "no backend"."""
    if kind not in _MOCKS:
        raise ConfigError(f"unknown backend kind {kind!r}")
    spec = spec.strip()
    if spec == "none":
        return None
    if spec == "energy":
        if kind != "segmenter":
            raise ConfigError(f"'energy' only makes sense for the segmenter, not {kind!r}")
        # segment() builds its VAD fallback from SegmentConfig thresholds
        return None
    scheme, sep, rest = spec.partition(":")
    if not sep:
        raise ConfigError(f"backend spec {spec!r} for {kind!r} needs a scheme prefix")
    if scheme == "mock":
        path = Path(rest)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"mock script {path} for {kind!r} does not exist")
        return _MOCKS[kind](path)
    if scheme == "remote":
        return _REMOTES[kind](rest, settings=http)
    raise ConfigError(f"unknown backend scheme {scheme!r} in spec {spec!r}")


def build_backend_set(config: PipelineConfig) -> BackendSet:
    """Resolve every configured backend.  Fresh instances per call, so
    mock call logs never leak between runs."""
    backends = BackendSet()
    for kind, spec in config.backends.items():
        built = build_backend(kind, spec, http=config.http, base_dir=config.base_dir)
        setattr(backends, kind, built)
    return backends


__all__ = [
    "AsrBackend",
    "AudioTagBackend",
    "BackendSet",
    "ChatBackend",
    "EmotionBackend",
    "SegmenterBackend",
    "VlmBackend",
    "VlmRequest",
    "VlmResponse",
    "WebDoc",
    "WebSearchBackend",
    "build_backend",
    "build_backend_set",
    "HttpAsr",
    "HttpAudioTagger",
    "HttpChat",
    "HttpEmotion",
    "HttpSegmenter",
    "HttpVlm",
    "HttpWebSearch",
    "ScriptedAsr",
    "ScriptedAudioTagger",
    "ScriptedChat",
    "ScriptedEmotion",
    "ScriptedSegmenter",
    "ScriptedVlm",
    "ScriptedWebSearch",
]
