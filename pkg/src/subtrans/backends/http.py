"""JSON-over-HTTP backend clients.

Every capability speaks the same tiny convention: POST one JSON object
to the configured endpoint, get one JSON object back.  Transport errors
and 5xx responses retry up to the configured count and then degrade to
BackendUnavailable, which callers already know how to absorb.  API keys
come from SUBTRANS_<KIND>_API_KEY environment variables, never files.
"""

from __future__ import annotations

import base64
import logging
import os

import httpx

from ..config import HttpSettings
from ..errors import BackendUnavailable
from ..media import AudioSpan
from .base import VlmRequest, VlmResponse, WebDoc

logger = logging.getLogger(__name__)


class JsonHttpBackend:
    kind = "generic"

    def __init__(
        self,
        endpoint: str,
        settings: HttpSettings | None = None,
        client: httpx.Client | None = None,
    ):
        settings = settings or HttpSettings()
        self.endpoint = endpoint
        self.retries = settings.retries
        self.call_count = 0
        if client is not None:
            self._client = client
        else:
            headers = {}
            key = os.environ.get(f"SUBTRANS_{self.kind.upper()}_API_KEY")
            if key:
                headers["Authorization"] = f"Bearer {key}"
            self._client = httpx.Client(timeout=settings.timeout_s, headers=headers)

    def _post(self, payload: dict) -> dict:
        self.call_count += 1
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.post(self.endpoint, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                logger.warning(
                    "%s endpoint attempt %d/%d failed: %s",
                    self.kind, attempt + 1, self.retries + 1, exc,
                )
                continue
            if response.status_code >= 500:
                last_error = BackendUnavailable(
                    f"{self.kind} endpoint returned {response.status_code}"
                )
                continue
            if response.status_code >= 400:
                raise BackendUnavailable(
                    f"{self.kind} endpoint rejected the request: "
                    f"{response.status_code} {response.text[:200]}"
                )
            try:
                data = response.json()
            except ValueError as exc:
                raise BackendUnavailable(f"{self.kind} endpoint sent non-JSON") from exc
            if not isinstance(data, dict):
                raise BackendUnavailable(f"{self.kind} endpoint sent a non-object reply")
            return data
        raise BackendUnavailable(
            f"{self.kind} endpoint unreachable after {self.retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _audio_payload(audio: AudioSpan) -> dict:
        return {
            "audio_wav_b64": base64.b64encode(audio.to_wav_bytes()).decode("ascii"),
            "start_ms": audio.start_ms,
            "end_ms": audio.end_ms,
        }


class HttpSegmenter(JsonHttpBackend):
    kind = "segmenter"

    def detect_speech(self, span: AudioSpan) -> list[tuple[int, int]]:
        data = self._post(self._audio_payload(span))
        return [(int(s), int(e)) for s, e in data.get("spans_ms", [])]


class HttpAsr(JsonHttpBackend):
    kind = "asr"

    def transcribe(self, request) -> str:
        payload = self._audio_payload(request.audio)
        payload["context_keywords"] = list(request.context_keywords)
        payload["language_hint"] = request.language_hint
        return str(self._post(payload).get("text", ""))


class HttpAudioTagger(JsonHttpBackend):
    kind = "audio_tags"

    def tag(self, audio: AudioSpan) -> list[str]:
        return [str(t) for t in self._post(self._audio_payload(audio)).get("tags", [])]


class HttpEmotion(JsonHttpBackend):
    kind = "emotion"

    def classify(self, audio: AudioSpan) -> str | None:
        label = self._post(self._audio_payload(audio)).get("label")
        return None if label in (None, "") else str(label)


class HttpVlm(JsonHttpBackend):
    kind = "vlm"

    def analyze(self, request: VlmRequest) -> VlmResponse:
        payload = {
            "prompt": request.prompt,
            "images": [
                {
                    "data_b64": base64.b64encode(f.image).decode("ascii"),
                    "format": f.format,
                    "ts_ms": f.timestamp.ms,
                }
                for f in request.images
            ],
        }
        data = self._post(payload)
        return VlmResponse(
            text=str(data.get("text", "")),
            entities=tuple(str(e) for e in data.get("entities", [])),
        )


class HttpChat(JsonHttpBackend):
    kind = "chat"

    def complete(self, messages, model: str, temperature: float, max_tokens: int) -> str:
        payload = {
            "model": model,
            "temperature": temperature,
            "max_tokens": max_tokens,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        return str(self._post(payload).get("text", ""))


class HttpWebSearch(JsonHttpBackend):
    kind = "web"

    def search(self, query: str) -> list[WebDoc]:
        data = self._post({"query": query})
        return [
            WebDoc(
                title=str(d.get("title", "")),
                snippet=str(d.get("snippet", "")),
                url=str(d.get("url", "")),
            )
            for d in data.get("results", [])
        ]
