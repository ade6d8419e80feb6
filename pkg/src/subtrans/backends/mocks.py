"""Scripted mock backends for tests, fixtures, and offline demo runs.

Each mock answers from a small YAML-able script, records what it was
asked (so tests can assert on the requests that crossed the seam), and
raises MockScriptMiss when the script has no answer rather than
inventing one: a silent wrong answer poisons a determinism test, a loud
miss points at the gap.

Common script keys: ``fail: true`` makes any mock raise
BackendUnavailable on every call, which is how degradation paths get
exercised.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from ..errors import BackendUnavailable, MockScriptMiss
from ..media import AudioSpan
from .base import VlmRequest, VlmResponse, WebDoc


def load_script(script) -> dict:
    """Accept a dict as-is or a path to a YAML/JSON script file."""
    if isinstance(script, dict):
        return script
    if isinstance(script, (str, Path)):
        data = yaml.safe_load(Path(script).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise MockScriptMiss(f"mock script {script} must be a mapping")
        return data
    raise MockScriptMiss(f"unsupported mock script type {type(script).__name__}")


class _ScriptedBase:
    def __init__(self, script=None):
        self.script = load_script(script or {})
        self.call_count = 0

    def _tick(self):
        self.call_count += 1
        if self.script.get("fail"):
            raise BackendUnavailable(f"{type(self).__name__} scripted as unavailable")


class ScriptedSegmenter(_ScriptedBase):
    """Script: ``spans_ms: [[start, end], ...]`` (absolute ms)."""

    def __init__(self, script=None):
        super().__init__(script)
        self.calls: list[tuple[int, int]] = []

    def detect_speech(self, span: AudioSpan) -> list[tuple[int, int]]:
        self._tick()
        self.calls.append((span.start_ms, span.end_ms))
        spans = self.script.get("spans_ms")
        if spans is None:
            raise MockScriptMiss("segmenter script has no spans_ms")
        return [(int(s), int(e)) for s, e in spans]


class ScriptedAsr(_ScriptedBase):
    """Script: ``transcripts`` as a list consumed by chunk index, or a
    mapping from chunk index to text."""

    def __init__(self, script=None):
        super().__init__(script)
        self.requests = []

    def transcribe(self, request) -> str:
        self._tick()
        self.requests.append(request)
        transcripts = self.script.get("transcripts")
        index = request.audio.chunk_index
        if isinstance(transcripts, list):
            key = index if index is not None else len(self.requests) - 1
            if 0 <= key < len(transcripts):
                return str(transcripts[key])
        elif isinstance(transcripts, dict):
            for k in (index, str(index)):
                if k in transcripts:
                    return str(transcripts[k])
        raise MockScriptMiss(f"asr script has no transcript for chunk {index}")


class ScriptedAudioTagger(_ScriptedBase):
    """Script: ``tags`` as a list-of-lists by call order, or ``constant``."""

    def tag(self, audio: AudioSpan) -> list[str]:
        self._tick()
        if "tags" in self.script:
            seq = self.script["tags"]
            if self.call_count - 1 < len(seq):
                return [str(t) for t in seq[self.call_count - 1]]
            raise MockScriptMiss(f"tagger script exhausted at call {self.call_count}")
        return [str(t) for t in self.script.get("constant", [])]


class ScriptedEmotion(_ScriptedBase):
    """Script: ``labels`` by call order, or ``constant``."""

    def classify(self, audio: AudioSpan) -> str | None:
        self._tick()
        if "labels" in self.script:
            seq = self.script["labels"]
            if self.call_count - 1 < len(seq):
                value = seq[self.call_count - 1]
                return None if value is None else str(value)
            raise MockScriptMiss(f"emotion script exhausted at call {self.call_count}")
        value = self.script.get("constant")
        return None if value is None else str(value)


class ScriptedVlm(_ScriptedBase):
    """Script: ``descriptions`` by call order, optional parallel
    ``entities`` list-of-lists."""

    def __init__(self, script=None):
        super().__init__(script)
        self.requests: list[VlmRequest] = []

    def analyze(self, request: VlmRequest) -> VlmResponse:
        self._tick()
        self.requests.append(request)
        descriptions = self.script.get("descriptions", [])
        i = self.call_count - 1
        if i >= len(descriptions):
            raise MockScriptMiss(f"vlm script exhausted at call {self.call_count}")
        entities = self.script.get("entities", [])
        extra = tuple(str(e) for e in entities[i]) if i < len(entities) else ()
        return VlmResponse(text=str(descriptions[i]), entities=extra)


class ScriptedChat(_ScriptedBase):
    """Script: ``rules`` matched first (all ``contains`` substrings must
    appear in the concatenated prompt text, first rule wins), then a
    ``sequence`` consumed in order, then ``default``.  No match raises."""

    def __init__(self, script=None):
        super().__init__(script)
        self.calls: list[str] = []
        self._cursor = 0

    def complete(self, messages, model: str, temperature: float, max_tokens: int) -> str:
        self._tick()
        text = "\n".join(m.content for m in messages)
        self.calls.append(text)
        for rule in self.script.get("rules", []):
            needles = rule.get("contains", [])
            if all(str(n) in text for n in needles):
                return str(rule["response"])
        sequence = self.script.get("sequence", [])
        if self._cursor < len(sequence):
            self._cursor += 1
            return str(sequence[self._cursor - 1])
        if "default" in self.script:
            return str(self.script["default"])
        head = text.replace("\n", " ")[:160]
        raise MockScriptMiss(f"chat script has no response for prompt starting: {head!r}")


class ScriptedWebSearch(_ScriptedBase):
    """Script: ``rules`` with ``contains``/``results`` matched against the
    query, else the constant ``results`` list."""

    def __init__(self, script=None):
        super().__init__(script)
        self.queries: list[str] = []

    @staticmethod
    def _docs(items) -> list[WebDoc]:
        return [
            WebDoc(
                title=str(d.get("title", "")),
                snippet=str(d.get("snippet", "")),
                url=str(d.get("url", "")),
            )
            for d in items
        ]

    def search(self, query: str) -> list[WebDoc]:
        self._tick()
        self.queries.append(query)
        for rule in self.script.get("rules", []):
            if all(str(n) in query for n in rule.get("contains", [])):
                return self._docs(rule.get("results", []))
        return self._docs(self.script.get("results", []))
