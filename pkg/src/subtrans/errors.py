"""Exception types shared across the package.

Everything raised on purpose derives from SubtransError so callers can
catch pipeline failures without swallowing programming errors.
"""

from __future__ import annotations


class SubtransError(Exception):
    """Base class for all errors raised by this package."""


class MalformedBlock(SubtransError):
    """An SRT block could not be parsed (bad arrow, bad time, bad range)."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ConfigError(SubtransError):
    """Invalid or unresolvable configuration."""


class BackendUnavailable(SubtransError):
    """A backend could not serve the request (network, quota, missing tool)."""


class TranscriptionFailed(SubtransError):
    """Speech recognition failed for a chunk; the pipeline cannot continue."""

    def __init__(self, chunk_index: int, reason: str = "backend unavailable"):
        super().__init__(f"chunk {chunk_index}: {reason}")
        self.chunk_index = chunk_index


class DecodeFailure(SubtransError):
    """Audio for a chunk exists but could not be decoded."""

    def __init__(self, chunk_index: int, reason: str = "undecodable audio"):
        super().__init__(f"chunk {chunk_index}: {reason}")
        self.chunk_index = chunk_index


class IndexGap(SubtransError):
    """An append would leave a hole in a short-term memory sequence."""


class EmptyQuery(SubtransError):
    """A memory query was requested with no query text."""


class MissingSlot(SubtransError):
    """A prompt template was rendered without one of its required slots."""

    def __init__(self, template_id: str, slot: str):
        super().__init__(f"template {template_id!r} is missing required slot {slot!r}")
        self.template_id = template_id
        self.slot = slot


class ResponseEmpty(SubtransError):
    """A chat backend returned a blank completion."""


class MockScriptMiss(SubtransError):
    """A scripted mock backend had no answer for the request it received."""


class LengthMismatch(SubtransError):
    """Hypothesis and reference corpora differ in size."""


class EmptyCorpus(SubtransError):
    """A metric was asked to score an empty corpus."""


class EmptyReference(SubtransError):
    """SubER needs at least one reference token to normalize against."""
