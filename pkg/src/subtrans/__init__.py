"""subtrans: memory-augmented multi-agent subtitle translation for long video.

The package splits into three layers:

* core domain modules (srt, media, audio/vision agents, memory, team,
  metrics, pipeline) that are plain Python with injected backends,
* a FastAPI service (subtrans.service) exposing the core over HTTP,
* a thin CLI (subtrans.cli) that talks to the service, in-process by
  default or to a remote server with --server.
"""

from .srt import (
    SubtitleEntry,
    SubtitleFile,
    Timestamp,
    ValidationReport,
    parse_srt,
    render_srt,
    validate_timeline,
)

__version__ = "0.1.0"

__all__ = [
    "SubtitleEntry",
    "SubtitleFile",
    "Timestamp",
    "ValidationReport",
    "parse_srt",
    "render_srt",
    "validate_timeline",
    "__version__",
]
