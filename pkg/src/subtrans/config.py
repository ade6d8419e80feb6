"""Configuration models for jobs, segmentation, backends, and the pipeline.

These are pydantic models so the same validation runs whether a config
arrives from a YAML file, a CLI override, or a service request body.
Core modules treat them as plain value objects.
"""

from __future__ import annotations

from pathlib import Path

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from .errors import ConfigError

BACKEND_KINDS = ("segmenter", "asr", "audio_tags", "emotion", "vlm", "chat", "web")


class SegmentConfig(BaseModel):
    """Knobs for speech-activity chunking."""

    min_chunk_ms: int = Field(default=1_000, gt=0)
    max_chunk_ms: int = Field(default=120_000, gt=0)
    merge_gap_ms: int = Field(default=300, ge=0)
    energy_threshold: float = Field(default=0.01, gt=0)
    frame_ms: int = Field(default=30, gt=0)
    hangover_ms: int = Field(default=240, ge=0)

    @model_validator(mode="after")
    def _check_bounds(self):
        # a span just over max must split into two pieces >= min each
        if self.max_chunk_ms < 2 * self.min_chunk_ms:
            raise ValueError(
                f"max_chunk_ms ({self.max_chunk_ms}) must be at least "
                f"2 * min_chunk_ms ({self.min_chunk_ms})"
            )
        return self


class KeyframePolicy(BaseModel):
    """How many representative frames to pull per chunk."""

    max_frames: int = Field(default=3, ge=0)


class JobConfig(BaseModel):
    """What to translate and how the agent team should behave."""

    domain: str = "general"
    source_language: str = "en"
    target_language: str = "zh"
    user_instruction: str | None = None
    history_window: int = Field(default=5, ge=0)
    proofreader_batch: int = Field(default=20, ge=1)
    enable_proofreader: bool = True
    enable_domain_memory: bool = True
    enable_vision: bool = True
    enable_web: bool = True

    @model_validator(mode="after")
    def _check_languages(self):
        if self.source_language == self.target_language:
            raise ValueError("source_language and target_language must differ")
        return self


class ChatSettings(BaseModel):
    model: str = "default"
    temperature: float = Field(default=0.0, ge=0.0)
    max_tokens: int = Field(default=1024, gt=0)
    debug_log: Path | None = None


class HttpSettings(BaseModel):
    timeout_s: float = Field(default=30.0, gt=0)
    retries: int = Field(default=2, ge=0)


class MediaTools(BaseModel):
    """External command templates for media without native decoders.

    audio_command placeholders: {input} {output}.
    frame_command placeholders: {input} {ts_ms} {output}.
    """

    audio_command: str | None = None
    frame_command: str | None = None


class PipelineConfig(BaseModel):
    """Everything a pipeline run needs besides the input media itself."""

    job: JobConfig = JobConfig()
    segment: SegmentConfig = SegmentConfig()
    keyframes: KeyframePolicy = KeyframePolicy()
    backends: dict[str, str] = Field(default_factory=dict)
    kb_paths: list[Path] = Field(default_factory=list)
    output_dir: Path = Path("out")
    emit_video: bool = False
    muxer_command: str | None = None
    chat: ChatSettings = ChatSettings()
    http: HttpSettings = HttpSettings()
    media_tools: MediaTools = MediaTools()
    max_web_docs: int = Field(default=3, ge=0)
    base_dir: Path = Path(".")

    @field_validator("backends")
    @classmethod
    def _check_backend_kinds(cls, value):
        unknown = sorted(set(value) - set(BACKEND_KINDS))
        if unknown:
            raise ValueError(
                f"unknown backend kinds {unknown}; expected a subset of {list(BACKEND_KINDS)}"
            )
        return value

    def resolve(self, path: Path | str) -> Path:
        """Resolve a possibly relative path against the config's directory."""
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def load_config(path: Path | str) -> PipelineConfig:
    """Load a pipeline config from YAML (or JSON, which YAML subsumes)."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = yaml.safe_load(raw)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping, got {type(data).__name__}")
    data.setdefault("base_dir", str(path.resolve().parent))
    try:
        return PipelineConfig(**data)
    except ValueError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc


def apply_overrides(
    config: PipelineConfig,
    *,
    domain: str | None = None,
    source_language: str | None = None,
    target_language: str | None = None,
    user_instruction: str | None = None,
    output_dir: Path | str | None = None,
) -> PipelineConfig:
    """Return a copy of config with non-None overrides applied."""
    job_updates = {
        key: value
        for key, value in {
            "domain": domain,
            "source_language": source_language,
            "target_language": target_language,
            "user_instruction": user_instruction,
        }.items()
        if value is not None
    }
    updates: dict = {}
    if job_updates:
        updates["job"] = JobConfig(**{**config.job.model_dump(), **job_updates})
    if output_dir is not None:
        updates["output_dir"] = Path(output_dir)
    return config.model_copy(update=updates) if updates else config
