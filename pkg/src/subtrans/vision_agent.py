"""Vision agent: turns sampled keyframes into visual cues.

A visual cue is a short description of what is on screen plus the
entities it names, grounded against the domain term list so downstream
agents and ASR biasing can rely on exact spellings.  Vision is advisory:
no frames or a dead backend yields an empty cue, never a failed run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .backends.base import VlmBackend, VlmRequest
from .errors import BackendUnavailable
from .media import FrameRef
from .memory import _term_pattern
from .runtime import VISION_TEMPLATE, PromptTemplate, render_prompt

logger = logging.getLogger(__name__)

PRIOR_CUE_WINDOW = 5


@dataclass(frozen=True)
class VisualCue:
    """What the vision pass saw in one chunk."""

    chunk_index: int
    description: str
    entities: tuple[str, ...] = ()


def extract_entities(description: str, domain_terms: Sequence[str]) -> list[str]:
    """Domain terms that occur in the description, case-insensitive and
    whole-word where word boundaries exist, in term-list order."""
    if not description:
        return []
    out: list[str] = []
    seen: set[str] = set()
    for term in domain_terms:
        if not term or term.casefold() in seen:
            continue
        if _term_pattern(term).search(description):
            seen.add(term.casefold())
            out.append(term)
    return out


def _empty_cue(chunk_index: int) -> VisualCue:
    return VisualCue(chunk_index=chunk_index, description="", entities=())


def analyze_frames(
    frames: Sequence[FrameRef],
    visual_memory: "Sequence[VisualCue]",
    domain_terms: Sequence[str],
    backend: VlmBackend | None,
    chunk_index: int,
    prompt: PromptTemplate = VISION_TEMPLATE,
) -> VisualCue:
    """Describe a chunk's frames in context.

    The prompt carries the last PRIOR_CUE_WINDOW cue descriptions and the
    domain term list.  Entities are the union of term matches in the
    returned description and whatever entities the backend itself names,
    deduplicated case-insensitively with term matches first.
    """
    if not frames or backend is None:
        if not frames:
            logger.warning("chunk %d has no frames; visual cue is empty", chunk_index)
        return _empty_cue(chunk_index)

    prior = [c for c in visual_memory if c.description][-PRIOR_CUE_WINDOW:]
    prior_text = "\n".join(f"- [chunk {c.chunk_index}] {c.description}" for c in prior)
    rendered = render_prompt(
        prompt,
        {
            "prior_visual_context": prior_text,
            "domain_terms": ", ".join(t for t in domain_terms if t),
        },
    )
    try:
        response = backend.analyze(VlmRequest(images=tuple(frames), prompt=rendered))
    except BackendUnavailable as exc:
        logger.warning("vision backend unavailable for chunk %d (%s)", chunk_index, exc)
        return _empty_cue(chunk_index)

    description = response.text.strip()
    entities = extract_entities(description, domain_terms)
    seen = {e.casefold() for e in entities}
    for extra in response.entities:
        extra = extra.strip()
        if extra and extra.casefold() not in seen:
            seen.add(extra.casefold())
            entities.append(extra)
    return VisualCue(chunk_index=chunk_index, description=description, entities=tuple(entities))
