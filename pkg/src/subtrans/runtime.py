"""Agent runtime: prompt templates, chat completion, protocol parsing.

The templates are the team's working protocol.  Their operative parts
are load-bearing: the translator and editor are ordered to preserve line
counts, the proofreader is ordered to answer in ``Segment N: ...`` lines
with PASS / UNCLEAR verdicts, and the parser on this side is total, so
any reply, however mangled, still yields one suggestion per segment.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .backends.base import ChatBackend
from .errors import ConfigError, MissingSlot, ResponseEmpty

logger = logging.getLogger(__name__)

PASS = "PASS"
UNCLEAR = "UNCLEAR"
COMMENT = "COMMENT"
SUGGESTION_KINDS = (PASS, UNCLEAR, COMMENT)

_SLOT_RE = re.compile(r"\{([a-z][a-z0-9_]*)\}")
_SEGMENT_LINE_RE = re.compile(r"^\s*\[?\s*segment\s+(\d+)\s*\]?\s*[:.\-]*\s*(.*)$", re.IGNORECASE)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad message role {self.role!r}")
        if not self.content:
            raise ValueError("message content must not be empty")


@dataclass
class ChatParams:
    model: str = "default"
    temperature: float = 0.0
    max_tokens: int = 1024
    debug_log: Path | None = None


@dataclass(frozen=True)
class PromptTemplate:
    """A template body with {slot} placeholders.

    required slots must be supplied at render time; optional ones fall
    back to the documented defaults.
    """

    template_id: str
    body: str
    required: frozenset[str] = frozenset()
    defaults: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Suggestion:
    """One proofreader verdict for one segment (absolute index)."""

    index: int
    kind: str
    text: str = ""

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"suggestion index must be >= 0, got {self.index}")
        if self.kind not in SUGGESTION_KINDS:
            raise ValueError(f"bad suggestion kind {self.kind!r}")


TRANSLATOR_TEMPLATE = PromptTemplate(
    template_id="translator",
    required=frozenset({"domain", "source_language", "target_language", "text"}),
    defaults={
        "translation_history": "No translation history yet.",
        "domain_guide": "No domain context available.",
        "web_docs": "No supporting documents available.",
        "visual_context": "No visual context available.",
        "audio_context": "No audio context available.",
    },
    body="""\
You are a professional translator working in the domain of {domain}, translating from {source_language} to {target_language}.

You will be given a segment of the source script split across lines. Your translation must keep the original meaning and exactly the same number of lines. If the source breaks one sentence across lines, break your translation at the matching places. Output only the translated lines, one per source line, with no commentary or numbering.

Supporting information follows. Refer to it when it helps; ignore it when it does not.

Previous translation history:
{translation_history}

If any word below appears in the segment, use the listed rendering as the reference translation:
{domain_guide}

Supporting documents from web search:
{web_docs}

Description of the current video clip:
{visual_context}

Audio cues for the current clip:
{audio_context}

Translate the following text from {source_language} to {target_language}:
{text}

Your translation:""",
)

PROOFREADER_TEMPLATE = PromptTemplate(
    template_id="proofreader",
    required=frozenset({"segment_count", "segments", "domain"}),
    defaults={
        "short_term_memory": "None.",
        "domain_guide": "No term context available.",
        "web_docs": "No web context available.",
    },
    body="""\
You are a translation proofreader. Below are {segment_count} subtitle segments from one video in the domain of {domain}. Some are full sentences, some are fragments. Give specific advice for each one, using information across segments rather than treating each in isolation.

Return suggestions in this format:
Segment 0: [your comment here]
Segment 1: [your comment here]
...

DO NOT return JSON. DO NOT rewrite the translation. Just return suggestion text for each segment.

---
{segments}

Short-term memory:
{short_term_memory}

Term context:
{domain_guide}

Web memory context:
{web_docs}

Focus on:
1. Translation accuracy in the domain of {domain} (missing or incorrect meanings).
2. Fluency (grammar, spelling, repetition) only where it affects understanding, keeping the translation smooth across segments.
3. Terminology: use the term context to fix idioms and keep every sentence in domain-specific language.
4. If you have no suggestion for a segment, return "PASS" for it.
5. The source text is not guaranteed accurate. If you doubt the source itself, return "UNCLEAR" and name the location; the editor will check the issue.
6. Only make suggestions when you believe revision is necessary.""",
)

EDITOR_TEMPLATE = PromptTemplate(
    template_id="editor",
    required=frozenset({"segment_index", "source", "translation", "domain", "target_language"}),
    defaults={
        "suggestion": "No suggestion provided.",
        "user_instruction": "No user instruction provided.",
        "visual_context": "No visual context available.",
        "audio_context": "No audio context available.",
        "previous_history": "None.",
        "next_history": "None.",
        "long_term_memory": "No long-term memory available.",
    },
    body="""\
You are an editor ensuring overall translation quality and coherence, aligning the translation with the original video content in the domain of {domain}. Keep terms and style aligned with the domain's language.

Segment index: {segment_index}
Source text:
{source}

Translated text:
{translation}

A proofreader suggestion for this segment follows. It may or may not be useful; apply it only where necessary (for example, term correctness). The proofreader sees less than you do, so double-check before revising. A suggestion of "UNCLEAR" means the proofreader doubts the source text at the location they name; check it against the other context provided to you. If there is no suggestion, you may skip this part, but still check the other modality context and long-term memory for correctness and coherence.
Suggestion:
{suggestion}

Your edit must also follow this instruction when one is provided:
User instruction:
{user_instruction}

--- Multimodal context (short-term memory) ---
Visual cues:
The source text might not be accurate; check it against the video context when provided:
{visual_context}

Audio cues:
{audio_context}

Translation context:
The previous and next segments' translations may help you keep coherence:
Previous translation history (up to 5 segments):
{previous_history}
Next translation history (up to 5 segments):
{next_history}

--- Long-term memory ---
Broader context and domain knowledge; use it to improve the translation or make corrections:
{long_term_memory}

Notice:
1. Correct or adjust the text to better match the video context.
2. Improve coherence across segments.
3. Keep logical consistency and any broader context adjustments.
4. Keep the translation accurate and aligned with the domain of {domain}.
5. Keep the translation smooth and fluent across segments.
6. For fluency in {target_language}, you need not be word-for-word accurate, but you must convey the same information.
7. Keep exactly the same number of lines as the translated text you were given.

--- Important ---
Directly return the revised content only.""",
)

VISION_TEMPLATE = PromptTemplate(
    template_id="vision_analysis",
    required=frozenset(),
    defaults={
        "prior_visual_context": "No prior visual context.",
        "domain_terms": "none",
    },
    body="""\
You are a video analyst supporting a subtitle translation team. Describe what happens in these frames from the current clip in two or three sentences, naming on-screen entities, actions, and any visible text.

Prior visual context from earlier clips:
{prior_visual_context}

Domain terms to watch for (use these exact names when they appear):
{domain_terms}

Return only the description text.""",
)

TEMPLATES: dict[str, PromptTemplate] = {
    t.template_id: t
    for t in (TRANSLATOR_TEMPLATE, PROOFREADER_TEMPLATE, EDITOR_TEMPLATE, VISION_TEMPLATE)
}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise ConfigError(f"unknown prompt template {template_id!r}") from None


def render_prompt(template: PromptTemplate, slots: Mapping[str, object]) -> str:
    """Substitute {slot} placeholders in one pass.

    Required slots must be present and non-None.  Optional slots fall
    back to the template defaults; a None or empty value also falls back,
    which is what makes "No suggestion provided." appear.  Because
    substitution is single-pass, braces inside slot values stay inert.
    """
    values: dict[str, str] = dict(template.defaults)
    for name, value in slots.items():
        if value is None:
            continue
        text = str(value)
        if not text.strip() and name in template.defaults:
            continue
        values[name] = text
    for name in template.required:
        if name not in values:
            raise MissingSlot(template.template_id, name)

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise MissingSlot(template.template_id, name)
        return values[name]

    return _SLOT_RE.sub(substitute, template.body)


def complete(backend: ChatBackend, messages: list[ChatMessage], params: ChatParams) -> str:
    """Run one chat completion and insist on a non-blank answer."""
    text = backend.complete(
        messages,
        model=params.model,
        temperature=params.temperature,
        max_tokens=params.max_tokens,
    )
    if not text or not text.strip():
        raise ResponseEmpty("chat backend returned a blank completion")
    text = text.strip()
    if params.debug_log is not None:
        record = {
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "response": text,
        }
        with open(params.debug_log, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return text


def _parse_proofreader(
    text: str, n_segments: int, base_index: int
) -> tuple[list[Suggestion], list[str]]:
    warnings: list[str] = []
    found: dict[int, str] = {}
    current: int | None = None
    preamble = False
    for line in text.split("\n"):
        m = _SEGMENT_LINE_RE.match(line)
        if m is None:
            if current is not None and line.strip():
                found[current] = (found[current] + " " + line.strip()).strip()
            elif current is None and line.strip():
                preamble = True
            continue
        idx = int(m.group(1))
        if not base_index <= idx < base_index + n_segments:
            warnings.append(f"proofreader mentioned out-of-range segment {idx}; dropped")
            current = None
            continue
        if idx in found:
            warnings.append(f"proofreader repeated segment {idx}; keeping the last answer")
        found[idx] = m.group(2).strip()
        current = idx
    if preamble:
        warnings.append("proofreader output had text before the first segment line; ignored")

    suggestions: list[Suggestion] = []
    for idx in range(base_index, base_index + n_segments):
        if idx not in found:
            warnings.append(f"proofreader gave no verdict for segment {idx}; assuming PASS")
            suggestions.append(Suggestion(index=idx, kind=PASS))
            continue
        verdict = found[idx]
        upper = verdict.upper()
        if not verdict or upper == PASS or upper.rstrip(".!") == PASS:
            suggestions.append(Suggestion(index=idx, kind=PASS))
        elif upper.startswith(UNCLEAR):
            suggestions.append(Suggestion(index=idx, kind=UNCLEAR, text=verdict))
        else:
            suggestions.append(Suggestion(index=idx, kind=COMMENT, text=verdict))
    return suggestions, warnings


def parse_proofreader_output(
    text: str, n_segments: int, base_index: int = 0
) -> list[Suggestion]:
    """Parse a proofreader reply into exactly n_segments suggestions.

    Accepts ``Segment N: ...`` and ``[Segment N] ...`` lines, joins
    continuation lines onto the preceding verdict, and fails open:
    segments the reply skips become PASS, out-of-range or duplicated
    lines are dropped or last-wins, all with logged warnings.  Never
    raises on malformed text.
    """
    if n_segments < 0:
        raise ValueError(f"n_segments must be >= 0, got {n_segments}")
    suggestions, warnings = _parse_proofreader(text, n_segments, base_index)
    for w in warnings:
        logger.warning("%s", w)
    return suggestions


@dataclass
class AgentRuntime:
    """Shared chat plumbing for the team: one backend, one set of params,
    per-role call counters, and accumulated warnings for the run report."""

    chat_backend: ChatBackend
    params: ChatParams = field(default_factory=ChatParams)
    templates: dict[str, PromptTemplate] = field(default_factory=lambda: dict(TEMPLATES))
    counters: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def template(self, template_id: str) -> PromptTemplate:
        try:
            return self.templates[template_id]
        except KeyError:
            raise ConfigError(f"unknown prompt template {template_id!r}") from None

    def render(self, template_id: str, **slots) -> str:
        return render_prompt(self.template(template_id), slots)

    def chat(self, role: str, messages: list[ChatMessage]) -> str:
        self.counters[f"chat.{role}"] = self.counters.get(f"chat.{role}", 0) + 1
        return complete(self.chat_backend, messages, self.params)

    def warn(self, message: str) -> None:
        logger.warning("%s", message)
        self.warnings.append(message)

    def proofread_suggestions(
        self, text: str, n_segments: int, base_index: int = 0
    ) -> list[Suggestion]:
        """parse_proofreader_output, but warnings land in the run report."""
        suggestions, warnings = _parse_proofreader(text, n_segments, base_index)
        for w in warnings:
            self.warn(w)
        return suggestions
