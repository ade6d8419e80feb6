"""Short- and long-term memory for the translation team.

Short-term memory is working state for one run: the rolling translation
history plus per-chunk visual and audio cues, all append-only and
index-checked so a skipped update is caught at the write, not three
agents later.  Long-term memory is a read-only terminology knowledge
base loaded at init, plus an optional web search client.
"""

from __future__ import annotations

import dataclasses
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .backends.base import WebDoc, WebSearchBackend
from .errors import BackendUnavailable, ConfigError, EmptyQuery, IndexGap

if TYPE_CHECKING:
    from .audio_agent import AudioCue
    from .vision_agent import VisualCue

logger = logging.getLogger(__name__)

EXCERPT_CHARS = 240
KB_SUFFIXES = (".md", ".txt", ".kb")

_TERM_RE = re.compile(r"^term:\s*(?P<src>.+?)\s*=>\s*(?P<tgt>.+?)\s*(?:\|\s*(?P<note>.*?)\s*)?$")
_TITLE_RE = re.compile(r"^title:\s*(?P<title>.*?)\s*$")


@dataclass(frozen=True)
class HistoryEntry:
    """One translated segment: 0-based index, source text, translation."""

    index: int
    source: str
    translation: str

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"history index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class Term:
    """A terminology mapping from a knowledge doc."""

    source_term: str
    target_term: str
    note: str = ""
    doc_id: str = ""


@dataclass(frozen=True)
class KnowledgeDoc:
    doc_id: str
    title: str
    terms: tuple[Term, ...]
    body: str


@dataclass(frozen=True)
class DocExcerpt:
    doc_id: str
    title: str
    excerpt: str
    matches: int


@dataclass(frozen=True)
class DomainGuide:
    """What the knowledge base has to say about a piece of text."""

    terms: tuple[Term, ...] = ()
    docs: tuple[DocExcerpt, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.terms and not self.docs

    def render(self) -> str:
        """Deterministic prompt text for this guide."""
        if self.is_empty:
            return ""
        lines = []
        if self.terms:
            lines.append("Terminology:")
            for t in self.terms:
                suffix = f" ({t.note})" if t.note else ""
                lines.append(f"- {t.source_term} => {t.target_term}{suffix}")
        if self.docs:
            lines.append("Reference notes:")
            for d in self.docs:
                title = d.title or d.doc_id
                lines.append(f"[{d.doc_id}] {title}: {d.excerpt}")
        return "\n".join(lines)


@dataclass
class ShortTermMemory:
    """Per-run working state, discarded when the run ends."""

    history: list[HistoryEntry] = field(default_factory=list)
    visual_cues: "list[VisualCue]" = field(default_factory=list)
    audio_cues: "list[AudioCue]" = field(default_factory=list)


@dataclass
class LongTermMemory:
    """Knowledge docs loaded at init plus an optional web client."""

    docs: tuple[KnowledgeDoc, ...] = ()
    web: WebSearchBackend | None = None

    @property
    def terms(self) -> tuple[Term, ...]:
        return tuple(t for doc in self.docs for t in doc.terms)


@dataclass
class Memory:
    short_term: ShortTermMemory
    long_term: LongTermMemory


# short-term ops


def append_history(memory: ShortTermMemory, entry: HistoryEntry) -> None:
    """Append the next history entry; indices must stay gap-free."""
    if entry.index != len(memory.history):
        raise IndexGap(
            f"history expects index {len(memory.history)}, got {entry.index}"
        )
    memory.history.append(entry)


def replace_history(memory: ShortTermMemory, entry: HistoryEntry) -> None:
    """Overwrite an existing history entry in place (post-editing writes
    the final translation back over the draft)."""
    if not 0 <= entry.index < len(memory.history):
        raise IndexGap(
            f"cannot replace history index {entry.index}; only {len(memory.history)} entries"
        )
    memory.history[entry.index] = entry


def append_visual_cue(memory: ShortTermMemory, cue: "VisualCue") -> None:
    if cue.chunk_index != len(memory.visual_cues):
        raise IndexGap(
            f"visual cues expect chunk {len(memory.visual_cues)}, got {cue.chunk_index}"
        )
    memory.visual_cues.append(cue)


def append_audio_cue(memory: ShortTermMemory, cue: "AudioCue") -> None:
    if cue.chunk_index != len(memory.audio_cues):
        raise IndexGap(
            f"audio cues expect chunk {len(memory.audio_cues)}, got {cue.chunk_index}"
        )
    memory.audio_cues.append(cue)


def retrieve_history_window(
    memory: ShortTermMemory, index: int, n: int = 5
) -> list[HistoryEntry]:
    """The up-to-n entries preceding index, in order."""
    if index < 0 or n < 0:
        raise ValueError(f"index and n must be non-negative, got {index}, {n}")
    return list(memory.history[max(0, index - n) : index])


def retrieve_bidirectional_window(
    memory: ShortTermMemory, index: int, n: int = 5
) -> tuple[list[HistoryEntry], list[HistoryEntry]]:
    """(preceding, following) windows around index, excluding index."""
    if index < 0 or n < 0:
        raise ValueError(f"index and n must be non-negative, got {index}, {n}")
    before = list(memory.history[max(0, index - n) : index])
    after = list(memory.history[index + 1 : index + 1 + n])
    return before, after


# knowledge base


def _term_pattern(source_term: str) -> re.Pattern:
    # word boundaries only make sense next to word characters, and CJK
    # text has no delimiters, so boundary-anchor only ASCII word edges
    escaped = re.escape(source_term)
    first, last = source_term[0], source_term[-1]
    prefix = r"\b" if (first.isascii() and (first.isalnum() or first == "_")) else ""
    suffix = r"\b" if (last.isascii() and (last.isalnum() or last == "_")) else ""
    return re.compile(prefix + escaped + suffix, re.IGNORECASE)


def check_knowledge_text(doc_id: str, text: str) -> tuple[KnowledgeDoc | None, list[str]]:
    """Parse one knowledge doc, returning (doc, errors).

    Format: a leading block of ``term: src => tgt [| note]`` and optional
    ``title:`` lines, then a free-text body.  Duplicate source terms and
    malformed term lines are errors; with any error the doc is None.
    """
    errors: list[str] = []
    title = ""
    saw_title = False
    terms: list[Term] = []
    seen: set[str] = set()
    lines = text.split("\n")
    body_start = len(lines)
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("term:"):
            m = _TERM_RE.match(stripped)
            if m is None:
                errors.append(f"{doc_id}: line {i + 1}: malformed term line")
                continue
            src, tgt = m.group("src"), m.group("tgt")
            if src.casefold() in seen:
                errors.append(f"{doc_id}: line {i + 1}: duplicate term {src!r}")
                continue
            seen.add(src.casefold())
            terms.append(Term(src, tgt, m.group("note") or "", doc_id))
        elif stripped.startswith("title:"):
            if saw_title:
                errors.append(f"{doc_id}: line {i + 1}: duplicate title line")
                continue
            saw_title = True
            title = _TITLE_RE.match(stripped).group("title")
        else:
            body_start = i
            break
    body = "\n".join(lines[body_start:]).strip()
    if errors:
        return None, errors
    return KnowledgeDoc(doc_id=doc_id, title=title, terms=tuple(terms), body=body), []


def parse_knowledge_doc(doc_id: str, text: str) -> KnowledgeDoc:
    doc, errors = check_knowledge_text(doc_id, text)
    if doc is None:
        raise ConfigError("; ".join(errors))
    return doc


def load_knowledge_base(paths: Iterable[Path | str]) -> tuple[KnowledgeDoc, ...]:
    """Load docs from files and directories (recursing one level into
    directories, taking files with KB_SUFFIXES), sorted by doc id."""
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(
                child for child in sorted(p.iterdir()) if child.suffix.lower() in KB_SUFFIXES
            )
        elif p.is_file():
            files.append(p)
        else:
            raise ConfigError(f"knowledge base path {p} does not exist")
    docs = []
    seen_ids: set[str] = set()
    for f in files:
        doc_id = f.stem
        if doc_id in seen_ids:
            raise ConfigError(f"duplicate knowledge doc id {doc_id!r} (from {f})")
        seen_ids.add(doc_id)
        docs.append(parse_knowledge_doc(doc_id, f.read_text(encoding="utf-8")))
    return tuple(sorted(docs, key=lambda d: d.doc_id))


def export_term_patch(path: Path | str, terms: Iterable[Term], title: str = "") -> None:
    """Write terms to a patch file in knowledge-doc format.  The live KB
    is immutable during a run; the patch takes effect when a future init
    includes it in kb_paths."""
    lines = []
    if title:
        lines.append(f"title: {title}")
    for t in terms:
        note = f" | {t.note}" if t.note else ""
        lines.append(f"term: {t.source_term} => {t.target_term}{note}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def init_memory(
    kb_paths: Iterable[Path | str] = (), web: WebSearchBackend | None = None
) -> Memory:
    """Fresh short-term memory, long-term loaded from the given KB paths."""
    return Memory(
        short_term=ShortTermMemory(),
        long_term=LongTermMemory(docs=load_knowledge_base(kb_paths), web=web),
    )


# long-term queries


def query_domain(memory: LongTermMemory, text: str, top_k_docs: int = 3) -> DomainGuide:
    """Match KB terms against text (case-insensitive, whole-word where
    word boundaries exist) and rank docs by how often their terms hit.

    terms: every matched term, docs ordered by id, in-doc order kept.
    docs: top_k_docs by match count (ties broken by id), zero-match
    docs excluded.
    """
    if not text.strip():
        return DomainGuide()
    matched_terms: list[Term] = []
    doc_hits: list[tuple[int, str, KnowledgeDoc]] = []
    for doc in memory.docs:
        hits = 0
        for term in doc.terms:
            n = len(_term_pattern(term.source_term).findall(text))
            if n:
                matched_terms.append(term)
                hits += n
        if hits:
            doc_hits.append((hits, doc.doc_id, doc))
    doc_hits.sort(key=lambda t: (-t[0], t[1]))
    excerpts = tuple(
        DocExcerpt(
            doc_id=doc.doc_id,
            title=doc.title,
            excerpt=doc.body[:EXCERPT_CHARS].strip(),
            matches=hits,
        )
        for hits, _, doc in doc_hits[:top_k_docs]
    )
    return DomainGuide(terms=tuple(matched_terms), docs=excerpts)


def query_web(memory: LongTermMemory, query: str, max_docs: int = 3) -> list[WebDoc]:
    """Search the web client, truncating to max_docs.  No client or an
    unavailable one degrades to no documents; an empty query is a bug."""
    if not query.strip():
        raise EmptyQuery("web query must not be blank")
    if memory.web is None:
        logger.warning("no web search client configured; returning no documents")
        return []
    try:
        results = memory.web.search(query)
    except BackendUnavailable as exc:
        logger.warning("web search unavailable (%s); returning no documents", exc)
        return []
    return list(results[:max_docs])


def snapshot(memory: Memory) -> dict:
    """One JSON-able dict of the whole memory state, for reports and
    debugging."""
    return {
        "short_term": {
            "history": [dataclasses.asdict(e) for e in memory.short_term.history],
            "visual_cues": [dataclasses.asdict(c) for c in memory.short_term.visual_cues],
            "audio_cues": [dataclasses.asdict(c) for c in memory.short_term.audio_cues],
        },
        "long_term": {
            "docs": [
                {"doc_id": d.doc_id, "title": d.title, "terms": len(d.terms)}
                for d in memory.long_term.docs
            ],
            "web_configured": memory.long_term.web is not None,
        },
    }
