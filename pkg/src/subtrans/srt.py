"""SRT subtitle parsing, rendering, and timeline validation.

The parser is deliberately forgiving about the things real subtitle files
get wrong (CRLF, BOM, missing index lines, stray blank lines, unpadded
hour fields) and strict about the things that make a block meaningless
(no timestamp arrow, unparseable times, start >= end).  The renderer
always emits the canonical padded form, so parse(render(f)) == f for any
file built through this module.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .errors import MalformedBlock

logger = logging.getLogger(__name__)

_ARROW = "-->"
# h:mm:ss,mmm with 1+ hour digits and 1-3 millisecond digits.
_TIME_RE = re.compile(r"^(\d+):([0-5]\d):([0-5]\d),(\d{1,3})$")

MS_PER_HOUR = 3_600_000
MS_PER_MINUTE = 60_000
MS_PER_SECOND = 1_000


@dataclass(frozen=True, order=True)
class Timestamp:
    """A subtitle timestamp as non-negative integer milliseconds."""

    ms: int

    def __post_init__(self):
        if self.ms < 0:
            raise ValueError(f"timestamp must be non-negative, got {self.ms}")

    @classmethod
    def parse(cls, text: str) -> "Timestamp":
        """Parse ``h:mm:ss,ms`` where hours may be unpadded and the
        millisecond field may have 1-3 digits (read as a decimal fraction,
        so ``1,2`` means 1.2s = 1200ms)."""
        m = _TIME_RE.match(text.strip())
        if m is None:
            raise ValueError(f"bad timestamp: {text!r}")
        hours, minutes, seconds, frac = m.groups()
        ms = int(frac.ljust(3, "0"))
        return cls(
            int(hours) * MS_PER_HOUR
            + int(minutes) * MS_PER_MINUTE
            + int(seconds) * MS_PER_SECOND
            + ms
        )

    def render(self) -> str:
        """Canonical ``hh:mm:ss,mmm`` with zero padding everywhere."""
        hours, rest = divmod(self.ms, MS_PER_HOUR)
        minutes, rest = divmod(rest, MS_PER_MINUTE)
        seconds, ms = divmod(rest, MS_PER_SECOND)
        return f"{hours:02d}:{minutes:02d}:{seconds:02d},{ms:03d}"

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class SubtitleEntry:
    """One subtitle block: index, time range, and one or more text lines.

    Lines are stored stripped of surrounding whitespace; surrounding
    whitespace is not representable in a round-trippable SRT block.
    """

    index: int
    start: Timestamp
    end: Timestamp
    lines: tuple[str, ...]

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"entry index must be >= 1, got {self.index}")
        if self.start >= self.end:
            raise ValueError(
                f"entry {self.index}: start {self.start} is not before end {self.end}"
            )
        if not isinstance(self.lines, tuple):
            object.__setattr__(self, "lines", tuple(self.lines))
        if not self.lines:
            raise ValueError(f"entry {self.index}: no text lines")
        cleaned = tuple(line.strip() for line in self.lines)
        if any(not line for line in cleaned):
            raise ValueError(f"entry {self.index}: blank text line")
        object.__setattr__(self, "lines", cleaned)

    @property
    def text(self) -> str:
        return "\n".join(self.lines)

    @property
    def duration_ms(self) -> int:
        return self.end.ms - self.start.ms


@dataclass(frozen=True)
class SubtitleFile:
    """An ordered sequence of entries numbered 1..n in file order.

    Construction enforces consecutive numbering and per-entry sanity but
    not global time order; use validate_timeline for that, since broken
    timelines are something we want to report, not refuse to represent.
    """

    entries: tuple[SubtitleEntry, ...] = ()

    def __post_init__(self):
        if not isinstance(self.entries, tuple):
            object.__setattr__(self, "entries", tuple(self.entries))
        for pos, entry in enumerate(self.entries, start=1):
            if entry.index != pos:
                raise ValueError(
                    f"entry at position {pos} has index {entry.index}; "
                    "entries must be numbered consecutively from 1"
                )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @classmethod
    def from_entries(cls, entries) -> "SubtitleFile":
        """Build a file from entries in order, renumbering them 1..n."""
        renumbered = tuple(
            SubtitleEntry(index=pos, start=e.start, end=e.end, lines=e.lines)
            for pos, e in enumerate(entries, start=1)
        )
        return cls(renumbered)


@dataclass(frozen=True)
class ValidationReport:
    """Timeline findings: overlapping pairs, inter-entry gaps, order breaks.

    Gaps are informational and never affect ok; overlaps and order
    violations do.
    """

    overlaps: tuple[tuple[int, int], ...] = ()
    gaps: tuple[tuple[int, int], ...] = ()
    order_violations: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.overlaps and not self.order_violations


def _parse_time_range(line: str, line_no: int) -> tuple[Timestamp, Timestamp]:
    left, _, right = line.partition(_ARROW)
    try:
        start = Timestamp.parse(left)
        end = Timestamp.parse(right)
    except ValueError as exc:
        raise MalformedBlock(line_no, str(exc)) from None
    if start >= end:
        raise MalformedBlock(line_no, f"start {start} is not before end {end}")
    return start, end


def parse_srt(text: str) -> SubtitleFile:
    """Parse SRT text into a SubtitleFile.

    Tolerated and repaired (with a logged warning): UTF-8 BOM, CRLF line
    endings, missing or non-numeric index lines, duplicate or
    non-consecutive numbering, text-less blocks (skipped).  Fatal
    (MalformedBlock): a block with no timestamp arrow, an unparseable
    timestamp, or start >= end.
    """
    if text.startswith("﻿"):
        text = text[1:]
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    # Split into blocks of consecutive non-blank lines, remembering the
    # 1-based line number where each block starts.
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    current_start = 0
    for no, raw in enumerate(lines, start=1):
        line = raw.rstrip()
        if line.strip():
            if not current:
                current_start = no
            current.append(line)
        elif current:
            blocks.append((current_start, current))
            current = []
    if current:
        blocks.append((current_start, current))

    entries: list[SubtitleEntry] = []
    renumbered = False
    for start_no, block in blocks:
        arrow_at = next((i for i, ln in enumerate(block) if _ARROW in ln), None)
        if arrow_at is None or arrow_at > 1:
            raise MalformedBlock(start_no, "no timestamp arrow where one was expected")
        if arrow_at == 0:
            logger.warning("line %d: block has no index line, assigning one", start_no)
            renumbered = True
            declared = None
        else:
            try:
                declared = int(block[0])
            except ValueError:
                logger.warning(
                    "line %d: index line %r is not a number, assigning one",
                    start_no,
                    block[0],
                )
                renumbered = True
                declared = None

        start, end = _parse_time_range(block[arrow_at], start_no + arrow_at)
        text_lines = block[arrow_at + 1 :]
        if not text_lines:
            logger.warning("line %d: block has no text, skipping it", start_no)
            continue

        expected = len(entries) + 1
        if declared is not None and declared != expected:
            renumbered = True
        entries.append(
            SubtitleEntry(index=expected, start=start, end=end, lines=tuple(text_lines))
        )

    if renumbered and entries:
        logger.warning("input numbering was repaired; entries renumbered 1..%d", len(entries))
    return SubtitleFile(tuple(entries))


def render_srt(file: SubtitleFile) -> str:
    """Render canonical SRT: padded timestamps, one blank line between
    blocks, trailing newline.  An empty file renders as the empty string."""
    parts = []
    for entry in file.entries:
        parts.append(
            f"{entry.index}\n{entry.start.render()} {_ARROW} {entry.end.render()}\n"
            + "\n".join(entry.lines)
            + "\n\n"
        )
    return "".join(parts)


def validate_timeline(file: SubtitleFile, gap_threshold_ms: int = 0) -> ValidationReport:
    """Check a file's timeline.

    overlaps: every pair of entries whose time ranges intersect, as
    (lower index, higher index).  gaps: for each adjacent pair in file
    order with a non-negative gap >= gap_threshold_ms, (earlier entry's
    index, gap in ms).  order_violations: indices of entries that start
    before their predecessor.
    """
    entries = file.entries

    overlaps: list[tuple[int, int]] = []
    by_start = sorted(entries, key=lambda e: (e.start.ms, e.index))
    for i, a in enumerate(by_start):
        for b in by_start[i + 1 :]:
            if b.start.ms >= a.end.ms:
                break
            if a.start.ms < b.end.ms:  # always true here, kept for clarity
                pair = (a.index, b.index) if a.index < b.index else (b.index, a.index)
                overlaps.append(pair)
    overlaps.sort()

    gaps: list[tuple[int, int]] = []
    order_violations: list[int] = []
    for prev, cur in zip(entries, entries[1:]):
        gap = cur.start.ms - prev.end.ms
        if gap >= 0 and gap >= gap_threshold_ms:
            gaps.append((prev.index, gap))
        if cur.start.ms < prev.start.ms:
            order_violations.append(cur.index)

    return ValidationReport(
        overlaps=tuple(overlaps),
        gaps=tuple(gaps),
        order_violations=tuple(order_violations),
    )
