"""Recovering structure from raw LLM text: entity records, spans, sentences.

Three independent pieces of machinery:

* :func:`extract_json_entities` digs entity records out of whatever the model
  printed, discarding broken elements instead of failing;
* :func:`ground_entity` maps an entity string back to a character span in the
  source document, threading a cursor so repeated mentions ground left to
  right;
* :func:`split_sentences` is a conservative rule-based segmenter whose spans
  always slice back to their text.
"""

from __future__ import annotations

import json
import re
from bisect import bisect_left
from dataclasses import dataclass, field


@dataclass(frozen=True)
class RawEntityRecord:
    """One recovered entity record: surface text plus stringified attributes."""

    entity_text: str
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SentenceSpan:
    text: str
    start: int
    end: int


# --------------------------------------------------------------------------
# Entity record recovery


_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\r?\n(.*?)(?:\r?\n?```|\Z)", re.DOTALL)


def _strip_fences(text: str) -> str:
    """Prefer the interior of the first Markdown code fence when one exists."""
    if "```" not in text:
        return text
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1)
    return text.replace("```", " ")


def _find_balanced_array(text: str):
    """Locate the first balanced top-level ``[...]`` group, or None.

    Tracks both bracket kinds so a mismatched close (``[{broken]``) voids the
    candidate. Double-quoted strings are honored only inside an open structure;
    quotes in surrounding prose are plain text.
    """
    stack: list[str] = []
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            if stack:
                in_string = True
            continue
        if ch in "{[":
            if not stack and ch == "[":
                start = i
            stack.append(ch)
        elif ch in "}]":
            if not stack:
                continue  # stray close in prose
            opener = stack.pop()
            if (opener, ch) not in (("{", "}"), ("[", "]")):
                stack.clear()
                start = None
                continue
            if not stack and start is not None and ch == "]":
                return (start, i + 1)
    return None


def _split_top_level(interior: str) -> list[str]:
    """Split an array interior at top-level commas; empty chunks (trailing commas) vanish."""
    parts: list[str] = []
    stack: list[str] = []
    in_string = False
    escape = False
    chunk_start = 0
    for i, ch in enumerate(interior):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            stack.append(ch)
        elif ch in "}]":
            if stack:
                stack.pop()
        elif ch == "," and not stack:
            parts.append(interior[chunk_start:i])
            chunk_start = i + 1
    parts.append(interior[chunk_start:])
    return [p for p in (part.strip() for part in parts) if p]


def _find_top_level_objects(text: str) -> list[str]:
    """Candidate ``{...}`` slices ignoring brackets entirely (fallback mode).

    A group whose brace never closes runs to end-of-text and is still a
    candidate — it will fail to parse and be counted as discarded.
    """
    spans: list[str] = []
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            if depth:
                in_string = True
            continue
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth:
                depth -= 1
                if depth == 0 and start is not None:
                    spans.append(text[start:i + 1])
                    start = None
    if depth and start is not None:
        spans.append(text[start:])
    return spans


def _snippet(raw: str, limit: int = 60) -> str:
    flat = " ".join(raw.split())
    return flat if len(flat) <= limit else flat[:limit] + "…"


def _stringify(value) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False)


def extract_json_entities(llm_output: str) -> tuple[list[RawEntityRecord], int, list[str]]:
    """Recover entity records from raw model output; never raises.

    Strips code fences, takes the first balanced top-level JSON array (falling
    back to a sequence of top-level objects), and parses candidate elements
    individually. Elements that fail to parse, lack ``entity_text``, or carry a
    non-string ``entity_text`` are counted in ``discarded`` with one note each.
    Attribute values under ``attr`` are coerced to text.

    Returns ``(records, discarded, notes)``; an output with no recoverable JSON
    yields ``([], 0, [note])``.
    """
    text = _strip_fences(llm_output or "")
    array_span = _find_balanced_array(text)
    if array_span is not None:
        candidates = _split_top_level(text[array_span[0] + 1:array_span[1] - 1])
    else:
        candidates = _find_top_level_objects(text)
    if not candidates:
        return [], 0, ["no JSON entity records found in the output"]

    records: list[RawEntityRecord] = []
    discarded = 0
    notes: list[str] = []
    for raw in candidates:
        try:
            value = json.loads(raw)
        except (ValueError, RecursionError):
            discarded += 1
            notes.append(f"discarded unparseable element: {_snippet(raw)}")
            continue
        if not isinstance(value, dict):
            discarded += 1
            notes.append(f"discarded non-object element: {_snippet(raw)}")
            continue
        entity_text = value.get("entity_text")
        if not isinstance(entity_text, str):
            discarded += 1
            notes.append(f"discarded element without a string 'entity_text': {_snippet(raw)}")
            continue
        if not entity_text.strip():
            discarded += 1
            notes.append("discarded element with whitespace-only 'entity_text'")
            continue
        attributes: dict[str, str] = {}
        raw_attr = value.get("attr")
        if isinstance(raw_attr, dict):
            for key, attr_value in raw_attr.items():
                attributes[str(key)] = _stringify(attr_value)
        elif raw_attr is not None:
            notes.append(f"ignored non-object 'attr' on {entity_text!r}")
        records.append(RawEntityRecord(entity_text.strip(), attributes))
    return records, discarded, notes


# --------------------------------------------------------------------------
# Span grounding


def _fold_char(ch: str) -> str:
    low = ch.lower()
    return low if len(low) == 1 else ch  # keep offsets 1:1 with the original


def _fold(s: str) -> str:
    return "".join(_fold_char(ch) for ch in s)


def _normalize_ws(s: str) -> tuple[str, list[int]]:
    """Collapse whitespace runs to single spaces; map each normalized index back."""
    out: list[str] = []
    mapping: list[int] = []
    prev_ws = False
    for i, ch in enumerate(s):
        if ch.isspace():
            if prev_ws:
                continue
            out.append(" ")
            mapping.append(i)
            prev_ws = True
        else:
            out.append(ch)
            mapping.append(i)
            prev_ws = False
    return "".join(out), mapping


def ground_entity(doc_text: str, entity_text: str, cursor: int = 0):
    """Find the earliest occurrence of entity_text at or after cursor.

    Tiers, in order: exact match, case-insensitive match, whitespace-normalized
    match (runs of whitespace on both sides collapse to single spaces, offsets
    mapped back). Returns ``(start, end, new_cursor)`` with ``new_cursor`` at
    the matched end so repeated mentions ground left to right, or None when the
    entity cannot be located.
    """
    if not (0 <= cursor <= len(doc_text)):
        raise ValueError(f"cursor {cursor} outside document of length {len(doc_text)}")
    if not entity_text:
        return None

    idx = doc_text.find(entity_text, cursor)
    if idx != -1:
        end = idx + len(entity_text)
        return (idx, end, end)

    idx = _fold(doc_text).find(_fold(entity_text), cursor)
    if idx != -1:
        end = idx + len(entity_text)
        return (idx, end, end)

    norm_doc, mapping = _normalize_ws(doc_text)
    norm_needle, _ = _normalize_ws(entity_text)
    if norm_needle:
        norm_cursor = bisect_left(mapping, cursor)
        idx = norm_doc.find(norm_needle, norm_cursor)
        if idx != -1:
            start = mapping[idx]
            end = mapping[idx + len(norm_needle) - 1] + 1
            return (start, end, end)
    return None


# --------------------------------------------------------------------------
# Sentence segmentation


_ABBREVIATIONS = frozenset(abbr.casefold() for abbr in (
    "Dr.", "Mr.", "Mrs.", "Ms.", "vs.", "e.g.", "i.e.",
    "q.d.", "b.i.d.", "t.i.d.", "p.r.n.", "mg.", "a.m.", "p.m.",
))

_BLANK_LINE_RE = re.compile(r"\n[^\S\n]*\n")


def _token_ending_at(text: str, period_idx: int) -> str:
    start = period_idx
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:period_idx + 1].casefold()


def split_sentences(doc_text: str) -> list[SentenceSpan]:
    """Rule-based segmentation with offsets that always slice back to the text.

    Boundaries sit after ``.!?`` followed by whitespace and an uppercase letter
    or digit, and at blank lines; a built-in abbreviation list suppresses false
    period boundaries. Deliberately conservative: under-splitting is preferred
    over splitting inside an abbreviation.
    """
    n = len(doc_text)
    cuts: set[int] = set()
    for match in _BLANK_LINE_RE.finditer(doc_text):
        cuts.add(match.start() + 1)
    for i, ch in enumerate(doc_text):
        if ch not in ".!?":
            continue
        j = i + 1
        if j >= n or not doc_text[j].isspace():
            continue
        k = j
        while k < n and doc_text[k].isspace():
            k += 1
        if k >= n:
            continue
        nxt = doc_text[k]
        if not (nxt.isupper() or nxt.isdigit()):
            continue
        if ch == "." and _token_ending_at(doc_text, i) in _ABBREVIATIONS:
            continue
        cuts.add(i + 1)

    spans: list[SentenceSpan] = []
    seg_start = 0
    for cut in sorted(cuts) + [n]:
        s = seg_start
        while s < cut and doc_text[s].isspace():
            s += 1
        e = cut
        while e > s and doc_text[e - 1].isspace():
            e -= 1
        if s < e:
            spans.append(SentenceSpan(doc_text[s:e], s, e))
        seg_start = cut
    return spans
