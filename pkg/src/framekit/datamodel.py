"""Self-contained IE documents: frames, relations, validation, and file persistence.

A document owns its full text; frames point into that text with character
offsets (Unicode scalar counts, never bytes) and the sliced text must equal the
frame's entity text at all times. The on-disk format is versioned UTF-8 JSON
with extension ``.llmie``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

FORMAT_VERSION = 1
FILE_SUFFIX = ".llmie"

_DOC_KEYS = ("format_version", "doc_id", "text", "frames", "relations")
_FRAME_KEYS = ("frame_id", "entity_text", "start", "end", "attributes")
_RELATION_KEYS = ("frame_1_id", "frame_2_id", "relation_type")


class SchemaError(ValueError):
    """A persisted document does not obey the file schema."""


class SpanMismatch(ValueError):
    """Frame offsets are out of bounds or the text slice differs from entity_text."""


class DuplicateId(ValueError):
    """A frame with this id already exists in the document."""


class DuplicateFrame(ValueError):
    """A frame with identical (start, end, attributes) already exists."""


class UnknownFrameId(LookupError):
    """A relation references a frame id that is not in the document."""


class SelfRelation(ValueError):
    """A relation links a frame to itself."""


@dataclass
class Frame:
    """One extracted entity: id, surface text, character span, attribute map."""

    frame_id: str
    entity_text: str
    start: int
    end: int
    attributes: dict[str, str] = field(default_factory=dict)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def overlaps(self, other: "Frame") -> bool:
        return self.start < other.end and other.start < self.end

    def same_extent(self, other: "Frame") -> bool:
        """Exact duplicate test: identical span and attributes."""
        return (self.start, self.end) == (other.start, other.end) and self.attributes == other.attributes


@dataclass
class Relation:
    """Link between two frames; relation_type is None for untyped (binary-positive) links."""

    frame_1_id: str
    frame_2_id: str
    relation_type: str | None = None


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    message: str
    subjects: tuple[str, ...] = ()


@dataclass
class IEDocument:
    doc_id: str
    text: str
    frames: list[Frame] = field(default_factory=list)
    relations: list[Relation] = field(default_factory=list)

    def get_frame(self, frame_id: str) -> Frame:
        for frame in self.frames:
            if frame.frame_id == frame_id:
                return frame
        raise UnknownFrameId(frame_id)

    def add_frame(self, frame: Frame, policy: str = "reject_duplicates") -> None:
        """Append a frame after checking span invariants and the duplicate policy."""
        if policy not in ("reject_duplicates", "allow"):
            raise ValueError(f"unknown policy {policy!r}")
        if not frame.frame_id:
            raise ValueError("frame_id must be non-empty")
        _check_frame_span(self.text, frame)
        if policy == "reject_duplicates":
            for existing in self.frames:
                if existing.same_extent(frame):
                    raise DuplicateFrame(
                        f"frame duplicates {existing.frame_id} at ({frame.start},{frame.end})")
        if any(existing.frame_id == frame.frame_id for existing in self.frames):
            raise DuplicateId(frame.frame_id)
        self.frames.append(frame)

    def add_relation(self, relation: Relation) -> None:
        """Append a relation iff both frame ids exist and differ."""
        if relation.frame_1_id == relation.frame_2_id:
            raise SelfRelation(f"relation links {relation.frame_1_id!r} to itself")
        ids = {frame.frame_id for frame in self.frames}
        for frame_id in (relation.frame_1_id, relation.frame_2_id):
            if frame_id not in ids:
                raise UnknownFrameId(frame_id)
        self.relations.append(relation)

    def validate(self) -> list[Finding]:
        return validate_document(self)

    def save(self, path: str | Path) -> None:
        save(self, path)

    @classmethod
    def load(cls, path: str | Path) -> "IEDocument":
        return load(path)


def _check_frame_span(text: str, frame: Frame) -> None:
    if not (0 <= frame.start < frame.end <= len(text)):
        raise SpanMismatch(
            f"span ({frame.start},{frame.end}) out of bounds for document of length {len(text)}")
    sliced = text[frame.start:frame.end]
    if sliced != frame.entity_text:
        raise SpanMismatch(
            f"document slice {sliced!r} != entity_text {frame.entity_text!r} "
            f"at ({frame.start},{frame.end})")


def validate_document(doc: IEDocument) -> list[Finding]:
    """Check overlap, redundancy, span integrity, and relation link integrity.

    Findings are data, never exceptions: errors for broken invariants (bad
    spans, dangling or self relations, duplicate ids), warnings for redundancy
    (exact-duplicate frames) and for overlapping span pairs.
    """
    findings: list[Finding] = []
    n = len(doc.text)

    for frame in doc.frames:
        if not frame.frame_id:
            findings.append(Finding("error", "empty-frame-id",
                                    f"frame at ({frame.start},{frame.end}) has an empty id"))
            continue
        if not (0 <= frame.start < frame.end <= n):
            findings.append(Finding("error", "span-out-of-bounds",
                                    f"frame {frame.frame_id}: span ({frame.start},{frame.end}) "
                                    f"outside document of length {n}",
                                    (frame.frame_id,)))
        elif doc.text[frame.start:frame.end] != frame.entity_text:
            findings.append(Finding("error", "span-mismatch",
                                    f"frame {frame.frame_id}: slice differs from entity_text",
                                    (frame.frame_id,)))

    id_counts: dict[str, int] = {}
    for frame in doc.frames:
        if frame.frame_id:
            id_counts[frame.frame_id] = id_counts.get(frame.frame_id, 0) + 1
    for frame_id, count in id_counts.items():
        if count > 1:
            findings.append(Finding("error", "duplicate-frame-id",
                                    f"frame id {frame_id!r} appears {count} times", (frame_id,)))

    # Redundancy: one warning per group of frames sharing (span, attributes).
    groups: dict[tuple, list[str]] = {}
    for frame in doc.frames:
        key = (frame.start, frame.end, tuple(sorted(frame.attributes.items())))
        groups.setdefault(key, []).append(frame.frame_id)
    duplicate_pairs: set[frozenset[str]] = set()
    for key, ids in groups.items():
        if len(ids) > 1:
            findings.append(Finding("warning", "redundant-frames",
                                    f"frames {', '.join(ids)} are exact duplicates "
                                    f"at ({key[0]},{key[1]})", tuple(ids)))
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    duplicate_pairs.add(frozenset((ids[i], ids[j])))

    for i in range(len(doc.frames)):
        for j in range(i + 1, len(doc.frames)):
            a, b = doc.frames[i], doc.frames[j]
            if not a.overlaps(b):
                continue
            if frozenset((a.frame_id, b.frame_id)) in duplicate_pairs:
                continue  # already reported as redundancy
            findings.append(Finding("warning", "overlapping-frames",
                                    f"frames {a.frame_id} ({a.start},{a.end}) and "
                                    f"{b.frame_id} ({b.start},{b.end}) overlap",
                                    (a.frame_id, b.frame_id)))

    ids = {frame.frame_id for frame in doc.frames}
    for idx, relation in enumerate(doc.relations):
        if relation.frame_1_id == relation.frame_2_id:
            findings.append(Finding("error", "self-relation",
                                    f"relation #{idx} links {relation.frame_1_id!r} to itself",
                                    (relation.frame_1_id,)))
            continue
        missing = [fid for fid in (relation.frame_1_id, relation.frame_2_id) if fid not in ids]
        if missing:
            findings.append(Finding("error", "unknown-frame-id",
                                    f"relation #{idx} references missing frame(s) "
                                    f"{', '.join(repr(m) for m in missing)}",
                                    tuple(missing)))
    return findings


def document_to_dict(doc: IEDocument) -> dict:
    """Canonical JSON shape, keys in file-format order."""
    return {
        "format_version": FORMAT_VERSION,
        "doc_id": doc.doc_id,
        "text": doc.text,
        "frames": [
            {
                "frame_id": f.frame_id,
                "entity_text": f.entity_text,
                "start": f.start,
                "end": f.end,
                "attributes": dict(f.attributes),
            }
            for f in doc.frames
        ],
        "relations": [
            {
                "frame_1_id": r.frame_1_id,
                "frame_2_id": r.frame_2_id,
                "relation_type": r.relation_type,
            }
            for r in doc.relations
        ],
    }


def save(doc: IEDocument, path: str | Path) -> None:
    """Write the canonical file format. Refuses documents with error-severity findings."""
    errors = [f for f in validate_document(doc) if f.severity == "error"]
    if errors:
        raise ValueError(
            f"document {doc.doc_id!r} has {len(errors)} validation error(s): "
            + "; ".join(f.message for f in errors[:3]))
    payload = json.dumps(document_to_dict(doc), indent=2, ensure_ascii=False) + "\n"
    Path(path).write_text(payload, encoding="utf-8")


def _require_keys(data: dict, expected: tuple[str, ...], what: str) -> None:
    keys = set(data)
    missing = [k for k in expected if k not in keys]
    extra = sorted(keys - set(expected))
    if missing:
        raise SchemaError(f"{what} is missing key(s): {', '.join(missing)}")
    if extra:
        raise SchemaError(f"{what} has unexpected key(s): {', '.join(extra)}")


def _expect_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{what} must be a string, got {type(value).__name__}")
    return value


def _expect_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{what} must be an integer, got {type(value).__name__}")
    return value


def document_from_dict(data) -> IEDocument:
    if not isinstance(data, dict):
        raise SchemaError("document must be a JSON object")
    _require_keys(data, _DOC_KEYS, "document")
    version = data["format_version"]
    if isinstance(version, bool) or not isinstance(version, int) or version != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    doc_id = _expect_str(data["doc_id"], "doc_id")
    text = _expect_str(data["text"], "text")
    if not isinstance(data["frames"], list):
        raise SchemaError("frames must be an array")
    if not isinstance(data["relations"], list):
        raise SchemaError("relations must be an array")

    frames = []
    for idx, raw in enumerate(data["frames"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"frame #{idx} must be an object")
        _require_keys(raw, _FRAME_KEYS, f"frame #{idx}")
        attributes = raw["attributes"]
        if not isinstance(attributes, dict):
            raise SchemaError(f"frame #{idx}: attributes must be an object")
        for key, value in attributes.items():
            _expect_str(key, f"frame #{idx} attribute key")
            _expect_str(value, f"frame #{idx} attribute {key!r}")
        frames.append(Frame(
            frame_id=_expect_str(raw["frame_id"], f"frame #{idx} frame_id"),
            entity_text=_expect_str(raw["entity_text"], f"frame #{idx} entity_text"),
            start=_expect_int(raw["start"], f"frame #{idx} start"),
            end=_expect_int(raw["end"], f"frame #{idx} end"),
            attributes=dict(attributes),
        ))

    relations = []
    for idx, raw in enumerate(data["relations"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"relation #{idx} must be an object")
        _require_keys(raw, _RELATION_KEYS, f"relation #{idx}")
        relation_type = raw["relation_type"]
        if relation_type is not None and not isinstance(relation_type, str):
            raise SchemaError(f"relation #{idx}: relation_type must be a string or null")
        relations.append(Relation(
            frame_1_id=_expect_str(raw["frame_1_id"], f"relation #{idx} frame_1_id"),
            frame_2_id=_expect_str(raw["frame_2_id"], f"relation #{idx} frame_2_id"),
            relation_type=relation_type,
        ))
    return IEDocument(doc_id=doc_id, text=text, frames=frames, relations=relations)


def load(path: str | Path) -> IEDocument:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except ValueError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    return document_from_dict(data)
