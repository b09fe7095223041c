"""Prompting algorithms: frame extractors and pairwise relation extractors.

Frame extractors turn one document into a list of grounded frames; the three
variants trade LLM calls for quality (basic = 1 call, review = 2 calls,
sentence = one call per sentence). Relation extractors run one call per frame
pair task; :func:`enumerate_pairs` builds those tasks and lets a user-supplied
rule skip pairs that need no model call at all.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .datamodel import Frame, IEDocument, Relation
from .engine import (ChatMessage, EngineDescriptor, EngineError, GenerationConfig,
                     InferenceEngine, engine_from_descriptor)
from .parsing import RawEntityRecord, extract_json_entities, ground_entity, split_sentences
from .prompting import PromptTemplate, render

logger = logging.getLogger(__name__)

DEFAULT_REVIEW_INSTRUCTION = (
    "Review the text and your extraction above. Add any missed entities and "
    "correct mistakes. Output the complete JSON list again."
)

NO_RELATION_LABEL = "No-relation"

RELATION_PLACEHOLDERS = ("context", "frame_1", "frame_2", "possible_types")


@dataclass
class ExtractorConfig:
    engine: InferenceEngine | EngineDescriptor
    template: PromptTemplate
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    max_concurrency: int = 1
    review_mode: str = "addition"  # addition | revision
    review_instruction: str = DEFAULT_REVIEW_INSTRUCTION
    context_padding: int = 200

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.review_mode not in ("addition", "revision"):
            raise ValueError(f"unknown review_mode {self.review_mode!r}")
        if self.context_padding < 0:
            raise ValueError("context_padding must be >= 0")


@dataclass
class ExtractionStats:
    """Per-run bookkeeping surfaced alongside the frames (manifests, logs)."""

    llm_calls: int = 0
    records_parsed: int = 0
    records_discarded: int = 0
    records_ungrounded: int = 0
    notes: list[str] = field(default_factory=list)

    def merge(self, other: "ExtractionStats") -> None:
        self.llm_calls += other.llm_calls
        self.records_parsed += other.records_parsed
        self.records_discarded += other.records_discarded
        self.records_ungrounded += other.records_ungrounded
        self.notes.extend(other.notes)


def _resolve_engine(engine: InferenceEngine | EngineDescriptor) -> InferenceEngine:
    if isinstance(engine, InferenceEngine):
        return engine
    return engine_from_descriptor(engine)


def _map_bounded(fn, items, max_workers: int) -> list:
    """Apply fn to items, at most max_workers at a time, preserving item order.

    Engine errors are captured per item so one failed call never hides the
    others; any other exception propagates.
    """
    def guarded(item):
        try:
            return fn(item)
        except EngineError as exc:
            return exc

    items = list(items)
    if max_workers <= 1 or len(items) <= 1:
        return [guarded(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(guarded, items))


def _ground_records(unit_text: str, records: Sequence[RawEntityRecord],
                    stats: ExtractionStats, base_offset: int = 0):
    """Thread one cursor through the records; drop and note what cannot ground."""
    grounded = []
    cursor = 0
    for record in records:
        hit = ground_entity(unit_text, record.entity_text, cursor)
        if hit is None:
            stats.records_ungrounded += 1
            stats.notes.append(f"could not ground {record.entity_text!r}; record dropped")
            logger.warning("dropping ungroundable entity %r", record.entity_text)
            continue
        start, end, cursor = hit
        grounded.append((start + base_offset, end + base_offset, record))
    return grounded


def _assemble_frames(doc_text: str, grounded) -> list[Frame]:
    """Materialize frames with zero-padded ordinal ids in assembly order."""
    frames = []
    for ordinal, (start, end, record) in enumerate(grounded, start=1):
        frames.append(Frame(
            frame_id=f"{ordinal:04d}",
            entity_text=doc_text[start:end],
            start=start,
            end=end,
            attributes=dict(record.attributes),
        ))
    return frames


def _attr_key(attributes: dict[str, str]) -> tuple:
    return tuple(sorted(attributes.items()))


class FrameExtractor:
    """Shared plumbing: template precondition, engine resolution, parse helper."""

    kind = "base"

    def __init__(self, config: ExtractorConfig):
        if "input" not in config.template.placeholders:
            raise ValueError("frame extraction template must expose an {{input}} placeholder")
        self.config = config
        self.engine = _resolve_engine(config.engine)

    def extract(self, doc_text: str) -> list[Frame]:
        frames, _ = self.extract_with_stats(doc_text)
        return frames

    def extract_with_stats(self, doc_text: str) -> tuple[list[Frame], ExtractionStats]:
        raise NotImplementedError

    def _prompt(self, unit_text: str) -> str:
        return render(self.config.template, {"input": unit_text})

    def _call(self, messages: list[ChatMessage]) -> str:
        return self.engine.chat(messages, self.config.generation)

    def _parse(self, response: str, stats: ExtractionStats) -> list[RawEntityRecord]:
        records, discarded, notes = extract_json_entities(response)
        stats.records_parsed += len(records)
        stats.records_discarded += discarded
        stats.notes.extend(notes)
        return records


class BasicFrameExtractor(FrameExtractor):
    """One prompt over the whole document."""

    kind = "basic"

    def extract_with_stats(self, doc_text: str):
        stats = ExtractionStats()
        response = self._call([ChatMessage("user", self._prompt(doc_text))])
        stats.llm_calls += 1
        records = self._parse(response, stats)
        grounded = _ground_records(doc_text, records, stats)
        return _assemble_frames(doc_text, grounded), stats


class ReviewFrameExtractor(FrameExtractor):
    """Initial extraction plus one review turn for amendment and correction.

    In ``addition`` mode newly grounded review frames join the initial set
    (exact span+attribute duplicates suppressed); in ``revision`` mode the
    review output replaces it.
    """

    kind = "review"

    def extract_with_stats(self, doc_text: str):
        stats = ExtractionStats()
        prompt = self._prompt(doc_text)
        first_response = self._call([ChatMessage("user", prompt)])
        stats.llm_calls += 1
        initial = _ground_records(doc_text, self._parse(first_response, stats), stats)

        review_messages = [
            ChatMessage("user", prompt),
            ChatMessage("assistant", first_response),
            ChatMessage("user", self.config.review_instruction),
        ]
        second_response = self._call(review_messages)
        stats.llm_calls += 1
        reviewed = _ground_records(doc_text, self._parse(second_response, stats), stats)

        if self.config.review_mode == "revision":
            final = reviewed
        else:
            final = list(initial)
            seen = {(start, end, _attr_key(rec.attributes)) for start, end, rec in initial}
            for start, end, rec in reviewed:
                key = (start, end, _attr_key(rec.attributes))
                if key in seen:
                    continue
                seen.add(key)
                final.append((start, end, rec))
        return _assemble_frames(doc_text, final), stats


class SentenceFrameExtractor(FrameExtractor):
    """One prompt per sentence; frames are shifted back to document offsets.

    Calls may run concurrently up to max_concurrency, but assembly follows
    sentence order, so the output never depends on completion order. A failed
    call skips its sentence; the others proceed.
    """

    kind = "sentence"

    def extract_with_stats(self, doc_text: str):
        stats = ExtractionStats()
        sentences = split_sentences(doc_text)

        def run(sentence):
            return self._call([ChatMessage("user", self._prompt(sentence.text))])

        outcomes = _map_bounded(run, sentences, self.config.max_concurrency)
        grounded = []
        for sentence, outcome in zip(sentences, outcomes):
            stats.llm_calls += 1
            if isinstance(outcome, EngineError):
                stats.notes.append(
                    f"sentence at offset {sentence.start} failed: {outcome}; skipped")
                logger.warning("sentence call failed at offset %d: %s", sentence.start, outcome)
                continue
            records = self._parse(outcome, stats)
            grounded.extend(_ground_records(sentence.text, records, stats,
                                            base_offset=sentence.start))
        return _assemble_frames(doc_text, grounded), stats


# --------------------------------------------------------------------------
# Relation extraction


@dataclass(frozen=True)
class FramePairTask:
    """One candidate pair: frames ordered by span position, E1 before E2."""

    frame_1: Frame
    frame_2: Frame
    possible_types: tuple[str, ...]
    context: str

    def __post_init__(self):
        if not self.possible_types:
            raise ValueError("possible_types must be non-empty")


def build_pair_context(doc_text: str, frame_1: Frame, frame_2: Frame,
                       context_padding: int = 200) -> str:
    """Slice around both spans, padded and clamped, with inline [E1]/[E2] markers.

    Markers are inserted outermost-first so nested spans stay well-nested;
    partially overlapping spans produce crossing but balanced markers.
    """
    lo = max(0, min(frame_1.start, frame_2.start) - context_padding)
    hi = min(len(doc_text), max(frame_1.end, frame_2.end) + context_padding)
    # (position, phase 0=close/1=open, tiebreak, label); closes precede opens at
    # equal positions, outer opens first, inner closes first.
    markers = [
        (frame_1.start, 1, (-frame_1.end, 1), "[E1]"),
        (frame_2.start, 1, (-frame_2.end, 2), "[E2]"),
        (frame_1.end, 0, (-frame_1.start, -1), "[/E1]"),
        (frame_2.end, 0, (-frame_2.start, -2), "[/E2]"),
    ]
    markers.sort(key=lambda m: (m[0], m[1], m[2]))
    parts = []
    prev = lo
    for position, _phase, _tiebreak, label in markers:
        parts.append(doc_text[prev:position])
        parts.append(label)
        prev = position
    parts.append(doc_text[prev:hi])
    return "".join(parts)


def enumerate_pairs(doc_text: str, frames: Sequence[Frame],
                    possible_types_fn: Callable[[Frame, Frame], Sequence[str]],
                    context_padding: int = 200) -> list[FramePairTask]:
    """Build one task per unordered frame pair the rule does not filter out.

    ``possible_types_fn`` returning an empty list means the pair needs no LLM
    call and no task is created.
    """
    ids = [frame.frame_id for frame in frames]
    if len(set(ids)) != len(ids):
        raise ValueError("frames must have distinct ids")
    tasks = []
    for i in range(len(frames)):
        for j in range(i + 1, len(frames)):
            types = list(possible_types_fn(frames[i], frames[j]) or [])
            if not types:
                continue
            first, second = sorted((frames[i], frames[j]), key=lambda f: (f.start, f.end))
            context = build_pair_context(doc_text, first, second, context_padding)
            tasks.append(FramePairTask(first, second, tuple(types), context))
    return tasks


def _frame_blurb(frame: Frame) -> str:
    return json.dumps({"entity_text": frame.entity_text, "attr": frame.attributes},
                      ensure_ascii=False)


class RelationExtractor:
    """Shared pairwise plumbing; subclasses decide what a response means."""

    kind = "base"

    def __init__(self, config: ExtractorConfig):
        unknown = set(config.template.placeholders) - set(RELATION_PLACEHOLDERS)
        if unknown:
            raise ValueError(f"relation template has unsupported placeholders: {sorted(unknown)}")
        if "context" not in config.template.placeholders:
            raise ValueError("relation template must expose a {{context}} placeholder")
        self.config = config
        self.engine = _resolve_engine(config.engine)

    def extract(self, doc: IEDocument, tasks: Sequence[FramePairTask]) -> list[Relation]:
        relations, _ = self.extract_with_stats(doc, tasks)
        return relations

    def extract_with_stats(self, doc: IEDocument, tasks: Sequence[FramePairTask]):
        tasks = list(tasks)
        self._check_tasks(tasks)
        stats = ExtractionStats()

        def run(task):
            return self.engine.chat([ChatMessage("user", self._task_prompt(task))],
                                    self.config.generation)

        outcomes = _map_bounded(run, tasks, self.config.max_concurrency)
        relations = []
        for task, outcome in zip(tasks, outcomes):
            stats.llm_calls += 1
            if isinstance(outcome, EngineError):
                stats.notes.append(
                    f"pair ({task.frame_1.frame_id},{task.frame_2.frame_id}) failed: "
                    f"{outcome}; treated as no relation")
                continue
            relation = self._decide(task, outcome, stats)
            if relation is not None:
                relations.append(relation)
        return relations, stats

    def _task_prompt(self, task: FramePairTask) -> str:
        values = {
            "context": task.context,
            "frame_1": _frame_blurb(task.frame_1),
            "frame_2": _frame_blurb(task.frame_2),
            "possible_types": ", ".join(task.possible_types),
        }
        return render(self.config.template, values)

    def _check_tasks(self, tasks: Sequence[FramePairTask]) -> None:
        pass

    def _decide(self, task, response, stats):
        raise NotImplementedError


_BINARY_DECISION_RE = re.compile(r"\b(true|yes|false|no)\b", re.IGNORECASE)


class BinaryRelationExtractor(RelationExtractor):
    """Existence only: the first true/yes vs false/no in the answer decides.

    Unparseable answers fail closed (no relation) with a note, preserving
    precision on garbage output.
    """

    kind = "binary_relation"

    def _decide(self, task, response, stats):
        match = _BINARY_DECISION_RE.search(response)
        if match is None:
            stats.notes.append(
                f"unparseable relation answer for pair "
                f"({task.frame_1.frame_id},{task.frame_2.frame_id}): {response[:60]!r}; "
                f"treated as no relation")
            return None
        if match.group(1).lower() in ("true", "yes"):
            return Relation(task.frame_1.frame_id, task.frame_2.frame_id, None)
        return None


class MultiClassRelationExtractor(RelationExtractor):
    """Classify the pair: the answer is matched case-insensitively against the
    task's possible types, longest match wins; the null label or no match means
    no relation."""

    kind = "multiclass_relation"

    def __init__(self, config: ExtractorConfig):
        super().__init__(config)
        if "possible_types" not in config.template.placeholders:
            raise ValueError(
                "multi-class relation template must expose a {{possible_types}} placeholder")

    def _check_tasks(self, tasks):
        for task in tasks:
            labels = {t.casefold() for t in task.possible_types}
            if NO_RELATION_LABEL.casefold() not in labels:
                raise ValueError(
                    f"task for pair ({task.frame_1.frame_id},{task.frame_2.frame_id}) "
                    f"lacks the {NO_RELATION_LABEL!r} label")

    def _decide(self, task, response, stats):
        folded = response.casefold()
        best = None
        for candidate in task.possible_types:
            if candidate.casefold() in folded:
                if best is None or len(candidate) > len(best):
                    best = candidate
        if best is None:
            stats.notes.append(
                f"answer matched no possible type for pair "
                f"({task.frame_1.frame_id},{task.frame_2.frame_id}): {response[:60]!r}")
            return None
        if best.casefold() == NO_RELATION_LABEL.casefold():
            return None
        return Relation(task.frame_1.frame_id, task.frame_2.frame_id, best)


FRAME_EXTRACTORS = {
    "basic": BasicFrameExtractor,
    "review": ReviewFrameExtractor,
    "sentence": SentenceFrameExtractor,
}

RELATION_EXTRACTORS = {
    "binary_relation": BinaryRelationExtractor,
    "multiclass_relation": MultiClassRelationExtractor,
}

EXTRACTOR_KINDS = (*FRAME_EXTRACTORS, *RELATION_EXTRACTORS)
