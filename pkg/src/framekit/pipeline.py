"""End-to-end extraction runs shared by the CLI and the HTTP API."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .datamodel import Frame, IEDocument
from .engine import GenerationConfig, InferenceEngine
from .extractors import (DEFAULT_REVIEW_INSTRUCTION, FRAME_EXTRACTORS, RELATION_EXTRACTORS,
                         ExtractionStats, ExtractorConfig, enumerate_pairs)
from .prompting import PromptTemplate

PossibleTypesFn = Callable[[Frame, Frame], Sequence[str]]

# Permissive default: every pair becomes a task (binary extraction ignores the labels).
def allow_all_pairs(frame_1: Frame, frame_2: Frame) -> list[str]:
    return ["relation", "No-relation"]


@dataclass
class RelationStep:
    template: PromptTemplate
    mode: str  # binary | multiclass
    possible_types_fn: PossibleTypesFn = allow_all_pairs
    context_padding: int = 200

    def __post_init__(self):
        if self.mode not in ("binary", "multiclass"):
            raise ValueError(f"unknown relation mode {self.mode!r}")

    @property
    def extractor_kind(self) -> str:
        return "binary_relation" if self.mode == "binary" else "multiclass_relation"


@dataclass
class PipelineResult:
    document: IEDocument
    stats: ExtractionStats
    relation_tasks: int = 0


def run_pipeline(engine: InferenceEngine, template: PromptTemplate, extractor_kind: str,
                 text: str, doc_id: str, *,
                 generation: GenerationConfig | None = None,
                 max_concurrency: int = 1,
                 review_mode: str = "addition",
                 review_instruction: str = DEFAULT_REVIEW_INSTRUCTION,
                 relation_step: RelationStep | None = None) -> PipelineResult:
    """Extract frames (and optionally relations) from one text into a fresh document."""
    if extractor_kind not in FRAME_EXTRACTORS:
        raise ValueError(f"unknown frame extractor {extractor_kind!r}; "
                         f"expected one of {sorted(FRAME_EXTRACTORS)}")
    config = ExtractorConfig(
        engine=engine,
        template=template,
        generation=generation or GenerationConfig(),
        max_concurrency=max_concurrency,
        review_mode=review_mode,
        review_instruction=review_instruction,
    )
    extractor = FRAME_EXTRACTORS[extractor_kind](config)
    frames, stats = extractor.extract_with_stats(text)

    doc = IEDocument(doc_id, text)
    for frame in frames:
        doc.add_frame(frame, policy="allow")

    task_count = 0
    if relation_step is not None:
        tasks = enumerate_pairs(text, doc.frames, relation_step.possible_types_fn,
                                relation_step.context_padding)
        task_count = len(tasks)
        relation_config = ExtractorConfig(
            engine=engine,
            template=relation_step.template,
            generation=generation or GenerationConfig(),
            max_concurrency=max_concurrency,
        )
        relation_extractor = RELATION_EXTRACTORS[relation_step.extractor_kind](relation_config)
        relations, relation_stats = relation_extractor.extract_with_stats(doc, tasks)
        for relation in relations:
            doc.add_relation(relation)
        stats.merge(relation_stats)
    return PipelineResult(document=doc, stats=stats, relation_tasks=task_count)


@dataclass
class TypeFilter:
    """Possible-relation-types rule loaded from a JSON file.

    File shape::

        {
          "type_attribute": "Type",
          "rules": [
            {"pair": ["Drug", "Dosage"], "types": ["Dosage-Drug", "No-relation"]}
          ],
          "default_types": []
        }

    Pairs are unordered; an empty types list (and the default for unlisted
    pairs) means the pair is skipped without an LLM call.
    """

    type_attribute: str = "Type"
    rules: dict[frozenset, tuple[str, ...]] = field(default_factory=dict)
    default_types: tuple[str, ...] = ()

    @classmethod
    def from_file(cls, path: str | Path) -> "TypeFilter":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("filter file must hold a JSON object")
        type_attribute = data.get("type_attribute", "Type")
        raw_rules = data.get("rules", [])
        if not isinstance(raw_rules, list):
            raise ValueError("filter 'rules' must be an array")
        rules = {}
        for idx, rule in enumerate(raw_rules):
            if not isinstance(rule, dict) or "pair" not in rule or "types" not in rule:
                raise ValueError(f"filter rule #{idx} needs 'pair' and 'types'")
            pair = rule["pair"]
            if not isinstance(pair, list) or len(pair) != 2:
                raise ValueError(f"filter rule #{idx}: 'pair' must list two type values")
            rules[frozenset(pair)] = tuple(rule["types"])
        default_types = tuple(data.get("default_types", []))
        return cls(type_attribute=type_attribute, rules=rules, default_types=default_types)

    def __call__(self, frame_1: Frame, frame_2: Frame) -> list[str]:
        key = frozenset((frame_1.attributes.get(self.type_attribute, ""),
                         frame_2.attributes.get(self.type_attribute, "")))
        return list(self.rules.get(key, self.default_types))
