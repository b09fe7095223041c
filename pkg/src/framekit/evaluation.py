"""Scoring: strict/relaxed span matching, NER and relation P/R/F1, attribute accuracy.

Matching is greedy one-to-one in gold order, preferring exact-span candidates
and then the leftmost one. For strict mode this provably equals a maximum
bipartite matching; for relaxed mode the greedy count can deviate on contrived
overlap patterns, which the test suite cross-checks against an exhaustive
oracle at small scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .datamodel import Frame, IEDocument


@dataclass(frozen=True)
class MatchPolicy:
    mode: str = "strict"  # strict | relaxed
    type_attribute: str = "Type"  # "" ignores types entirely

    def __post_init__(self):
        if self.mode not in ("strict", "relaxed"):
            raise ValueError(f"unknown match mode {self.mode!r}")


class MatchedPair(NamedTuple):
    pred: Frame
    gold: Frame


@dataclass
class MetricsReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    per_attribute_accuracy: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int,
                    per_attribute_accuracy: dict[str, float] | None = None) -> "MetricsReport":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
        return cls(tp, fp, fn, precision, recall, f1,
                   dict(per_attribute_accuracy or {}))


def _norm(value: str | None) -> str | None:
    return None if value is None else value.strip().casefold()


def _types_equal(pred: Frame, gold: Frame, policy: MatchPolicy) -> bool:
    if not policy.type_attribute:
        return True
    return _norm(pred.attributes.get(policy.type_attribute)) == \
        _norm(gold.attributes.get(policy.type_attribute))


def _spans_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _frame_eligible(pred: Frame, gold: Frame, policy: MatchPolicy) -> bool:
    if not _types_equal(pred, gold, policy):
        return False
    if policy.mode == "strict":
        return pred.span == gold.span
    return _spans_overlap(pred.span, gold.span)


def match_frames(pred: Sequence[Frame], gold: Sequence[Frame],
                 policy: MatchPolicy) -> list[MatchedPair]:
    """Greedy one-to-one matching in gold order; each frame used at most once."""
    pairs: list[MatchedPair] = []
    used: set[int] = set()
    for gold_frame in gold:
        candidates = [(i, p) for i, p in enumerate(pred)
                      if i not in used and _frame_eligible(p, gold_frame, policy)]
        if not candidates:
            continue
        exact = [(i, p) for i, p in candidates if p.span == gold_frame.span]
        pool = exact or candidates
        pool.sort(key=lambda item: (item[1].start, item[1].end, item[0]))
        index, chosen = pool[0]
        used.add(index)
        pairs.append(MatchedPair(chosen, gold_frame))
    return pairs


def attribute_accuracy(pairs: Sequence[MatchedPair],
                       attribute_keys: Sequence[str]) -> dict[str, float]:
    """Per-key accuracy over matched pairs.

    Denominator: gold frames (within the pairs) that define the key. Numerator:
    pairs where both sides define it and agree after trim + case-fold. Keys no
    gold frame defines are omitted.
    """
    out: dict[str, float] = {}
    for key in attribute_keys:
        defined = [pair for pair in pairs if key in pair.gold.attributes]
        if not defined:
            continue
        agree = sum(
            1 for pair in defined
            if key in pair.pred.attributes
            and _norm(pair.pred.attributes[key]) == _norm(pair.gold.attributes[key]))
        out[key] = agree / len(defined)
    return out


def ner_metrics(pred: Sequence[Frame], gold: Sequence[Frame], policy: MatchPolicy,
                attribute_keys: Sequence[str] = ()) -> MetricsReport:
    pairs = match_frames(pred, gold, policy)
    tp = len(pairs)
    return MetricsReport.from_counts(
        tp, len(pred) - tp, len(gold) - tp,
        attribute_accuracy(pairs, attribute_keys))


# --------------------------------------------------------------------------
# Relations


def _relation_triples(doc: IEDocument) -> list[tuple[tuple, str | None]]:
    """Project relations to (sorted endpoint span pair, relation_type)."""
    frames = {frame.frame_id: frame for frame in doc.frames}
    triples = []
    for relation in doc.relations:
        try:
            f1 = frames[relation.frame_1_id]
            f2 = frames[relation.frame_2_id]
        except KeyError as exc:
            raise ValueError(
                f"relation references missing frame {exc.args[0]!r} in {doc.doc_id!r}") from exc
        spans = tuple(sorted((f1.span, f2.span)))
        triples.append((spans, relation.relation_type))
    return triples


def _relation_eligible(pred, gold, mode: str) -> bool:
    if _norm(pred[1]) != _norm(gold[1]):
        return False
    (p1, p2), (g1, g2) = pred[0], gold[0]
    if mode == "strict":
        same = lambda a, b: a == b
    else:
        same = _spans_overlap
    return (same(p1, g1) and same(p2, g2)) or (same(p1, g2) and same(p2, g1))


def relation_metrics(pred_doc: IEDocument, gold_doc: IEDocument,
                     policy: MatchPolicy) -> MetricsReport:
    """P/R/F1 over relations as unordered (span, span, type) triples."""
    tp, fp, fn = _relation_counts(pred_doc, gold_doc, policy)
    return MetricsReport.from_counts(tp, fp, fn)


def _relation_counts(pred_doc: IEDocument, gold_doc: IEDocument,
                     policy: MatchPolicy) -> tuple[int, int, int]:
    pred = _relation_triples(pred_doc)
    gold = _relation_triples(gold_doc)
    used: set[int] = set()
    tp = 0
    for gold_triple in gold:
        candidates = [(i, p) for i, p in enumerate(pred)
                      if i not in used and _relation_eligible(p, gold_triple, policy.mode)]
        if not candidates:
            continue
        exact = [(i, p) for i, p in candidates if p[0] == gold_triple[0]]
        pool = exact or candidates
        pool.sort(key=lambda item: (item[1][0], item[0]))
        used.add(pool[0][0])
        tp += 1
    return tp, len(pred) - tp, len(gold) - tp


# --------------------------------------------------------------------------
# Corpus-level scoring (counts summed per document, ratios recomputed)


def corpus_ner_metrics(doc_pairs: Sequence[tuple[IEDocument, IEDocument]],
                       policy: MatchPolicy,
                       attribute_keys: Sequence[str] = ()) -> MetricsReport:
    tp = fp = fn = 0
    all_pairs: list[MatchedPair] = []
    for pred_doc, gold_doc in doc_pairs:
        pairs = match_frames(pred_doc.frames, gold_doc.frames, policy)
        all_pairs.extend(pairs)
        tp += len(pairs)
        fp += len(pred_doc.frames) - len(pairs)
        fn += len(gold_doc.frames) - len(pairs)
    return MetricsReport.from_counts(tp, fp, fn,
                                     attribute_accuracy(all_pairs, attribute_keys))


def corpus_relation_metrics(doc_pairs: Sequence[tuple[IEDocument, IEDocument]],
                            policy: MatchPolicy) -> MetricsReport:
    tp = fp = fn = 0
    for pred_doc, gold_doc in doc_pairs:
        doc_tp, doc_fp, doc_fn = _relation_counts(pred_doc, gold_doc, policy)
        tp += doc_tp
        fp += doc_fp
        fn += doc_fn
    return MetricsReport.from_counts(tp, fp, fn)


# --------------------------------------------------------------------------
# Report emission


def report_as_dict(report: MetricsReport) -> dict:
    return {
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "per_attribute_accuracy": dict(report.per_attribute_accuracy),
    }


def report_as_json(report: MetricsReport) -> str:
    return json.dumps(report_as_dict(report), indent=2, sort_keys=False)


def format_report(report: MetricsReport, title: str = "metrics") -> str:
    """Aligned plain-text table for terminals."""
    rows = [
        ("true positives", str(report.true_positives)),
        ("false positives", str(report.false_positives)),
        ("false negatives", str(report.false_negatives)),
        ("precision", f"{report.precision:.4f}"),
        ("recall", f"{report.recall:.4f}"),
        ("f1", f"{report.f1:.4f}"),
    ]
    for key in sorted(report.per_attribute_accuracy):
        rows.append((f"accuracy[{key}]", f"{report.per_attribute_accuracy[key]:.4f}"))
    width = max(len(name) for name, _ in rows)
    lines = [title] + [f"  {name.ljust(width)}  {value}" for name, value in rows]
    return "\n".join(lines)
