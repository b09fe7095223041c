import re

import pytest

from framekit.datamodel import Frame, IEDocument
from framekit.engine import EngineDescriptor, ScriptedEngine
from framekit.extractors import (DEFAULT_REVIEW_INSTRUCTION, BasicFrameExtractor,
                                 BinaryRelationExtractor, ExtractorConfig, FramePairTask,
                                 MultiClassRelationExtractor, ReviewFrameExtractor,
                                 SentenceFrameExtractor, build_pair_context, enumerate_pairs)
from framekit.parsing import split_sentences
from framekit.prompting import PromptTemplate

FRAME_TEMPLATE = PromptTemplate(
    "Extract entities as a JSON list of objects with entity_text and attr.\n"
    "Text:\n{{input}}")

BINARY_TEMPLATE = PromptTemplate(
    "Do the marked entities relate? Answer True or False.\n{{context}}")

MULTIPLE_TEMPLATE = PromptTemplate(
    "Classify the relation between {{frame_1}} and {{frame_2}}.\n"
    "Options: {{possible_types}}\n{{context}}")

THREE_SENTENCE_DOC = ("The patient takes aspirin daily. "
                      "Blood pressure was stable. Watch for nausea.")


def config(engine, template=FRAME_TEMPLATE, **kwargs):
    return ExtractorConfig(engine=engine, template=template, **kwargs)


class TestBasicFrameExtractor:
    def test_two_records_one_call(self):
        engine = ScriptedEngine([(
            "", '[{"entity_text": "aspirin", "attr": {"Type": "Drug"}},'
                ' {"entity_text": "nausea", "attr": {"Type": "ADE"}}]')])
        frames = BasicFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        assert engine.call_count == 1
        assert [f.entity_text for f in frames] == ["aspirin", "nausea"]
        assert [f.frame_id for f in frames] == ["0001", "0002"]
        for frame in frames:
            assert THREE_SENTENCE_DOC[frame.start:frame.end] == frame.entity_text

    def test_empty_list_response(self):
        engine = ScriptedEngine([("", "[]")])
        assert BasicFrameExtractor(config(engine)).extract("Some text.") == []

    def test_ungroundable_record_dropped_others_kept(self):
        engine = ScriptedEngine([(
            "", '[{"entity_text": "aspirin"}, {"entity_text": "warfarin"},'
                ' {"entity_text": "nausea"}]')])
        extractor = BasicFrameExtractor(config(engine))
        frames, stats = extractor.extract_with_stats(THREE_SENTENCE_DOC)
        assert [f.entity_text for f in frames] == ["aspirin", "nausea"]
        assert stats.records_ungrounded == 1
        assert any("warfarin" in note for note in stats.notes)
        # oracle: manual grounding of the survivors
        assert frames[0].start == THREE_SENTENCE_DOC.find("aspirin")
        assert frames[1].start == THREE_SENTENCE_DOC.find("nausea")

    def test_template_must_have_input_placeholder(self):
        engine = ScriptedEngine([("", "[]")])
        with pytest.raises(ValueError):
            BasicFrameExtractor(config(engine, PromptTemplate("no slot here")))

    def test_attributes_recorded(self):
        engine = ScriptedEngine([
            ("", '[{"entity_text": "aspirin", "attr": {"Type": "Drug", "Dosage": "81 mg"}}]')])
        frames = BasicFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        assert frames[0].attributes == {"Type": "Drug", "Dosage": "81 mg"}

    def test_frame_text_is_document_slice_after_case_tier(self):
        # the model answered in the wrong case; the frame carries the slice
        engine = ScriptedEngine([("", '[{"entity_text": "ASPIRIN"}]')])
        frames = BasicFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        assert frames[0].entity_text == "aspirin"
        start, end = frames[0].start, frames[0].end
        assert THREE_SENTENCE_DOC[start:end] == "aspirin"


class TestReviewFrameExtractor:
    INITIAL = '[{"entity_text": "aspirin", "attr": {"Type": "Drug"}}]'

    def rules(self, review_response):
        # review turn contains the review instruction; key on it first
        return [(DEFAULT_REVIEW_INSTRUCTION[:20], review_response), ("", self.INITIAL)]

    def test_addition_mode_adds_new_frame(self):
        review = ('[{"entity_text": "aspirin", "attr": {"Type": "Drug"}},'
                  ' {"entity_text": "nausea", "attr": {"Type": "ADE"}}]')
        engine = ScriptedEngine(self.rules(review))
        frames = ReviewFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        assert engine.call_count == 2
        assert [f.entity_text for f in frames] == ["aspirin", "nausea"]

    def test_addition_mode_initial_frames_all_present(self):
        review = '[{"entity_text": "nausea"}]'
        engine = ScriptedEngine(self.rules(review))
        frames = ReviewFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        texts = [f.entity_text for f in frames]
        assert "aspirin" in texts  # superset of the initial extraction
        assert len(frames) == 2

    def test_addition_mode_suppresses_verbatim_duplicates(self):
        engine = ScriptedEngine(self.rules(self.INITIAL))
        frames = ReviewFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        # duplicate-detection oracle: identical span+attributes collapse
        assert len(frames) == 1

    def test_revision_mode_replaces(self):
        engine = ScriptedEngine(self.rules("[]"))
        extractor = ReviewFrameExtractor(config(engine, review_mode="revision"))
        assert extractor.extract(THREE_SENTENCE_DOC) == []

    def test_review_prompt_contains_template_response_and_instruction(self):
        engine = ScriptedEngine(self.rules("[]"))
        ReviewFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        review_request = engine.log.entries()[1].request
        contents = "\n".join(m["content"] for m in review_request["messages"])
        assert THREE_SENTENCE_DOC in contents          # rendered template
        assert self.INITIAL in contents                # first response
        assert DEFAULT_REVIEW_INSTRUCTION in contents  # review instruction


class TestSentenceFrameExtractor:
    def rules(self):
        return [
            ("takes aspirin", '[{"entity_text": "aspirin", "attr": {"Type": "Drug"}}]'),
            ("Blood pressure", "[]"),
            ("nausea", '[{"entity_text": "nausea", "attr": {"Type": "ADE"}}]'),
        ]

    def test_one_call_per_sentence(self):
        engine = ScriptedEngine(self.rules())
        frames = SentenceFrameExtractor(config(engine)).extract(THREE_SENTENCE_DOC)
        assert engine.call_count == 3
        assert [f.entity_text for f in frames] == ["aspirin", "nausea"]

    def test_offsets_shifted_to_document(self):
        doc = "A pill now. My ibuprofen."
        sentences = split_sentences(doc)
        assert (sentences[1].start, sentences[1].end) == (12, 25)
        engine = ScriptedEngine([
            ("A pill", "[]"),
            ("ibuprofen", '[{"entity_text": "ibuprofen"}]'),
        ])
        frames = SentenceFrameExtractor(config(engine)).extract(doc)
        # local (3,12) in sentence 2 shifts by the sentence start
        assert (frames[0].start, frames[0].end) == (15, 24)
        assert doc[frames[0].start:frames[0].end] == "ibuprofen"

    def test_same_entity_in_two_sentences(self):
        doc = "Aspirin helps. Fluids help. Aspirin hurts."
        engine = ScriptedEngine([
            ("Fluids", "[]"),
            ("Aspirin", '[{"entity_text": "Aspirin"}]'),
        ])
        frames = SentenceFrameExtractor(config(engine)).extract(doc)
        assert len(frames) == 2
        sentences = split_sentences(doc)
        # containment oracle: each frame inside exactly one sentence span
        for frame in frames:
            holders = [s for s in sentences
                       if s.start <= frame.start and frame.end <= s.end]
            assert len(holders) == 1
        assert frames[0].start != frames[1].start

    def test_failed_sentence_skipped_others_proceed(self):
        engine = ScriptedEngine(self.rules())  # no rule matches "Blood pressure"? it does;
        # use a rule set without the middle sentence instead:
        engine = ScriptedEngine([
            ("takes aspirin", '[{"entity_text": "aspirin"}]'),
            ("nausea", '[{"entity_text": "nausea"}]'),
        ])
        extractor = SentenceFrameExtractor(config(engine))
        frames, stats = extractor.extract_with_stats(THREE_SENTENCE_DOC)
        assert [f.entity_text for f in frames] == ["aspirin", "nausea"]
        assert any("failed" in note for note in stats.notes)

    def test_concurrency_matches_sequential(self):
        sequential = SentenceFrameExtractor(
            config(ScriptedEngine(self.rules()))).extract(THREE_SENTENCE_DOC)
        concurrent = SentenceFrameExtractor(
            config(ScriptedEngine(self.rules()), max_concurrency=4)).extract(THREE_SENTENCE_DOC)
        assert sequential == concurrent

    def test_ids_deterministic(self):
        runs = [SentenceFrameExtractor(config(ScriptedEngine(self.rules()), max_concurrency=3))
                .extract(THREE_SENTENCE_DOC) for _ in range(3)]
        assert runs[0] == runs[1] == runs[2]


def typed_frames(doc_text, *specs):
    frames = []
    cursor = 0
    for i, (needle, type_value) in enumerate(specs, start=1):
        start = doc_text.index(needle, cursor)
        frames.append(Frame(f"{i:04d}", needle, start, start + len(needle),
                            {"Type": type_value}))
        cursor = start + len(needle)
    return frames


class TestEnumeratePairs:
    DOC = "Aspirin 81 mg with food 20 mg"

    def test_permissive_filter_gives_all_pairs(self):
        frames = typed_frames(self.DOC, ("Aspirin", "Drug"), ("81 mg", "Dosage"),
                              ("food", "Food"), ("20 mg", "Dosage"))
        tasks = enumerate_pairs(self.DOC, frames, lambda a, b: ["R", "No-relation"])
        assert len(tasks) == 6  # C(4,2)

    def test_paper_drug_dosage_rule(self):
        frames = typed_frames(self.DOC, ("Aspirin", "Drug"), ("81 mg", "Dosage"),
                              ("20 mg", "Dosage"))

        def rule(a, b):
            types = {a.attributes["Type"], b.attributes["Type"]}
            if types == {"Drug", "Dosage"}:
                return ["Dosage-Drug", "No-relation"]
            return []  # e.g. Dosage-Dosage never relates: no LLM call needed

        tasks = enumerate_pairs(self.DOC, frames, rule)
        assert len(tasks) == 2
        for task in tasks:
            assert {task.frame_1.attributes["Type"],
                    task.frame_2.attributes["Type"]} == {"Drug", "Dosage"}

    def test_single_frame_no_tasks(self):
        frames = typed_frames(self.DOC, ("Aspirin", "Drug"))
        assert enumerate_pairs(self.DOC, frames, lambda a, b: ["R"]) == []

    def test_frame_order_normalized_by_span(self):
        frames = typed_frames(self.DOC, ("Aspirin", "Drug"), ("81 mg", "Dosage"))
        tasks = enumerate_pairs(self.DOC, list(reversed(frames)), lambda a, b: ["R"])
        assert tasks[0].frame_1.entity_text == "Aspirin"  # earlier span is E1

    def test_distinct_ids_required(self):
        frame = Frame("x", "Aspirin", 0, 7)
        with pytest.raises(ValueError):
            enumerate_pairs(self.DOC, [frame, frame], lambda a, b: ["R"])


class TestBuildPairContext:
    DOC = "Aspirin 81 mg daily"

    def test_zero_padding_covers_both(self):
        f1 = Frame("a", "Aspirin", 0, 7)
        f2 = Frame("b", "81 mg", 8, 13)
        context = build_pair_context(self.DOC, f1, f2, 0)
        assert context == "[E1]Aspirin[/E1] [E2]81 mg[/E2]"

    def test_padding_clamped_to_document(self):
        f1 = Frame("a", "Aspirin", 0, 7)
        f2 = Frame("b", "81 mg", 8, 13)
        context = build_pair_context(self.DOC, f1, f2, 10_000)
        assert context.startswith("[E1]Aspirin[/E1]")
        assert context.endswith("daily")

    def test_nested_spans_stay_nested(self):
        doc = "Aspirin 81 mg daily"
        outer = Frame("a", "Aspirin 81 mg", 0, 13)
        inner = Frame("b", "81 mg", 8, 13)
        context = build_pair_context(doc, outer, inner, 0)
        # marker-balance oracle: scan markers as a tag language
        stack = []
        for marker in re.findall(r"\[/?E[12]\]", context):
            if not marker.startswith("[/"):
                stack.append(marker)
            else:
                assert stack, f"close without open in {context!r}"
                opened = stack.pop()
                assert opened[2] == marker[3], f"crossed markers in {context!r}"
        assert stack == []
        assert context == "[E1]Aspirin [E2]81 mg[/E2][/E1]"


class TestBinaryRelationExtractor:
    DOC = "Aspirin helped the headache"

    def make(self, response):
        doc = IEDocument("d", self.DOC)
        frames = typed_frames(self.DOC, ("Aspirin", "Drug"), ("headache", "Condition"))
        for frame in frames:
            doc.add_frame(frame)
        tasks = enumerate_pairs(self.DOC, doc.frames, lambda a, b: ["related"])
        engine = ScriptedEngine([("", response)])
        extractor = BinaryRelationExtractor(config(engine, BINARY_TEMPLATE))
        return extractor, doc, tasks

    def test_true_creates_untyped_relation(self):
        extractor, doc, tasks = self.make("True")
        relations = extractor.extract(doc, tasks)
        assert len(relations) == 1
        assert relations[0].relation_type is None
        doc.add_relation(relations[0])  # relation validity against owning doc

    def test_no_means_absent(self):
        extractor, doc, tasks = self.make("No relation exists.")
        assert extractor.extract(doc, tasks) == []

    def test_gibberish_fails_closed_with_note(self):
        extractor, doc, tasks = self.make("blorp fizz")
        relations, stats = extractor.extract_with_stats(doc, tasks)
        assert relations == []
        assert any("unparseable" in note for note in stats.notes)

    def test_yes_word_boundary(self):
        # "yesterday" must not read as "yes"
        extractor, doc, tasks = self.make("Yesterday it was false.")
        assert extractor.extract(doc, tasks) == []

    def test_one_call_per_task(self):
        extractor, doc, tasks = self.make("True")
        extractor.extract(doc, tasks)
        assert extractor.engine.call_count == len(tasks) == 1


class TestMultiClassRelationExtractor:
    DOC = "Aspirin 81 mg daily"

    def make(self, response, possible=("Dosage-Drug", "No-relation")):
        doc = IEDocument("d", self.DOC)
        for frame in typed_frames(self.DOC, ("Aspirin", "Drug"), ("81 mg", "Dosage")):
            doc.add_frame(frame)
        tasks = enumerate_pairs(self.DOC, doc.frames, lambda a, b: list(possible))
        engine = ScriptedEngine([("", response)])
        extractor = MultiClassRelationExtractor(config(engine, MULTIPLE_TEMPLATE))
        return extractor, doc, tasks

    def test_typed_relation_emitted(self):
        extractor, doc, tasks = self.make("Dosage-Drug")
        relations = extractor.extract(doc, tasks)
        assert [r.relation_type for r in relations] == ["Dosage-Drug"]

    def test_no_relation_label_means_absent(self):
        extractor, doc, tasks = self.make("No-relation")
        assert extractor.extract(doc, tasks) == []

    def test_case_insensitive_containment_match(self):
        extractor, doc, tasks = self.make("the type is dosage-drug")
        relations = extractor.extract(doc, tasks)
        # normalized-containment oracle
        assert "dosage-drug" in "the type is dosage-drug".casefold()
        assert [r.relation_type for r in relations] == ["Dosage-Drug"]

    def test_longest_match_wins(self):
        extractor, doc, tasks = self.make(
            "Drug, more precisely Dosage-Drug",
            possible=("Drug", "Dosage-Drug", "No-relation"))
        relations = extractor.extract(doc, tasks)
        assert [r.relation_type for r in relations] == ["Dosage-Drug"]

    def test_prompt_lists_possible_types_verbatim(self):
        extractor, doc, tasks = self.make("No-relation")
        extractor.extract(doc, tasks)
        prompt = extractor.engine.log.entries()[0].request["messages"][0]["content"]
        assert "Dosage-Drug, No-relation" in prompt

    def test_tasks_must_include_null_label(self):
        extractor, doc, tasks = self.make("x", possible=("Dosage-Drug",))
        with pytest.raises(ValueError):
            extractor.extract(doc, tasks)

    def test_unmatched_answer_fails_closed(self):
        extractor, doc, tasks = self.make("Frequency-Drug maybe?")
        relations, stats = extractor.extract_with_stats(doc, tasks)
        assert relations == []
        assert any("matched no possible type" in note for note in stats.notes)


class TestCallCountLaw:
    """basic=1, review=2, sentence=#sentences, relations=#tasks."""

    def test_call_counts(self):
        assert len(split_sentences(THREE_SENTENCE_DOC)) == 3

        basic_engine = ScriptedEngine([("", "[]")])
        BasicFrameExtractor(config(basic_engine)).extract(THREE_SENTENCE_DOC)
        assert basic_engine.call_count == 1

        review_engine = ScriptedEngine([("", "[]")])
        ReviewFrameExtractor(config(review_engine)).extract(THREE_SENTENCE_DOC)
        assert review_engine.call_count == 2

        sentence_engine = ScriptedEngine([("", "[]")])
        SentenceFrameExtractor(config(sentence_engine)).extract(THREE_SENTENCE_DOC)
        assert sentence_engine.call_count == 3

    def test_filter_soundness(self):
        doc = "Aspirin 81 mg with food 20 mg"
        frames = typed_frames(doc, ("Aspirin", "Drug"), ("81 mg", "Dosage"),
                              ("food", "Food"), ("20 mg", "Dosage"))
        tasks = enumerate_pairs(doc, frames, lambda a, b: ["related"])
        owning = IEDocument("d", doc)
        for frame in frames:
            owning.add_frame(frame)
        engine = ScriptedEngine([("", "False")])
        BinaryRelationExtractor(config(engine, BINARY_TEMPLATE)).extract(owning, tasks)
        assert engine.call_count == len(tasks) == 6


class TestDescriptorResolution:
    def test_extractor_accepts_descriptor_for_http_kinds(self):
        descriptor = EngineDescriptor("openai_compatible", "http://localhost:1/v1", "m")
        extractor = BasicFrameExtractor(config(descriptor))
        assert extractor.engine.kind == "openai_compatible"
