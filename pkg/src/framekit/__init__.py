"""framekit: LLM-driven information extraction into span-grounded frames and relations."""

from .datamodel import Frame, IEDocument, Relation, load, save, validate_document
from .engine import (ChatMessage, EngineDescriptor, GenerationConfig, InferenceEngine,
                     OllamaEngine, OpenAICompatibleEngine, ScriptedEngine, chat,
                     engine_from_descriptor)
from .evaluation import (MatchPolicy, MetricsReport, attribute_accuracy, match_frames,
                         ner_metrics, relation_metrics)
from .extractors import (BasicFrameExtractor, BinaryRelationExtractor, ExtractorConfig,
                         FramePairTask, MultiClassRelationExtractor, ReviewFrameExtractor,
                         SentenceFrameExtractor, build_pair_context, enumerate_pairs)
from .parsing import extract_json_entities, ground_entity, split_sentences
from .pipeline import RelationStep, TypeFilter, run_pipeline
from .prompt_editor import GuidelineStore, chat_turn, extract_template, new_session
from .prompting import PromptTemplate, find_placeholders, render
from .viz import viz_render

__version__ = "0.1.0"

__all__ = [
    "BasicFrameExtractor",
    "BinaryRelationExtractor",
    "ChatMessage",
    "EngineDescriptor",
    "ExtractorConfig",
    "Frame",
    "FramePairTask",
    "GenerationConfig",
    "GuidelineStore",
    "IEDocument",
    "InferenceEngine",
    "MatchPolicy",
    "MetricsReport",
    "MultiClassRelationExtractor",
    "OllamaEngine",
    "OpenAICompatibleEngine",
    "PromptTemplate",
    "Relation",
    "RelationStep",
    "ReviewFrameExtractor",
    "ScriptedEngine",
    "SentenceFrameExtractor",
    "TypeFilter",
    "attribute_accuracy",
    "build_pair_context",
    "chat",
    "chat_turn",
    "engine_from_descriptor",
    "enumerate_pairs",
    "extract_json_entities",
    "extract_template",
    "find_placeholders",
    "ground_entity",
    "load",
    "match_frames",
    "ner_metrics",
    "new_session",
    "relation_metrics",
    "render",
    "run_pipeline",
    "save",
    "split_sentences",
    "validate_document",
    "viz_render",
]
