"""Chat agent for drafting and critiquing prompt templates.

Each extractor kind ships a guideline document (Markdown asset) describing the
required template structure with a worked example; the first user turn of a
session is wrapped in a chat template that injects that guideline once.
:func:`extract_template` turns an assistant reply into a validated
:class:`~framekit.prompting.PromptTemplate`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .engine import ChatMessage, GenerationConfig, InferenceEngine
from .extractors import EXTRACTOR_KINDS
from .prompting import MalformedPlaceholder, PromptTemplate, render

SYSTEM_PROMPT = (
    "You are an AI assistant specializing in prompt writing and improvement. "
    "Your role is to help users refine, rewrite, and generate effective prompts "
    "based on guidelines provided. When the user asks for a prompt template, "
    "reply with exactly one fenced code block containing the complete template. "
    "The template must contain the section headings 'Task description', "
    "'Schema definition', 'Output format', and 'Input', and at least one "
    "{{placeholder}} slot."
)

CHAT_WRAPPER = PromptTemplate(
    "# Task description\n"
    "\n"
    "Chat with the user following the prompt guideline below.\n"
    "\n"
    "# Prompt guideline\n"
    "\n"
    "{{prompt_guideline}}\n"
    "\n"
    "# User request\n"
    "\n"
    "{{user_request}}\n"
)

REQUIRED_SECTIONS = ("Task description", "Schema definition", "Output format", "Input")

_GUIDELINE_DIR = Path(__file__).parent / "assets" / "guidelines"

_FENCED_BLOCK_RE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\r?\n(.*?)\r?\n?```", re.DOTALL)
_HEADING_RE = re.compile(r"^\s{0,3}#{1,6}\s*(.+?)\s*:?\s*$", re.MULTILINE)


class UnknownExtractorKind(KeyError):
    """No guideline exists for this extractor kind."""


class TemplateIncomplete(ValueError):
    """A drafted template lacks required sections or a placeholder."""

    def __init__(self, missing: list[str]):
        super().__init__(f"template is missing: {', '.join(missing)}")
        self.missing = list(missing)


class GuidelineStore:
    """Immutable mapping extractor kind -> guideline Markdown."""

    def __init__(self, entries: dict[str, str]):
        missing = [kind for kind in EXTRACTOR_KINDS if kind not in entries]
        if missing:
            raise ValueError(f"guidelines missing for extractor kind(s): {', '.join(missing)}")
        self._entries = dict(entries)

    @classmethod
    def load_default(cls) -> "GuidelineStore":
        entries = {}
        for path in _GUIDELINE_DIR.glob("*.md"):
            entries[path.stem] = path.read_text(encoding="utf-8")
        return cls(entries)

    def get(self, kind: str) -> str:
        try:
            return self._entries[kind]
        except KeyError:
            raise UnknownExtractorKind(kind) from None

    def kinds(self) -> list[str]:
        return sorted(self._entries)


_default_store: GuidelineStore | None = None


def default_store() -> GuidelineStore:
    global _default_store
    if _default_store is None:
        _default_store = GuidelineStore.load_default()
    return _default_store


@dataclass
class ChatSession:
    extractor_kind: str
    engine: InferenceEngine
    guideline: str
    history: list[ChatMessage] = field(default_factory=list)

    def last_assistant_text(self) -> str | None:
        for message in reversed(self.history):
            if message.role == "assistant":
                return message.content
        return None


def new_session(extractor_kind: str, engine: InferenceEngine,
                store: GuidelineStore | None = None) -> ChatSession:
    """Start a session seeded with the fixed system message."""
    store = store or default_store()
    guideline = store.get(extractor_kind)
    return ChatSession(
        extractor_kind=extractor_kind,
        engine=engine,
        guideline=guideline,
        history=[ChatMessage("system", SYSTEM_PROMPT)],
    )


def chat_turn(session: ChatSession, user_text: str,
              config: GenerationConfig | None = None) -> str:
    """Send one user turn and return the assistant reply.

    The first user turn is wrapped in the chat template, injecting the
    session's guideline exactly once; later turns go through verbatim. The
    history is left unchanged when the engine call fails.
    """
    if not user_text:
        raise ValueError("user_text must be non-empty")
    if any(message.role == "user" for message in session.history):
        content = user_text
    else:
        content = render(CHAT_WRAPPER, {
            "prompt_guideline": session.guideline,
            "user_request": user_text,
        })
    attempt = session.history + [ChatMessage("user", content)]
    reply = session.engine.chat(attempt, config or GenerationConfig())
    session.history.append(ChatMessage("user", content))
    session.history.append(ChatMessage("assistant", reply))
    return reply


def extract_template(assistant_text: str) -> PromptTemplate:
    """Pull a template from a reply and verify the structural contract.

    The first fenced code block is taken (the whole text when there is none);
    it must carry the four required section headings and at least one
    placeholder, otherwise :class:`TemplateIncomplete` lists what is missing.
    """
    match = _FENCED_BLOCK_RE.search(assistant_text)
    body = match.group(1) if match else assistant_text
    headings = {heading.casefold() for heading in _HEADING_RE.findall(body)}
    missing = [section for section in REQUIRED_SECTIONS
               if section.casefold() not in headings]
    try:
        template = PromptTemplate(body)
    except MalformedPlaceholder as exc:
        raise TemplateIncomplete(missing + [f"well-formed placeholder ({exc})"]) from exc
    if not template.placeholders:
        missing.append("placeholder")
    if missing:
        raise TemplateIncomplete(missing)
    return template
