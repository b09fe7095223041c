"""Prompt templates with ``{{name}}`` placeholders and literal substitution."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping

PLACEHOLDER_RE = re.compile(r"\{\{([A-Za-z0-9_]+)\}\}")
TEMPLATE_SUFFIX = ".pt.txt"


class MalformedPlaceholder(ValueError):
    """A ``{{`` that is not a well-formed ``{{name}}`` token."""

    def __init__(self, position: int, snippet: str):
        super().__init__(f"malformed placeholder at offset {position}: {snippet!r}")
        self.position = position


class MissingKey(KeyError):
    """Map input does not cover a placeholder."""

    def __init__(self, placeholder: str):
        super().__init__(placeholder)
        self.placeholder = placeholder


class AmbiguousStringInput(ValueError):
    """String input given to a template that does not have exactly one placeholder."""

    def __init__(self, placeholder_count: int):
        super().__init__(
            f"string input needs exactly one placeholder, template has {placeholder_count}")
        self.placeholder_count = placeholder_count


def find_placeholders(template_text: str) -> list[str]:
    """Return distinct placeholder names in first-occurrence order.

    Raises :class:`MalformedPlaceholder` for any ``{{`` that does not open a
    well-formed ``{{name}}`` token (names are ``[A-Za-z0-9_]+``).
    """
    names: list[str] = []
    seen: set[str] = set()
    pos = 0
    while (pos := template_text.find("{{", pos)) != -1:
        match = PLACEHOLDER_RE.match(template_text, pos)
        if match is None:
            raise MalformedPlaceholder(pos, template_text[pos:pos + 20])
        name = match.group(1)
        if name not in seen:
            seen.add(name)
            names.append(name)
        pos = match.end()
    return names


class PromptTemplate:
    """Template text plus the placeholder names it exposes."""

    def __init__(self, text: str):
        self.text = text
        self.placeholders = find_placeholders(text)

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptTemplate":
        return cls(Path(path).read_text(encoding="utf-8"))

    def render(self, values: str | Mapping[str, str]) -> str:
        return render(self, values)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PromptTemplate) and other.text == self.text

    def __repr__(self) -> str:
        return f"PromptTemplate(placeholders={self.placeholders}, chars={len(self.text)})"


def render(template: PromptTemplate | str, values: str | Mapping[str, str]) -> str:
    """Substitute every placeholder literally (no escaping, no re-expansion).

    A plain string value is only accepted when the template has exactly one
    placeholder; otherwise a name->value map must cover every placeholder.
    """
    if isinstance(template, str):
        template = PromptTemplate(template)
    if isinstance(values, str):
        if len(template.placeholders) != 1:
            raise AmbiguousStringInput(len(template.placeholders))
        values = {template.placeholders[0]: values}
    for name in template.placeholders:
        if name not in values:
            raise MissingKey(name)
    return PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template.text)
