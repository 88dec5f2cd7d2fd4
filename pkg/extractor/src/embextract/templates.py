"""Semantically bleached sentence templates and their expansion over lexica.

The six templates are syntactic frames that add no semantic content of their
own; the inserted target word or phrase carries the whole signal. Expanding a
lexicon of N entries yields exactly 6*N sentences, each tagged with its
template id and inheriting the entry's valence rating or group label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyLexicon, SlotMissing

SLOT = "[WORD]"

DEFAULT_TEMPLATES = (
    "This is the word [WORD]",
    "That is the word [WORD]",
    "There is the word [WORD]",
    "Here is the word [WORD]",
    "They are the word [WORD]",
    "Those are the word [WORD]",
)


@dataclass(frozen=True)
class TemplateSpec:
    templates: tuple[str, ...] = DEFAULT_TEMPLATES
    slot: str = SLOT

    def __post_init__(self):
        if len(self.templates) != 6:
            raise SlotMissing(f"expected exactly 6 templates, got {len(self.templates)}")
        for t in self.templates:
            if t.count(self.slot) != 1:
                raise SlotMissing(f"template {t!r} must contain the slot "
                                  f"{self.slot!r} exactly once")

    def render(self, template_id: int, word: str) -> str:
        return self.templates[template_id].replace(self.slot, word)


@dataclass(frozen=True)
class LexiconEntry:
    """One target word or phrase with optional ground-truth metadata."""

    word: str
    valence: float | None = None
    group: str | None = None


@dataclass(frozen=True)
class Sentence:
    id: str  # "<word>#t<template_id>" (stem convention of the corpus format)
    text: str
    template_id: int
    word: str
    valence: float | None = None
    group: str | None = None


def expand_templates(lexicon: list[LexiconEntry],
                     templates: TemplateSpec = TemplateSpec()) -> list[Sentence]:
    """All template variants of every lexicon entry, word-major order."""
    if not lexicon:
        raise EmptyLexicon("lexicon has no entries")
    seen: set[str] = set()
    sentences: list[Sentence] = []
    for entry in lexicon:
        if not entry.word or entry.word in seen:
            raise EmptyLexicon(f"empty or duplicate lexicon entry {entry.word!r}")
        seen.add(entry.word)
        for t in range(len(templates.templates)):
            sentences.append(Sentence(
                id=f"{entry.word}#t{t}",
                text=templates.render(t, entry.word),
                template_id=t,
                word=entry.word,
                valence=entry.valence,
                group=entry.group,
            ))
    return sentences
