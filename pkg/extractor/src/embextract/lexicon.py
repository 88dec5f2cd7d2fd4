"""Group-label phrase inventory and CSV lexicon/label loading.

The group lexicon crosses 36 race-identifying words with 24 gender-identifying
words into 864 phrases ("<race word> <gender word>"), each mapped to one of
the six intersectional groups. Word lists follow the standard inventories
used for intersectional race/gender association audits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyLexicon, LabelError
from .templates import LexiconEntry

GROUPS = ("AsianMen", "AsianWomen", "BlackMen", "BlackWomen", "WhiteMen", "WhiteWomen")

RACE_WORDS: dict[str, tuple[str, ...]] = {
    "Black": ("black", "blacks", "black-american", "afro-caribbean",
              "dark-skinned", "jamaican", "african", "africans", "ethiopian",
              "ethiopians", "african-american", "afro-american"),
    "White": ("white", "whites", "british", "caucasian", "caucasians",
              "light-skinned", "american", "americans", "european",
              "europeans", "englishman", "englishmen"),
    "Asian": ("asian", "asians", "asian-american", "asian-americans",
              "chinese-american", "japanese-american", "chinese", "asiatic",
              "japanese", "korean", "koreans", "korean-american"),
}

GENDER_WORDS: dict[str, tuple[str, ...]] = {
    "Women": ("woman", "daughter", "mother", "sister", "grandmother", "niece",
              "female", "girl", "madam", "aunt", "maiden", "queen"),
    "Men": ("man", "son", "father", "brother", "grandfather", "nephew",
            "male", "boy", "sir", "uncle", "gentleman", "king"),
}


@dataclass(frozen=True)
class GroupLexicon:
    """The 864 group-label phrases with their group assignments."""

    entries: tuple[LexiconEntry, ...]

    @classmethod
    def build(cls) -> "GroupLexicon":
        entries = []
        for race, race_words in RACE_WORDS.items():
            for gender, gender_words in GENDER_WORDS.items():
                group = f"{race}{gender}"
                for rw in race_words:
                    for gw in gender_words:
                        entries.append(LexiconEntry(word=f"{rw} {gw}", group=group))
        return cls(entries=tuple(entries))

    def counts_by_group(self) -> dict[str, int]:
        counts = {g: 0 for g in GROUPS}
        for e in self.entries:
            counts[e.group] += 1
        return counts


def group_for_phrase(phrase: str) -> str:
    """Group label for a '<race word> <gender word>' phrase (case-insensitive)."""
    parts = phrase.strip().lower().rsplit(" ", 1)
    if len(parts) != 2:
        raise LabelError(f"phrase {phrase!r} is not '<race word> <gender word>'")
    rw, gw = parts
    race = next((r for r, words in RACE_WORDS.items() if rw in words), None)
    gender = next((g for g, words in GENDER_WORDS.items() if gw in words), None)
    if race is None or gender is None:
        raise LabelError(f"phrase {phrase!r} uses unknown race/gender words")
    return f"{race}{gender}"


def _parse_valence(raw: str, scale: str, where: str) -> float:
    try:
        v = float(raw)
    except ValueError as exc:
        raise LabelError(f"{where}: bad valence {raw!r}") from exc
    if scale == "oasis-1-7":
        v = (v - 1.0) / 6.0
    if not 0.0 <= v <= 1.0:
        raise LabelError(f"{where}: valence {v} outside [0, 1] after scaling")
    return v


def load_word_lexicon_csv(path: str | Path, valence_scale: str = "unit"
                          ) -> list[LexiconEntry]:
    """CSV with columns word[, valence]; valence normalized to [0, 1]."""
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "word" not in reader.fieldnames:
            raise LabelError(f"{path}: lexicon CSV needs a 'word' column")
        for i, row in enumerate(reader):
            word = (row.get("word") or "").strip()
            if not word:
                raise LabelError(f"{path} row {i}: empty word")
            valence = None
            if row.get("valence") not in (None, ""):
                valence = _parse_valence(row["valence"], valence_scale,
                                         f"{path} row {i}")
            entries.append(LexiconEntry(word=word, valence=valence))
    if not entries:
        raise EmptyLexicon(f"{path}: no lexicon rows")
    return entries


@dataclass(frozen=True)
class ImageLabel:
    id: str
    group: str | None = None
    valence: float | None = None


def load_image_labels_csv(path: str | Path, valence_scale: str = "unit"
                          ) -> list[ImageLabel]:
    """CSV with columns id[, group][, valence]; ids are file names."""
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise LabelError(f"{path}: label CSV needs an 'id' column")
        for i, row in enumerate(reader):
            item_id = (row.get("id") or "").strip()
            if not item_id:
                raise LabelError(f"{path} row {i}: empty id")
            group = (row.get("group") or "").strip() or None
            if group is not None and group not in GROUPS:
                raise LabelError(f"{path} row {i}: unknown group {group!r}")
            valence = None
            if row.get("valence") not in (None, ""):
                valence = _parse_valence(row["valence"], valence_scale,
                                         f"{path} row {i}")
            labels.append(ImageLabel(id=item_id, group=group, valence=valence))
    if not labels:
        raise EmptyLexicon(f"{path}: no label rows")
    return labels
