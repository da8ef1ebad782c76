"""Domain types shared across the package: rankings, clicks and preferences."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import DuplicateItem, EmptyRanking, GradeOutOfRange, ValidationError

DEFAULT_MAX_GRADE = 2


class Team(str, enum.Enum):
    A = "A"
    B = "B"


class Preference(str, enum.Enum):
    PREFER_A = "PreferA"
    PREFER_B = "PreferB"
    TIE = "Tie"

    def opposite(self) -> "Preference":
        if self is Preference.PREFER_A:
            return Preference.PREFER_B
        if self is Preference.PREFER_B:
            return Preference.PREFER_A
        return self


class Item(NamedTuple):
    doc_id: str
    grade: int


@dataclass(frozen=True)
class Ranking:
    """An ordered list of distinct documents retrieved for one query."""

    query_id: str
    items: tuple[Item, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(Item(str(d), int(g)) for d, g in self.items))

    @classmethod
    def from_pairs(cls, query_id, pairs: Iterable[tuple[str, int]]) -> "Ranking":
        return cls(str(query_id), tuple(pairs))

    def __len__(self):
        return len(self.items)

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(it.doc_id for it in self.items)

    @property
    def grades(self) -> tuple[int, ...]:
        return tuple(it.grade for it in self.items)


def validate_ranking(r: Ranking, max_grade: int = DEFAULT_MAX_GRADE) -> Ranking:
    """Return ``r`` unchanged if it is nonempty, duplicate-free and in grade range."""
    if len(r.items) == 0:
        raise EmptyRanking()
    seen = set()
    for pos, (doc_id, grade) in enumerate(r.items, start=1):
        if doc_id in seen:
            raise DuplicateItem(doc_id)
        seen.add(doc_id)
        if not 0 <= grade <= max_grade:
            raise GradeOutOfRange(pos, grade, max_grade)
    return r


@dataclass(frozen=True)
class ClickVector:
    """Clicked 1-based positions of a displayed list of ``display_length`` items."""

    clicked_positions: frozenset[int]
    display_length: int

    def __post_init__(self):
        object.__setattr__(self, "clicked_positions", frozenset(int(p) for p in self.clicked_positions))
        if self.display_length < 1:
            raise ValidationError(f"display_length must be >= 1, got {self.display_length}")
        bad = [p for p in self.clicked_positions if not 1 <= p <= self.display_length]
        if bad:
            raise ValidationError(
                f"clicked positions {sorted(bad)} outside [1, {self.display_length}]"
            )

    @classmethod
    def from_mask(cls, mask) -> "ClickVector":
        return cls(frozenset(i + 1 for i, c in enumerate(mask) if c), len(mask))

    def __len__(self):
        return len(self.clicked_positions)

    def mask(self) -> list[bool]:
        return [p in self.clicked_positions for p in range(1, self.display_length + 1)]
