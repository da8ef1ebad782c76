"""IMA interleaving, A/B arm assignment and click-based scoring.

Both methods share one per-impression score: the number of clicks credited to a
ranker divided by the display length. They differ only in how the displayed
list is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import NamedTuple

import numpy as np

from .core import ClickVector, Preference, Ranking, Team
from .errors import LengthMismatch, NoImpressions, OverlappingItems, RankingTooShort, ValidationError


class Slot(NamedTuple):
    doc_id: str
    grade: int
    team: Team


@dataclass(frozen=True)
class InterleavedRanking:
    positions: tuple[Slot, ...]

    @property
    def length(self) -> int:
        return len(self.positions)

    @property
    def teams(self) -> tuple[Team, ...]:
        return tuple(s.team for s in self.positions)

    @property
    def grades(self) -> tuple[int, ...]:
        return tuple(s.grade for s in self.positions)

    @classmethod
    def from_teams(cls, teams) -> "InterleavedRanking":
        """Team-only ranking (placeholder docs), handy for scoring."""
        return cls(tuple(Slot(f"_{i}", 0, Team(t)) for i, t in enumerate(teams, start=1)))


@dataclass(frozen=True)
class ImpressionScore:
    """Clicks credited to each ranker divided by the display length.

    The scoring functions return exact fractions so that tied click counts
    always produce a tie, whatever order impressions are summed in.
    """

    score_a: Real
    score_b: Real


@dataclass(frozen=True)
class EvaluationAccumulator:
    n: int = 0
    sum_a: Real = Fraction(0)
    sum_b: Real = Fraction(0)

    @property
    def score_a(self) -> Real:
        return self.sum_a / self.n

    @property
    def score_b(self) -> Real:
        return self.sum_b / self.n

    def merge(self, other: "EvaluationAccumulator") -> "EvaluationAccumulator":
        return EvaluationAccumulator(self.n + other.n, self.sum_a + other.sum_a, self.sum_b + other.sum_b)


def _coin_is_a(rng) -> bool:
    # heads (A) iff the uniform draw falls below one half
    return rng.random() < 0.5


def interleave_ima(a: Ranking, b: Ranking, display_length: int, rng) -> InterleavedRanking:
    """Build an IMA interleaved list: one fair coin per position.

    Heads puts ``a``'s item at that position and credits team A, tails takes
    ``b``'s item at the same position and credits team B.
    """
    if display_length < 1:
        raise ValidationError("display_length must be >= 1")
    for name, r in (("a", a), ("b", b)):
        if len(r) < display_length:
            raise RankingTooShort(f"ranking {name} has {len(r)} items, need {display_length}")
    shared = set(a.doc_ids) & set(b.doc_ids)
    if shared:
        raise OverlappingItems(min(shared))
    slots = []
    for l in range(display_length):
        if _coin_is_a(rng):
            item, team = a.items[l], Team.A
        else:
            item, team = b.items[l], Team.B
        slots.append(Slot(item.doc_id, item.grade, team))
    return InterleavedRanking(tuple(slots))


def assign_ab_arm(rng) -> Team:
    """Pick which whole ranking an A/B impression shows."""
    return Team.A if _coin_is_a(rng) else Team.B


def score_impression(teams: InterleavedRanking, clicks: ClickVector) -> ImpressionScore:
    k = teams.length
    if clicks.display_length != k:
        raise LengthMismatch(f"click vector length {clicks.display_length} != ranking length {k}")
    team_of = teams.teams
    n_a = sum(1 for p in clicks.clicked_positions if team_of[p - 1] is Team.A)
    n_b = len(clicks.clicked_positions) - n_a
    return ImpressionScore(Fraction(n_a, k), Fraction(n_b, k))


def score_ab_impression(arm: Team, clicks: ClickVector) -> ImpressionScore:
    s = Fraction(len(clicks.clicked_positions), clicks.display_length)
    return ImpressionScore(s, Fraction(0)) if Team(arm) is Team.A else ImpressionScore(Fraction(0), s)


def accumulate(acc: EvaluationAccumulator, s: ImpressionScore) -> EvaluationAccumulator:
    return EvaluationAccumulator(acc.n + 1, acc.sum_a + s.score_a, acc.sum_b + s.score_b)


def accumulate_all(scores, acc: EvaluationAccumulator | None = None) -> EvaluationAccumulator:
    """Fold many scores at once."""
    acc = acc or EvaluationAccumulator()
    for s in scores:
        acc = accumulate(acc, s)
    return acc


def infer_preference(acc: EvaluationAccumulator) -> Preference:
    if acc.n < 1:
        raise NoImpressions("cannot infer a preference from zero impressions")
    a, b = acc.score_a, acc.score_b
    if a > b:
        return Preference.PREFER_A
    if a < b:
        return Preference.PREFER_B
    return Preference.TIE


# -- vectorised forms used by the simulation harness ---------------------------


def draw_ima_teams(rng: np.random.Generator, n_impressions: int, display_length: int) -> np.ndarray:
    """Boolean (n_impressions, display_length) array, True where team A holds the slot."""
    return rng.random((n_impressions, display_length)) < 0.5


def draw_ab_arms(rng: np.random.Generator, n_impressions: int) -> np.ndarray:
    """Boolean (n_impressions,) array, True where the impression shows ranking A."""
    return rng.random(n_impressions) < 0.5


def credit_counts(clicks: np.ndarray, team_a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-impression click counts credited to A and to B.

    ``team_a`` is either per-slot (same shape as ``clicks``) or per-impression.
    """
    total = clicks.sum(axis=-1)
    if team_a.shape == clicks.shape:
        n_a = (clicks & team_a).sum(axis=-1)
    else:
        n_a = np.where(team_a, total, 0)
    return n_a, total - n_a


def preference_codes(count_a: np.ndarray, count_b: np.ndarray) -> np.ndarray:
    """+1 for PreferA, -1 for PreferB, 0 for Tie, from cumulative click counts.

    Scores are counts over a common |I| and n, so comparing integer counts gives
    exactly the same verdict as comparing mean scores.
    """
    return np.sign(np.asarray(count_a, dtype=np.int64) - np.asarray(count_b, dtype=np.int64))
