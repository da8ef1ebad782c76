import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interleave_lab.comparison import (
    EvaluationAccumulator,
    ImpressionScore,
    InterleavedRanking,
    accumulate,
    accumulate_all,
    assign_ab_arm,
    credit_counts,
    draw_ab_arms,
    draw_ima_teams,
    infer_preference,
    interleave_ima,
    preference_codes,
    score_ab_impression,
    score_impression,
)
from interleave_lab.core import ClickVector, Preference, Ranking, Team
from interleave_lab.errors import LengthMismatch, NoImpressions, OverlappingItems, RankingTooShort


def rk(qid, *docs):
    return Ranking.from_pairs(qid, [(d, 1) for d in docs])


A5 = rk("q", "a1", "a2", "a3", "a4", "a5")
B5 = rk("q", "b1", "b2", "b3", "b4", "b5")


def test_coin_sequence_ab_picks_positionally(scripted):
    out = interleave_ima(rk("q", "d1", "d2"), rk("q", "d3", "d4"), 2, scripted("AB"))
    assert [(s.doc_id, s.team) for s in out.positions] == [("d1", Team.A), ("d4", Team.B)]


def test_all_heads_reproduces_top_k_of_a(scripted):
    out = interleave_ima(A5, B5, 4, scripted("AAAA"))
    assert [s.doc_id for s in out.positions] == ["a1", "a2", "a3", "a4"]
    assert set(out.teams) == {Team.A}
    assert out.length == 4


def test_interleave_errors(rng):
    with pytest.raises(RankingTooShort):
        interleave_ima(rk("q", "a"), B5, 2, rng)
    with pytest.raises(OverlappingItems) as exc:
        interleave_ima(rk("q", "x", "a"), rk("q", "b", "x"), 2, rng)
    assert exc.value.doc_id == "x"


def test_positional_team_frequency():
    rng = np.random.default_rng(7)
    counts = np.zeros(5)
    n = 100_000
    for _ in range(n):
        out = interleave_ima(A5, B5, 5, rng)
        counts += [t is Team.A for t in out.teams]
    freq = counts / n
    assert np.all(np.abs(freq - 0.5) <= 0.01), freq


def test_vectorised_team_frequency():
    teams = draw_ima_teams(np.random.default_rng(3), 100_000, 5)
    assert np.all(np.abs(teams.mean(axis=0) - 0.5) <= 0.01)


def test_ab_arm_frequency_and_forced_mapping(scripted):
    rng = np.random.default_rng(11)
    freq = np.mean([assign_ab_arm(rng) is Team.A for _ in range(100_000)])
    assert abs(freq - 0.5) <= 0.01
    assert assign_ab_arm(scripted("H")) is Team.A
    assert assign_ab_arm(scripted("T")) is Team.B
    assert abs(draw_ab_arms(np.random.default_rng(2), 100_000).mean() - 0.5) <= 0.01


ABABA = InterleavedRanking.from_teams("ABABA")


@pytest.mark.parametrize("clicked, expected", [
    ({1, 3}, (0.4, 0.0)),
    (set(), (0.0, 0.0)),
    ({1, 2, 3, 4, 5}, (0.6, 0.4)),
])
def test_score_impression_examples(clicked, expected):
    s = score_impression(ABABA, ClickVector(frozenset(clicked), 5))
    assert (s.score_a, s.score_b) == pytest.approx(expected, abs=1e-15)


def test_score_impression_length_mismatch():
    with pytest.raises(LengthMismatch):
        score_impression(ABABA, ClickVector(frozenset({1}), 4))


@pytest.mark.parametrize("arm, clicked, expected", [
    (Team.A, {1, 2}, (0.4, 0.0)),
    (Team.B, set(), (0.0, 0.0)),
    (Team.B, {1, 2, 3, 4, 5}, (0.0, 1.0)),
])
def test_score_ab_examples(arm, clicked, expected):
    s = score_ab_impression(arm, ClickVector(frozenset(clicked), 5))
    assert (s.score_a, s.score_b) == pytest.approx(expected, abs=1e-15)


@given(st.lists(st.sampled_from("AB"), min_size=1, max_size=10), st.data())
def test_score_conservation_and_ab_equivalence(teams, data):
    k = len(teams)
    clicked = data.draw(st.sets(st.integers(1, k)))
    cv = ClickVector(frozenset(clicked), k)
    s = score_impression(InterleavedRanking.from_teams(teams), cv)
    assert s.score_a + s.score_b == Fraction(len(clicked), k)
    assert 0 <= s.score_a <= 1 and 0 <= s.score_b <= 1
    assert score_ab_impression(Team.A, cv) == score_impression(InterleavedRanking.from_teams("A" * k), cv)


def test_accumulate_examples():
    acc = accumulate(EvaluationAccumulator(), ImpressionScore(0.4, 0.0))
    assert acc == EvaluationAccumulator(1, 0.4, 0.0)
    z = EvaluationAccumulator()
    for _ in range(7):
        z = accumulate(z, ImpressionScore(0.0, 0.0))
    assert (z.n, z.sum_a, z.sum_b) == (7, 0.0, 0.0)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=60), st.randoms())
def test_accumulation_order_independent(raw, rnd):
    scores = [ImpressionScore(a / 5, b / 5) for a, b in raw]
    shuffled = scores[:]
    rnd.shuffle(shuffled)
    seq = EvaluationAccumulator()
    for s in scores:
        seq = accumulate(seq, s)
    other = EvaluationAccumulator()
    for s in shuffled:
        other = accumulate(other, s)
    assert seq.n == other.n
    assert math.isclose(seq.sum_a, other.sum_a, abs_tol=1e-12)
    assert math.isclose(seq.sum_b, other.sum_b, abs_tol=1e-12)
    half = len(scores) // 2
    merged = accumulate_all(scores[:half]).merge(accumulate_all(scores[half:]))
    assert math.isclose(merged.sum_a, seq.sum_a, abs_tol=1e-12)
    assert merged.n == seq.n


def test_exact_scores_make_ties_order_free():
    k = 5
    cv = lambda *p: ClickVector(frozenset(p), k)
    s1 = score_ab_impression(Team.A, cv(1, 2, 3))
    s2 = score_ab_impression(Team.B, cv(1))
    s3 = score_ab_impression(Team.B, cv(1, 2))
    acc = accumulate_all([s1, s2, s3])
    assert acc.sum_a == acc.sum_b
    assert infer_preference(acc) is Preference.TIE


@pytest.mark.parametrize("acc, verdict", [
    (EvaluationAccumulator(10, 2.0, 1.0), Preference.PREFER_A),
    (EvaluationAccumulator(10, 1.0, 1.0), Preference.TIE),
    (EvaluationAccumulator(3, 0.2, 0.6), Preference.PREFER_B),
])
def test_infer_preference(acc, verdict):
    assert infer_preference(acc) is verdict


def test_infer_preference_needs_impressions():
    with pytest.raises(NoImpressions):
        infer_preference(EvaluationAccumulator())


def test_unbiased_under_team_independent_clicks():
    rng = np.random.default_rng(2024)
    n, k = 100_000, 5
    teams = draw_ima_teams(rng, n, k)
    clicks = rng.random((n, k)) < 0.3
    n_a, n_b = credit_counts(clicks, teams)
    d = (n_a - n_b) / k
    se = d.std(ddof=1) / math.sqrt(n)
    assert abs(d.mean()) <= 3 * se


def test_vector_credit_matches_scalar_scoring():
    rng = np.random.default_rng(5)
    teams = draw_ima_teams(rng, 200, 4)
    clicks = rng.random((200, 4)) < 0.5
    n_a, n_b = credit_counts(clicks, teams)
    for row in range(200):
        s = score_impression(
            InterleavedRanking.from_teams(["A" if t else "B" for t in teams[row]]),
            ClickVector.from_mask(clicks[row]),
        )
        assert (s.score_a, s.score_b) == (n_a[row] / 4, n_b[row] / 4)
    arms = draw_ab_arms(rng, 200)
    n_a, n_b = credit_counts(clicks, arms)
    for row in range(200):
        s = score_ab_impression(Team.A if arms[row] else Team.B, ClickVector.from_mask(clicks[row]))
        assert (s.score_a, s.score_b) == (n_a[row] / 4, n_b[row] / 4)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=30))
def test_count_verdict_matches_mean_score_verdict(raw):
    ca = np.cumsum([a for a, _ in raw])
    cb = np.cumsum([b for _, b in raw])
    codes = preference_codes(ca, cb)
    acc = EvaluationAccumulator()
    for t, (a, b) in enumerate(raw):
        acc = accumulate(acc, ImpressionScore(Fraction(a, 5), Fraction(b, 5)))
        expected = {Preference.PREFER_A: 1, Preference.PREFER_B: -1, Preference.TIE: 0}[infer_preference(acc)]
        assert codes[t] == expected
