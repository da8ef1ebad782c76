import pytest
from hypothesis import given, strategies as st

from interleave_lab.core import ClickVector, Preference, Ranking, validate_ranking
from interleave_lab.errors import DuplicateItem, EmptyRanking, GradeOutOfRange, ValidationError


def test_valid_ranking_passes_through():
    r = Ranking.from_pairs("q1", [("d1", 2), ("d2", 0)])
    assert validate_ranking(r) is r


def test_duplicate_item():
    with pytest.raises(DuplicateItem) as exc:
        validate_ranking(Ranking.from_pairs("q1", [("d1", 2), ("d1", 1)]))
    assert exc.value.doc_id == "d1"


def test_empty_ranking():
    with pytest.raises(EmptyRanking):
        validate_ranking(Ranking("q1", ()))


def test_grade_above_max_is_rejected_not_clamped():
    with pytest.raises(GradeOutOfRange) as exc:
        validate_ranking(Ranking.from_pairs("q", [("a", 0), ("b", 3)]))
    assert exc.value.position == 2
    assert validate_ranking(Ranking.from_pairs("q", [("b", 3)]), max_grade=4).grades == (3,)


def test_ranking_is_immutable():
    r = Ranking.from_pairs("q", [("a", 1)])
    with pytest.raises(AttributeError):
        r.items = ()


rankings = st.lists(
    st.tuples(st.text(min_size=1, max_size=4), st.integers(0, 2)),
    min_size=1, max_size=8, unique_by=lambda t: t[0],
).map(lambda items: Ranking("q", tuple(items)))


@given(rankings)
def test_revalidation_is_idempotent(r):
    assert validate_ranking(validate_ranking(r)) == r


@given(st.integers(1, 20), st.data())
def test_click_vector_positions_in_bounds(length, data):
    positions = data.draw(st.sets(st.integers(-3, 25)))
    if all(1 <= p <= length for p in positions):
        cv = ClickVector(frozenset(positions), length)
        assert all(1 <= p <= cv.display_length for p in cv.clicked_positions)
    else:
        with pytest.raises(ValidationError):
            ClickVector(frozenset(positions), length)


def test_click_vector_mask_roundtrip():
    cv = ClickVector.from_mask([True, False, True])
    assert cv.clicked_positions == {1, 3}
    assert cv.mask() == [True, False, True]


def test_preference_opposite():
    assert Preference.PREFER_A.opposite() is Preference.PREFER_B
    assert Preference.TIE.opposite() is Preference.TIE
