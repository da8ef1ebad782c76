import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interleave_lab.clickmodel import (
    ClickModelSpec,
    get_spec,
    navigational_spec,
    parse_table,
    perfect_spec,
    simulate_cascade,
    simulate_cascade_batch,
)
from interleave_lab.errors import ConfigError, ValidationError


def test_table_values():
    p, n = perfect_spec(), navigational_spec()
    assert p.click_prob == (0.0, 0.5, 1.0)
    assert p.stop_prob == (0.0, 0.0, 0.0)
    assert n.click_prob == (0.0, 0.5, 1.0)
    assert n.stop_prob == (0.0, 0.5, 1.0)
    assert get_spec("navigational") == n
    with pytest.raises(ConfigError):
        get_spec("dbn")


def test_spec_validation():
    with pytest.raises(ValidationError):
        ClickModelSpec("bad", (0.0, 1.2), (0.0, 0.0))
    with pytest.raises(ValidationError):
        ClickModelSpec("bad", (0.0, 0.5, 1.0), (0.0, 0.0))
    custom = ClickModelSpec("m", {0: 0.1, 1: 0.2}, {"0": 0.0, "1": 0.3})
    assert custom.click_prob == (0.1, 0.2) and custom.stop_prob == (0.0, 0.3)
    assert parse_table("0, 0.5;1") == (0.0, 0.5, 1.0)


@pytest.mark.parametrize("grades, spec, expected", [
    ((2, 2, 2), navigational_spec(), {1}),
    ((0, 0, 0), navigational_spec(), set()),
    ((0, 0, 0), perfect_spec(), set()),
    ((2, 2), perfect_spec(), {1, 2}),
])
def test_forced_paths(grades, spec, expected, rng):
    for _ in range(50):
        assert simulate_cascade(grades, spec, rng).clicked_positions == expected


def pattern_probabilities(grades, spec):
    """Exact distribution over click masks by enumerating every cascade path."""
    out = {}

    def walk(pos, prob, clicks):
        if pos == len(grades):
            out[tuple(clicks)] = out.get(tuple(clicks), 0.0) + prob
            return
        cp = spec.click_prob[grades[pos]]
        sp = spec.stop_prob[grades[pos]]
        if cp < 1:
            walk(pos + 1, prob * (1 - cp), clicks + [False])
        if cp > 0:
            if sp > 0:
                rest = [False] * (len(grades) - pos - 1)
                key = tuple(clicks + [True] + rest)
                out[key] = out.get(key, 0.0) + prob * cp * sp
            if sp < 1:
                walk(pos + 1, prob * cp * (1 - sp), clicks + [True])

    walk(0, 1.0, [])
    return out


@pytest.mark.parametrize("spec", [perfect_spec(), navigational_spec(),
                                  ClickModelSpec("mid", (0.2, 0.6, 0.9), (0.1, 0.4, 0.7))])
@pytest.mark.parametrize("grades", [(1, 2, 0, 1), (2, 1, 1, 0, 2)])
def test_batch_matches_enumerated_distribution(spec, grades):
    exact = pattern_probabilities(grades, spec)
    assert math.isclose(sum(exact.values()), 1.0, abs_tol=1e-12)
    n = 200_000
    clicks = simulate_cascade_batch(np.tile(grades, (n, 1)), spec, np.random.default_rng(99))
    keys, counts = np.unique(clicks, axis=0, return_counts=True)
    observed = {tuple(bool(x) for x in k): c / n for k, c in zip(keys, counts)}
    assert set(observed) <= {k for k, p in exact.items() if p > 0}
    for key, p in exact.items():
        se = math.sqrt(p * (1 - p) / n)
        assert abs(observed.get(key, 0.0) - p) <= 5 * se + 1e-12, (key, p, observed.get(key))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_no_click_after_stop(grades, seed):
    spec = ClickModelSpec("x", (0.3, 0.7, 1.0), (0.2, 0.5, 0.9))
    clicks, stop_at = simulate_cascade_batch(np.tile(grades, (200, 1)), spec,
                                             np.random.default_rng(seed), return_stops=True)
    for row, s in zip(clicks, stop_at):
        assert not row[s + 1:].any()
        if s < len(grades):
            assert row[s]


@pytest.mark.parametrize("spec", [perfect_spec(), navigational_spec()])
def test_single_grade_one_click_frequency(spec):
    clicks = simulate_cascade_batch(np.ones((100_000, 1), dtype=int), spec, np.random.default_rng(1))
    assert abs(clicks.mean() - 0.5) <= 0.01


def test_perfect_model_examines_everything():
    n, k = 100_000, 5
    total = simulate_cascade_batch(np.ones((n, k), dtype=int), perfect_spec(), np.random.default_rng(4)).sum(axis=1)
    se = total.std(ddof=1) / math.sqrt(n)
    assert abs(total.mean() - 0.5 * k) <= 3 * se


def test_grade_outside_model_rejected(rng):
    with pytest.raises(ValidationError):
        simulate_cascade([3, 0], navigational_spec(), rng)
    with pytest.raises(ValidationError):
        simulate_cascade([], navigational_spec(), rng)
