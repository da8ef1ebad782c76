"""Cascade click model: scan top-down, click by grade, maybe stop after a click."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import DEFAULT_MAX_GRADE, ClickVector
from .errors import ConfigError, ValidationError


@dataclass(frozen=True)
class ClickModelSpec:
    """Per-grade click and stop probabilities.

    ``click_prob[g]`` is P(click | grade g); ``stop_prob[g]`` is the probability of
    abandoning the list right after clicking an item of grade g.
    """

    name: str
    click_prob: tuple[float, ...]
    stop_prob: tuple[float, ...]

    def __post_init__(self):
        cp = _as_table(self.click_prob, "click_prob")
        sp = _as_table(self.stop_prob, "stop_prob")
        if len(cp) != len(sp):
            raise ValidationError(
                f"click_prob covers {len(cp)} grades but stop_prob covers {len(sp)}"
            )
        object.__setattr__(self, "click_prob", cp)
        object.__setattr__(self, "stop_prob", sp)

    @property
    def max_grade(self) -> int:
        return len(self.click_prob) - 1

    def covers(self, max_grade: int) -> bool:
        return self.max_grade >= max_grade


def _as_table(table, label) -> tuple[float, ...]:
    if isinstance(table, Mapping):
        keys = sorted(int(k) for k in table)
        if keys != list(range(len(keys))):
            raise ValidationError(f"{label} must cover grades 0..max contiguously, got {keys}")
        values = [table[k] if k in table else table[str(k)] for k in keys]
    else:
        values = list(table)
    if not values:
        raise ValidationError(f"{label} is empty")
    out = tuple(float(v) for v in values)
    for g, p in enumerate(out):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{label}[{g}] = {p} is not a probability")
    return out


def perfect_spec() -> ClickModelSpec:
    return ClickModelSpec("perfect", (0.0, 0.5, 1.0), (0.0, 0.0, 0.0))


def navigational_spec() -> ClickModelSpec:
    return ClickModelSpec("navigational", (0.0, 0.5, 1.0), (0.0, 0.5, 1.0))


BUILTIN_SPECS = {"perfect": perfect_spec, "navigational": navigational_spec}


def get_spec(name: str) -> ClickModelSpec:
    try:
        return BUILTIN_SPECS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown click model {name!r}; choose from {sorted(BUILTIN_SPECS)} or give tables"
        ) from None


def parse_table(text: str) -> tuple[float, ...]:
    """Parse ``"0.0, 0.5, 1.0"`` into a probability table indexed by grade."""
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad probability table {text!r}: {exc}") from None


def simulate_cascade_batch(
    grades: np.ndarray,
    spec: ClickModelSpec,
    rng: np.random.Generator,
    return_stops: bool = False,
):
    """Simulate cascade clicks for every row of an integer grade array.

    ``grades`` has shape (..., k) with the top position first. Returns a boolean
    click mask of the same shape; with ``return_stops`` also the 0-based index of
    the position where the user left (``k`` if they never stopped).
    """
    grades = np.asarray(grades)
    if grades.size and (grades.min() < 0 or grades.max() > spec.max_grade):
        raise ValidationError(f"grades outside [0, {spec.max_grade}] for model {spec.name!r}")
    cp = np.asarray(spec.click_prob)
    sp = np.asarray(spec.stop_prob)
    clicked = rng.random(grades.shape) < cp[grades]
    stop_here = clicked & (rng.random(grades.shape) < sp[grades])
    # a position is reachable iff no stop fired strictly above it
    stops_above = np.cumsum(stop_here, axis=-1) - stop_here
    clicks = clicked & (stops_above == 0)
    if not return_stops:
        return clicks
    k = grades.shape[-1]
    stop_at = np.where(stop_here.any(axis=-1), stop_here.argmax(axis=-1), k)
    return clicks, stop_at


def simulate_cascade(grades: Sequence[int], spec: ClickModelSpec, rng: np.random.Generator) -> ClickVector:
    if len(grades) == 0:
        raise ValidationError("cannot simulate clicks on an empty ranking")
    clicks = simulate_cascade_batch(np.asarray(grades, dtype=np.int64)[None, :], spec, rng)[0]
    return ClickVector.from_mask(clicks)


__all__ = [
    "ClickModelSpec",
    "perfect_spec",
    "navigational_spec",
    "get_spec",
    "parse_table",
    "simulate_cascade",
    "simulate_cascade_batch",
    "DEFAULT_MAX_GRADE",
]
