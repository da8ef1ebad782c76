"""Closed-form error probabilities for A/B testing and IMA interleaving.

Per-impression click scores are modelled as Bernoulli variables whose means are
E(S) * E(O * R) with E(S) = 1/2. Examination is relevance-aware through
f(x) = 1 / (alpha * x + 1): A/B testing examines each ranking at its own
relevance level, interleaving at the level of the more relevant ranking. Error
probabilities come from the normal approximation of the mean score difference.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, field
from typing import Callable, Iterable

from .errors import DomainError, TheoremViolation, UndefinedErrorProbability

ExamFn = Callable[[float, float], float]

DEFAULT_N = 10_000
DEFAULT_GRID_STEP = 0.02
DEFAULT_ALPHAS = (1.0, 100.0)


@dataclass(frozen=True)
class AnalyticScenario:
    er_a: float
    er_b: float
    alpha: float
    n: int = DEFAULT_N

    def __post_init__(self):
        for name in ("er_a", "er_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} outside [0, 1]")
        if not self.alpha >= 0.0:
            raise DomainError(f"alpha={self.alpha} must be >= 0")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n={self.n} must be a positive integer")


@dataclass(frozen=True)
class MethodStats:
    p_a: float
    p_b: float
    var_sum: float

    @property
    def delta(self) -> float:
        return self.p_a - self.p_b


@dataclass(frozen=True)
class ErrorPoint:
    scenario: AnalyticScenario
    ab: MethodStats
    interleaving: MethodStats
    p_err_ab: float
    p_err_i: float

    @property
    def diff(self) -> float:
        return self.p_err_ab - self.p_err_i


def _check_unit(x, name="x"):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name}={x} outside [0, 1]")


def examination_fn(x: float, alpha: float) -> float:
    """Probability of examining further given relevance level ``x``."""
    _check_unit(x)
    if not alpha >= 0.0:
        raise DomainError(f"alpha={alpha} must be >= 0")
    return 1.0 / (alpha * x + 1.0)


def expected_click_ab(er_self: float, alpha: float, exam: ExamFn = examination_fn) -> float:
    _check_unit(er_self, "er_self")
    return 0.5 * exam(er_self, alpha) * er_self


def expected_click_interleaved(
    er_self: float, er_other: float, alpha: float, exam: ExamFn = examination_fn
) -> float:
    _check_unit(er_self, "er_self")
    _check_unit(er_other, "er_other")
    return 0.5 * exam(max(er_self, er_other), alpha) * er_self


def sample_mean_variance(p: float, n: int) -> float:
    """Variance of the mean of ``n`` iid Bernoulli(p) draws."""
    _check_unit(p, "p")
    if n < 1:
        raise DomainError(f"n={n} must be >= 1")
    return p * (1.0 - p) / n


def normal_cdf(x: float) -> float:
    # erfc keeps full relative precision in the lower tail
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def error_probability(delta: float, var_sum: float) -> float:
    """P(mean score of A minus mean score of B <= 0) under the normal approximation.

    A zero variance means the difference is deterministic: the result is 0 or 1
    by the sign of ``delta``, and undefined when ``delta`` is also zero.
    """
    if var_sum < 0:
        raise DomainError(f"var_sum={var_sum} must be >= 0")
    if var_sum == 0:
        if delta == 0:
            raise UndefinedErrorProbability("delta and var_sum are both zero")
        return 0.0 if delta > 0 else 1.0
    return normal_cdf(-delta / math.sqrt(var_sum))


def method_stats(p_a: float, p_b: float, n: int) -> MethodStats:
    return MethodStats(p_a, p_b, sample_mean_variance(p_a, n) + sample_mean_variance(p_b, n))


def ab_stats(s: AnalyticScenario, exam: ExamFn = examination_fn) -> MethodStats:
    return method_stats(
        expected_click_ab(s.er_a, s.alpha, exam), expected_click_ab(s.er_b, s.alpha, exam), s.n
    )


def interleaving_stats(s: AnalyticScenario, exam: ExamFn = examination_fn) -> MethodStats:
    return method_stats(
        expected_click_interleaved(s.er_a, s.er_b, s.alpha, exam),
        expected_click_interleaved(s.er_b, s.er_a, s.alpha, exam),
        s.n,
    )


def _stats_error(m: MethodStats) -> float:
    try:
        return error_probability(m.delta, m.var_sum)
    except UndefinedErrorProbability:
        # no clicks at all on either side: every evaluation ends in a tie
        return 0.5


def evaluate_scenario(s: AnalyticScenario, exam: ExamFn = examination_fn) -> ErrorPoint:
    ab = ab_stats(s, exam)
    il = interleaving_stats(s, exam)
    return ErrorPoint(s, ab, il, _stats_error(ab), _stats_error(il))


def grid_values(grid_step: float) -> list[float]:
    if not grid_step > 0:
        raise DomainError(f"grid_step={grid_step} must be > 0")
    m = round(1.0 / grid_step)
    if m < 1 or abs(m * grid_step - 1.0) > 1e-9:
        raise DomainError(f"grid_step={grid_step} does not divide [0, 1] evenly")
    return [i / m for i in range(m + 1)]


def sweep_grid(
    alphas: Iterable[float],
    grid_step: float = DEFAULT_GRID_STEP,
    n: int = DEFAULT_N,
    exam: ExamFn = examination_fn,
) -> list[ErrorPoint]:
    """Evaluate every (er_a, er_b) grid point for each alpha, row-major in that order."""
    values = grid_values(grid_step)
    alphas = list(alphas)
    for a in alphas:
        if not a >= 0:
            raise DomainError(f"alpha={a} must be >= 0")
    return [
        evaluate_scenario(AnalyticScenario(ea, eb, float(a), n), exam)
        for a in alphas
        for ea in values
        for eb in values
    ]


CSV_COLUMNS = (
    "alpha", "er_a", "er_b", "n", "delta_ab", "delta_i",
    "var_ab", "var_i", "p_err_ab", "p_err_i", "diff",
)


def point_row(p: ErrorPoint) -> tuple:
    s = p.scenario
    return (
        s.alpha, s.er_a, s.er_b, s.n, p.ab.delta, p.interleaving.delta,
        p.ab.var_sum, p.interleaving.var_sum, p.p_err_ab, p.p_err_i, p.diff,
    )


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def write_points_csv(points: Iterable[ErrorPoint], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow([_fmt(v) for v in point_row(p)])


def points_to_csv(points: Iterable[ErrorPoint]) -> str:
    buf = io.StringIO()
    write_points_csv(points, buf)
    return buf.getvalue()


# -- executable forms of the constant / relevance-aware results ----------------


@dataclass(frozen=True)
class CaseReport:
    delta_ab: float
    delta_i: float
    var_ab: float
    var_i: float
    boundary: bool = False

    def as_tuple(self):
        return astuple(self)


def _both_methods(er_a, er_b, alpha, n, exam) -> CaseReport:
    s = AnalyticScenario(er_a, er_b, alpha, n)
    ab = ab_stats(s, exam)
    il = interleaving_stats(s, exam)
    return CaseReport(ab.delta, il.delta, ab.var_sum, il.var_sum)


def check_constant_case(c: float, er_a: float, er_b: float, n: int, tol: float = 1e-12) -> CaseReport:
    """With examination fixed at ``c`` both methods share the same delta and variance sum."""
    if not 0.0 < c <= 1.0:
        raise DomainError(f"examination constant c={c} must lie in (0, 1]")
    rep = _both_methods(er_a, er_b, 0.0, n, lambda x, alpha: c)
    if abs(rep.delta_ab - rep.delta_i) > tol:
        raise TheoremViolation("constant examination: deltas differ", rep.delta_ab, rep.delta_i)
    if abs(rep.var_ab - rep.var_i) > tol:
        raise TheoremViolation("constant examination: variance sums differ", rep.var_ab, rep.var_i)
    return rep


def check_relevance_aware_case(s: AnalyticScenario, exam: ExamFn = examination_fn) -> CaseReport:
    """For er_a > er_b and alpha > 0: larger delta and smaller variance sum for interleaving.

    ``alpha == 0`` makes examination constant; the report then comes back with
    ``boundary=True`` and the two sides equal instead of raising.
    """
    if not s.er_a > s.er_b:
        raise DomainError(f"requires er_a > er_b, got {s.er_a} <= {s.er_b}")
    rep = _both_methods(s.er_a, s.er_b, s.alpha, s.n, exam)
    if s.alpha == 0:
        if rep.delta_ab != rep.delta_i or rep.var_ab != rep.var_i:
            raise TheoremViolation("alpha=0 boundary should collapse to equality",
                                   (rep.delta_ab, rep.var_ab), (rep.delta_i, rep.var_i))
        return CaseReport(*rep.as_tuple()[:4], boundary=True)
    if not rep.delta_i > rep.delta_ab:
        raise TheoremViolation("expected delta_i > delta_ab", rep.delta_i, rep.delta_ab)
    if not rep.var_ab > rep.var_i:
        raise TheoremViolation("expected var_ab > var_i", rep.var_ab, rep.var_i)
    return rep


@dataclass(frozen=True)
class CheckFailure:
    kind: str
    params: tuple
    message: str


@dataclass
class CheckSummary:
    draws: int
    seed: int
    constant_passed: int = 0
    relevance_passed: int = 0
    boundary: int = 0
    failures: list[CheckFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [
            f"draws={self.draws} seed={self.seed}",
            f"constant_case passed={self.constant_passed}/{self.draws}",
            f"relevance_aware_case passed={self.relevance_passed}/{self.draws} boundary={self.boundary}",
            f"failures={len(self.failures)}",
        ]
        out += [f"FAIL {f.kind} {f.params}: {f.message}" for f in self.failures]
        return out


def run_theorem_checks(draws: int, seed: int) -> CheckSummary:
    """Randomised sweep of both checkers.

    Constant case draws c ~ U(0, 1], relevances ~ U[0, 1], n ~ U{1..100000};
    relevance-aware case draws er_a > er_b from U[0, 1] and alpha ~ U(0, 200].
    """
    import numpy as np

    if draws < 1:
        raise DomainError(f"draws={draws} must be >= 1")
    rng = np.random.default_rng(seed)
    summary = CheckSummary(draws, seed)
    c = 1.0 - rng.random(draws)
    rel = rng.random((draws, 2))
    ns = rng.integers(1, 100_001, size=draws)
    for i in range(draws):
        params = (float(c[i]), float(rel[i, 0]), float(rel[i, 1]), int(ns[i]))
        try:
            check_constant_case(*params)
            summary.constant_passed += 1
        except (TheoremViolation, DomainError) as exc:
            summary.failures.append(CheckFailure("constant", params, str(exc)))

    pairs = np.sort(rng.random((draws, 2)), axis=1)[:, ::-1]
    alphas = 200.0 * (1.0 - rng.random(draws))
    ns = rng.integers(1, 100_001, size=draws)
    for i in range(draws):
        er_a, er_b = float(pairs[i, 0]), float(pairs[i, 1])
        params = (er_a, er_b, float(alphas[i]), int(ns[i]))
        if er_a == er_b:
            continue
        try:
            rep = check_relevance_aware_case(AnalyticScenario(*params))
            summary.relevance_passed += 1
            summary.boundary += rep.boundary
        except (TheoremViolation, DomainError) as exc:
            summary.failures.append(CheckFailure("relevance_aware", params, str(exc)))
    return summary


__all__ = [
    "AnalyticScenario", "MethodStats", "ErrorPoint", "CaseReport",
    "examination_fn", "expected_click_ab", "expected_click_interleaved",
    "sample_mean_variance", "normal_cdf", "error_probability", "evaluate_scenario",
    "ab_stats", "interleaving_stats", "sweep_grid", "grid_values",
    "check_constant_case", "check_relevance_aware_case", "run_theorem_checks",
    "write_points_csv", "points_to_csv", "CSV_COLUMNS",
]
