"""Interleaving vs. A/B testing efficiency lab."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("interleave-lab")
except PackageNotFoundError:  # running from a source checkout
    __version__ = "0.1.0"

from .core import ClickVector, Item, Preference, Ranking, Team, validate_ranking  # noqa: E402
from .comparison import (  # noqa: E402
    EvaluationAccumulator,
    ImpressionScore,
    InterleavedRanking,
    accumulate,
    assign_ab_arm,
    infer_preference,
    interleave_ima,
    score_ab_impression,
    score_impression,
)
from .clickmodel import ClickModelSpec, navigational_spec, perfect_spec, simulate_cascade  # noqa: E402
from .analytic import AnalyticScenario, error_probability, evaluate_scenario, sweep_grid  # noqa: E402

__all__ = [
    "ClickVector", "Item", "Preference", "Ranking", "Team", "validate_ranking",
    "EvaluationAccumulator", "ImpressionScore", "InterleavedRanking", "accumulate",
    "assign_ab_arm", "infer_preference", "interleave_ima", "score_ab_impression",
    "score_impression", "ClickModelSpec", "navigational_spec", "perfect_spec",
    "simulate_cascade", "AnalyticScenario", "error_probability", "evaluate_scenario",
    "sweep_grid", "__version__",
]
