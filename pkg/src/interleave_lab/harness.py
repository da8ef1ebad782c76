"""Simulation experiments: error rate over impressions and by nDCG gap.

Every unit of work (one repeat) owns random streams derived from
``(seed, repeat, stream id, pair index)``, so results do not depend on how many
worker processes run them or in which order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import analytic
from .clickmodel import ClickModelSpec, simulate_cascade_batch
from .comparison import credit_counts, draw_ab_arms, draw_ima_teams, preference_codes
from .core import Preference
from .dataio import DEFAULT_CUTOFF, QueryRecord, RankerPair, ndcg, rank_by_feature
from .errors import ConfigError, DomainError, NoValidPairs, UndecidableTruth

log = logging.getLogger(__name__)

METHODS = ("ab_testing", "interleaving")
DEFAULT_RQ2_BINS = tuple(i / 10 for i in range(11))
N_CHECKPOINTS = 20
# RQ2 simulates this many sampled queries at a time to bound memory
RQ2_CHUNK = 100

_STREAM_QUERIES = 0
_STREAM_METHOD = {"ab_testing": 1, "interleaving": 2}


@dataclass(frozen=True)
class ExperimentConfig:
    click_model: ClickModelSpec
    dataset: str = "synthetic"
    methods: tuple[str, ...] = METHODS
    impressions: int = 1000
    repeats: int = 10
    cutoff: int = DEFAULT_CUTOFF
    seed: int = 0
    rq2_query_samples: int = 1000
    rq2_bins: tuple[float, ...] = DEFAULT_RQ2_BINS
    every_impression: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "rq2_bins", tuple(float(b) for b in self.rq2_bins))
        if self.impressions < 1 or self.repeats < 1 or self.cutoff < 1:
            raise ConfigError("impressions, repeats and cutoff must all be >= 1")
        if self.rq2_query_samples < 1:
            raise ConfigError("rq2_query_samples must be >= 1")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods repeated")
        b = self.rq2_bins
        if len(b) < 2 or any(x >= y for x, y in zip(b, b[1:])) or b[0] < 0:
            raise ConfigError(f"rq2_bins must be >= 2 increasing nonnegative edges, got {b}")


@dataclass
class ExperimentReport:
    """CSV-ready rows plus the per-unit error indicators behind them.

    ``indicators[method]`` has one row per (repeat, pair) unit for RQ1, or per
    (repeat, sample, pair) unit for RQ2, aligned across methods.
    """

    kind: str
    columns: tuple[str, ...]
    rows: list[tuple]
    indicators: dict = field(default_factory=dict)
    x: np.ndarray | None = None
    bins: np.ndarray | None = None
    skipped_pairs: list = field(default_factory=list)
    skipped_queries: int = 0
    zero_diff_skips: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def error_rate(self, method: str, x_index: int | None = None) -> float:
        ind = self.indicators[method]
        if self.kind == "rq1":
            return float(ind[:, x_index if x_index is not None else -1].mean())
        return float(ind[self.bins == x_index].mean())

    def paired_gap(self, x_index: int | None = None) -> tuple[float, float, int]:
        """Mean and standard error of (A/B indicator - interleaving indicator)."""
        a, i = self.indicators["ab_testing"], self.indicators["interleaving"]
        if self.kind == "rq1":
            col = x_index if x_index is not None else -1
            d = a[:, col] - i[:, col]
        else:
            sel = self.bins == x_index
            d = a[sel] - i[sel]
        n = d.size
        if n == 0:
            return math.nan, math.nan, 0
        se = float(d.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return float(d.mean()), se, n


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def checkpoints(impressions: int, every: bool = False) -> np.ndarray:
    """Log-spaced impression counts in [1, impressions], always ending at ``impressions``."""
    if every:
        return np.arange(1, impressions + 1)
    pts = np.unique(np.rint(np.logspace(0, math.log10(impressions), N_CHECKPOINTS)).astype(np.int64))
    return np.union1d(pts[(pts >= 1) & (pts <= impressions)], [impressions])


def ground_truth(pair: RankerPair, dataset: Sequence[QueryRecord], cutoff: int | None = None):
    """Preference by dataset-mean nDCG@cutoff, or None when the means are equal.

    Queries with fewer than ``cutoff`` docs or an all-zero ideal DCG are left out.
    """
    cutoff = cutoff or pair.cutoff
    na, nb = [], []
    for q in dataset:
        if len(q.docs) < cutoff or max(q.grades) == 0:
            continue
        na.append(ndcg(rank_by_feature(q, pair.feature_a, cutoff), q.grades, cutoff))
        nb.append(ndcg(rank_by_feature(q, pair.feature_b, cutoff), q.grades, cutoff))
    if not na:
        return None
    ma, mb = math.fsum(na) / len(na), math.fsum(nb) / len(nb)
    if ma > mb:
        return Preference.PREFER_A
    if ma < mb:
        return Preference.PREFER_B
    return None


def error_indicator(inferred: Preference, truth) -> float:
    if truth is None or truth is Preference.TIE:
        raise UndecidableTruth("ground truth must be PreferA or PreferB")
    if inferred is Preference.TIE:
        return 0.5
    return 0.0 if inferred is truth else 1.0


def _indicator_codes(codes: np.ndarray, truth_sign) -> np.ndarray:
    # codes/truth_sign are +1 (A), -1 (B); code 0 is a tie
    return np.where(codes == 0, 0.5, np.where(codes == truth_sign, 0.0, 1.0))


# -- shared preparation --------------------------------------------------------


@dataclass(frozen=True)
class _PairTables:
    grades_a: np.ndarray  # (queries, cutoff)
    grades_b: np.ndarray
    ndcg_a: np.ndarray  # (queries,)
    ndcg_b: np.ndarray


def _usable_queries(dataset, cutoff):
    usable = [q for q in dataset if len(q.docs) >= cutoff]
    skipped = len(dataset) - len(usable)
    if skipped:
        log.info("skipping %d queries with fewer than %d docs", skipped, cutoff)
    return usable, skipped


def _tables(queries, pair: RankerPair, cutoff) -> _PairTables:
    ga, gb, na, nb = [], [], [], []
    for q in queries:
        ra = rank_by_feature(q, pair.feature_a, cutoff)
        rb = rank_by_feature(q, pair.feature_b, cutoff)
        ga.append(ra.grades)
        gb.append(rb.grades)
        na.append(ndcg(ra, q.grades, cutoff))
        nb.append(ndcg(rb, q.grades, cutoff))
    return _PairTables(
        np.asarray(ga, dtype=np.int64), np.asarray(gb, dtype=np.int64),
        np.asarray(na), np.asarray(nb),
    )


def _check_model(cfg: ExperimentConfig, queries):
    top = max((max(q.grades) for q in queries), default=0)
    if not cfg.click_model.covers(top):
        raise ConfigError(
            f"click model {cfg.click_model.name!r} covers grades up to {cfg.click_model.max_grade}, data has {top}"
        )


def _method_rng(seed, repeat, method, pair_index):
    return np.random.default_rng([seed, repeat, _STREAM_METHOD[method], pair_index])


def simulate_counts(method: str, ga: np.ndarray, gb: np.ndarray, spec: ClickModelSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    """Clicks credited to A and B for each impression row of grade tables ``ga``/``gb``.

    ``ga`` and ``gb`` have shape (..., k): the grades ranking A and ranking B would
    show for each impression.
    """
    if method == "interleaving":
        team_a = draw_ima_teams(rng, int(np.prod(ga.shape[:-1])), ga.shape[-1]).reshape(ga.shape)
        shown = np.where(team_a, ga, gb)
    elif method == "ab_testing":
        team_a = draw_ab_arms(rng, int(np.prod(ga.shape[:-1]))).reshape(ga.shape[:-1])
        shown = np.where(team_a[..., None], ga, gb)
    else:
        raise ConfigError(f"unknown method {method!r}")
    clicks = simulate_cascade_batch(shown, spec, rng)
    return credit_counts(clicks, team_a)


# -- RQ1: error rate over impressions -----------------------------------------


def _rq1_repeat(args):
    cfg, tables, truth_signs, checks, repeat = args
    nq = tables[0].grades_a.shape[0]
    qidx = np.random.default_rng([cfg.seed, repeat, _STREAM_QUERIES]).integers(0, nq, cfg.impressions)
    out = {}
    for method in cfg.methods:
        rows = []
        for p, (tab, sign) in enumerate(zip(tables, truth_signs)):
            rng = _method_rng(cfg.seed, repeat, method, p)
            n_a, n_b = simulate_counts(method, tab.grades_a[qidx], tab.grades_b[qidx], cfg.click_model, rng)
            codes = preference_codes(np.cumsum(n_a)[checks - 1], np.cumsum(n_b)[checks - 1])
            rows.append(_indicator_codes(codes, sign))
        out[method] = np.asarray(rows)
    return out


def _run_units(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_rq1(cfg: ExperimentConfig, dataset: Sequence[QueryRecord], pairs: Sequence[RankerPair], workers: int = 1) -> ExperimentReport:
    """Error rate at each checkpoint, one query sampled uniformly per impression.

    Truth is dataset-level mean nDCG; pairs without a strict winner are dropped.
    Both methods see the same query sequence within a repeat.
    """
    queries, skipped_q = _usable_queries(dataset, cfg.cutoff)
    if not queries:
        raise ConfigError(f"no query has at least {cfg.cutoff} documents")
    _check_model(cfg, queries)
    kept, truths, skipped = [], [], []
    for pair in pairs:
        t = ground_truth(pair, queries, cfg.cutoff)
        if t is None:
            log.warning("pair %s has no strict nDCG winner; skipped", pair.label)
            skipped.append(pair)
        else:
            kept.append(pair)
            truths.append(1 if t is Preference.PREFER_A else -1)
    if not kept:
        raise NoValidPairs("no ranker pair has a decidable ground truth")
    tables = [_tables(queries, p, cfg.cutoff) for p in kept]
    checks = checkpoints(cfg.impressions, cfg.every_impression)
    jobs = [(cfg, tables, truths, checks, r) for r in range(cfg.repeats)]
    parts = _run_units(_rq1_repeat, jobs, workers)
    indicators = {m: np.concatenate([part[m] for part in parts], axis=0) for m in cfg.methods}
    rows = []
    for method in sorted(cfg.methods):
        rates = indicators[method].mean(axis=0)
        for t, rate in zip(checks, rates):
            rows.append((cfg.dataset, cfg.click_model.name, method, int(t), float(rate), len(kept), cfg.repeats, cfg.seed))
    return ExperimentReport(
        kind="rq1",
        columns=("dataset", "click_model", "method", "impression", "error_rate", "n_pairs", "repeats", "seed"),
        rows=rows, indicators=indicators, x=checks, skipped_pairs=skipped, skipped_queries=skipped_q,
    )


# -- RQ2: error rate by per-query nDCG difference --------------------------------


def _rq2_repeat(args):
    cfg, tables, repeat = args
    nq = tables[0].grades_a.shape[0]
    sample = np.random.default_rng([cfg.seed, repeat, _STREAM_QUERIES]).integers(0, nq, cfg.rq2_query_samples)
    ind = {m: [] for m in cfg.methods}
    diffs, skipped = [], 0
    for p, tab in enumerate(tables):
        gap = tab.ndcg_a[sample] - tab.ndcg_b[sample]
        keep = gap != 0
        skipped += int((~keep).sum())
        q_kept = sample[keep]
        diffs.append(np.abs(gap[keep]))
        truth = np.sign(gap[keep])
        for method in cfg.methods:
            rng = _method_rng(cfg.seed, repeat, method, p)
            codes = []
            for start in range(0, q_kept.size, RQ2_CHUNK):
                q = q_kept[start:start + RQ2_CHUNK]
                shape = (q.size, cfg.impressions, cfg.cutoff)
                ga = np.broadcast_to(tab.grades_a[q][:, None, :], shape)
                gb = np.broadcast_to(tab.grades_b[q][:, None, :], shape)
                n_a, n_b = simulate_counts(method, ga, gb, cfg.click_model, rng)
                codes.append(preference_codes(n_a.sum(axis=1), n_b.sum(axis=1)))
            codes = np.concatenate(codes) if codes else np.zeros(0, dtype=np.int64)
            ind[method].append(_indicator_codes(codes, truth))
    return {m: np.concatenate(v) for m, v in ind.items()}, np.concatenate(diffs), skipped


def bin_index(values: np.ndarray, edges: Sequence[float]) -> np.ndarray:
    """Bin of each value over half-open [lo, hi) intervals, the last closed; -1 if outside."""
    edges = np.asarray(edges, dtype=float)
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.where(values == edges[-1], len(edges) - 2, idx)
    return np.where((idx < 0) | (idx > len(edges) - 2), -1, idx)


def run_rq2(cfg: ExperimentConfig, dataset: Sequence[QueryRecord], pairs: Sequence[RankerPair], workers: int = 1) -> ExperimentReport:
    """Per-query evaluation after ``impressions`` impressions, binned by |nDCG_A - nDCG_B|.

    Each repeat samples ``rq2_query_samples`` queries with replacement; truth is
    the per-query nDCG winner and zero-difference (query, pair) units are skipped.
    Bins without any unit produce no rows.
    """
    queries, skipped_q = _usable_queries(dataset, cfg.cutoff)
    if not queries:
        raise ConfigError(f"no query has at least {cfg.cutoff} documents")
    if not pairs:
        raise NoValidPairs("no ranker pairs given")
    _check_model(cfg, queries)
    tables = [_tables(queries, p, cfg.cutoff) for p in pairs]
    parts = _run_units(_rq2_repeat, [(cfg, tables, r) for r in range(cfg.repeats)], workers)
    indicators = {m: np.concatenate([part[0][m] for part in parts]) for m in cfg.methods}
    diffs = np.concatenate([part[1] for part in parts])
    zero_skips = sum(part[2] for part in parts)
    bins = bin_index(diffs, cfg.rq2_bins)
    edges = cfg.rq2_bins
    rows = []
    for method in sorted(cfg.methods):
        for b in range(len(edges) - 1):
            sel = bins == b
            if not sel.any():
                continue
            rows.append((cfg.dataset, cfg.click_model.name, method, edges[b], edges[b + 1],
                         float(indicators[method][sel].mean()), int(sel.sum()), cfg.seed))
    return ExperimentReport(
        kind="rq2",
        columns=("dataset", "click_model", "method", "ndcg_diff_lo", "ndcg_diff_hi", "error_rate", "n_samples", "seed"),
        rows=rows, indicators=indicators, bins=bins, skipped_queries=skipped_q, zero_diff_skips=zero_skips,
    )


# -- Monte Carlo oracle for the closed-form error probability --------------------


def monte_carlo_error(s: analytic.AnalyticScenario, trials: int, rng: np.random.Generator, method: str = "interleaving") -> float:
    """Sampled counterpart of the closed-form error probability.

    Each trial draws ``s.n`` Bernoulli clicks per ranker at the closed-form click
    probabilities (as binomial counts) and scores an error when A's mean is below
    B's; an exact tie counts as half an error.
    """
    if trials < 1:
        raise DomainError(f"trials={trials} must be >= 1")
    if method == "interleaving":
        stats = analytic.interleaving_stats(s)
    elif method == "ab_testing":
        stats = analytic.ab_stats(s)
    else:
        raise DomainError(f"unknown method {method!r}")
    count_a = rng.binomial(s.n, stats.p_a, size=trials)
    count_b = rng.binomial(s.n, stats.p_b, size=trials)
    errors = np.count_nonzero(count_a < count_b) + 0.5 * np.count_nonzero(count_a == count_b)
    return float(errors / trials)


def binomial_halfwidth(p: float, trials: int, z: float = 2.5758293035489004) -> float:
    """Normal-approximation half-width of a binomial proportion interval (99% by default)."""
    return z * math.sqrt(max(p * (1.0 - p), 0.0) / trials)
