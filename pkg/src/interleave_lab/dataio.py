"""LETOR-format datasets, feature-sorted rankings, ranker pairs and nDCG."""

from __future__ import annotations

import gzip
import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .core import DEFAULT_MAX_GRADE, Ranking
from .errors import (
    CutoffTooLarge,
    GradeOutOfRange,
    InconsistentFeatures,
    MalformedLine,
    TooFewDocs,
    TooFewFeatures,
    UnknownFeature,
    ValidationError,
)

DEFAULT_CUTOFF = 5


class Doc(NamedTuple):
    doc_id: str
    grade: int
    features: Mapping[int, float]


@dataclass(frozen=True)
class QueryRecord:
    query_id: str
    docs: tuple[Doc, ...]

    @property
    def feature_keys(self) -> frozenset[int]:
        return frozenset(self.docs[0].features) if self.docs else frozenset()

    @property
    def grades(self) -> tuple[int, ...]:
        return tuple(d.grade for d in self.docs)


@dataclass(frozen=True)
class RankerPair:
    feature_a: int
    feature_b: int
    cutoff: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if self.feature_a == self.feature_b:
            raise ValidationError("a ranker pair needs two different features")
        if self.cutoff < 1:
            raise ValidationError("cutoff must be >= 1")

    @property
    def label(self) -> str:
        return f"{self.feature_a}-{self.feature_b}"


_DOCID = re.compile(r"docid\s*=\s*(\S+)")


def _parse_line(line: str, line_no: int, max_grade: int, source):
    body, _, comment = line.partition("#")
    tokens = body.split()
    if len(tokens) < 2:
        raise MalformedLine(line_no, "expected '<grade> qid:<q> ...'", source)
    try:
        grade = int(tokens[0])
    except ValueError:
        try:
            as_float = float(tokens[0])
        except ValueError:
            raise MalformedLine(line_no, f"bad grade {tokens[0]!r}", source) from None
        if not as_float.is_integer():
            raise MalformedLine(line_no, f"non-integer grade {tokens[0]!r}", source) from None
        grade = int(as_float)
    if not 0 <= grade <= max_grade:
        raise GradeOutOfRange(line_no, grade, max_grade, where=f"{source or ''} line".strip())
    if not tokens[1].startswith("qid:") or len(tokens[1]) == 4:
        raise MalformedLine(line_no, f"expected qid:<q>, got {tokens[1]!r}", source)
    qid = tokens[1][4:]
    features = {}
    for tok in tokens[2:]:
        key, sep, val = tok.partition(":")
        try:
            if not sep:
                raise ValueError
            idx = int(key)
            if idx in features:
                raise MalformedLine(line_no, f"feature {idx} repeated", source)
            features[idx] = float(val)
        except ValueError:
            raise MalformedLine(line_no, f"bad feature token {tok!r}", source) from None
    m = _DOCID.search(comment)
    if m:
        doc_id = m.group(1)
    elif comment.strip() and "=" not in comment:
        doc_id = comment.split()[0]
    else:
        doc_id = f"{qid}:{line_no}"
    return qid, Doc(doc_id, grade, features)


def parse_letor(stream: Iterable[str], max_grade: int = DEFAULT_MAX_GRADE, source=None) -> list[QueryRecord]:
    """Parse LETOR text lines into per-query records, in order of first appearance.

    Doc ids come from a ``#docid = X`` comment (or a bare leading comment token),
    else ``<qid>:<line number>``. Blank lines are ignored.
    """
    grouped: dict[str, list[Doc]] = {}
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        qid, doc = _parse_line(raw, line_no, max_grade, source)
        grouped.setdefault(qid, []).append(doc)
    records = []
    for qid, docs in grouped.items():
        keys = set(docs[0].features)
        if any(set(d.features) != keys for d in docs[1:]):
            raise InconsistentFeatures(qid, source)
        seen = set()
        for d in docs:
            if d.doc_id in seen:
                raise ValidationError(f"{source or 'input'}: query {qid!r} repeats doc id {d.doc_id!r}")
            seen.add(d.doc_id)
        records.append(QueryRecord(qid, tuple(docs)))
    return records


def _open_text(path: Path):
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def load_letor(paths, max_grade: int = DEFAULT_MAX_GRADE) -> list[QueryRecord]:
    """Load one or more LETOR files (gzip detected by magic bytes).

    Queries repeated across files are merged in file order.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    merged: dict[str, list[Doc]] = {}
    for p in paths:
        p = Path(p)
        with _open_text(p) as fh:
            for rec in parse_letor(fh, max_grade=max_grade, source=str(p)):
                merged.setdefault(rec.query_id, []).extend(rec.docs)
    out = []
    for qid, docs in merged.items():
        keys = set(docs[0].features)
        if any(set(d.features) != keys for d in docs):
            raise InconsistentFeatures(qid)
        ids = [d.doc_id for d in docs]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"query {qid!r} repeats doc ids across input files")
        out.append(QueryRecord(qid, tuple(docs)))
    return out


def rank_by_feature(q: QueryRecord, feature: int, cutoff: int = DEFAULT_CUTOFF) -> Ranking:
    """Top-``cutoff`` docs by descending feature value; ties by ascending doc id."""
    if feature not in q.feature_keys:
        raise UnknownFeature(f"feature {feature} not present in query {q.query_id!r}")
    if len(q.docs) < cutoff:
        raise TooFewDocs(f"query {q.query_id!r} has {len(q.docs)} docs, cutoff is {cutoff}")
    order = sorted(q.docs, key=lambda d: (-d.features[feature], d.doc_id.encode("utf-8")))
    return Ranking(q.query_id, tuple((d.doc_id, d.grade) for d in order[:cutoff]))


def enumerate_pairs(features: Sequence[int], cutoff: int = DEFAULT_CUTOFF) -> list[RankerPair]:
    uniq = sorted(set(int(f) for f in features))
    if len(uniq) < 2:
        raise TooFewFeatures(f"need at least two distinct features, got {uniq}")
    return [RankerPair(a, b, cutoff) for a, b in itertools.combinations(uniq, 2)]


def dcg(grades: Sequence[int], cutoff: int) -> float:
    return sum((2.0 ** g - 1.0) / math.log2(i + 1) for i, g in enumerate(grades[:cutoff], start=1))


def ndcg(r, ideal_grades: Iterable[int], cutoff: int = DEFAULT_CUTOFF) -> float:
    """nDCG@cutoff with (2^g - 1) / log2(i + 1) gains; 0.0 when the ideal DCG is 0.

    ``r`` may be a :class:`Ranking` or a plain grade sequence.
    """
    grades = r.grades if isinstance(r, Ranking) else tuple(r)
    if cutoff > len(grades):
        raise CutoffTooLarge(f"cutoff {cutoff} exceeds ranking length {len(grades)}")
    ideal = dcg(sorted(ideal_grades, reverse=True), cutoff)
    if ideal == 0:
        return 0.0
    return dcg(grades, cutoff) / ideal


def make_synthetic(
    n_queries: int = 60,
    docs_per_query: int = 40,
    grade_probs: Sequence[float] = (0.74, 0.20, 0.06),
    feature_quality: Sequence[float] = (2.0, 1.0, 0.5, 0.0),
    noise: float = 1.0,
    seed: int = 0,
) -> list[QueryRecord]:
    """Random LETOR-like dataset whose features differ in how well they track relevance.

    Feature ``j + 1`` of a doc is ``feature_quality[j] * grade + N(0, noise^2)``, so
    feature 1 is the strongest ranker and a zero-quality feature is pure noise.
    """
    if n_queries < 1 or docs_per_query < 1:
        raise ValidationError("n_queries and docs_per_query must be >= 1")
    probs = np.asarray(grade_probs, dtype=float)
    if probs.min() < 0 or not math.isclose(probs.sum(), 1.0, abs_tol=1e-9):
        raise ValidationError(f"grade_probs {tuple(grade_probs)} is not a distribution")
    rng = np.random.default_rng(seed)
    quality = np.asarray(feature_quality, dtype=float)
    records = []
    for qi in range(n_queries):
        qid = f"S{qi + 1:03d}"
        grades = rng.choice(len(probs), size=docs_per_query, p=probs)
        feats = grades[:, None] * quality[None, :] + noise * rng.standard_normal((docs_per_query, len(quality)))
        docs = tuple(
            Doc(f"{qid}-D{di + 1:03d}", int(grades[di]), {j + 1: round(float(feats[di, j]), 6) for j in range(len(quality))})
            for di in range(docs_per_query)
        )
        records.append(QueryRecord(qid, docs))
    return records


def to_letor_lines(records: Iterable[QueryRecord]) -> list[str]:
    out = []
    for q in records:
        for d in q.docs:
            feats = " ".join(f"{k}:{v!r}" for k, v in sorted(d.features.items()))
            out.append(f"{d.grade} qid:{q.query_id} {feats} #docid = {d.doc_id}")
    return out
