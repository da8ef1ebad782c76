"""Exception hierarchy for interleave_lab."""


class InterleaveLabError(Exception):
    """Base class for all library errors."""


class ValidationError(InterleaveLabError, ValueError):
    pass


class DuplicateItem(ValidationError):
    def __init__(self, doc_id):
        super().__init__(f"duplicate doc_id {doc_id!r} in ranking")
        self.doc_id = doc_id


class EmptyRanking(ValidationError):
    def __init__(self):
        super().__init__("ranking has no items")


class GradeOutOfRange(ValidationError):
    def __init__(self, position, grade, max_grade, where="position"):
        super().__init__(f"grade {grade!r} at {where} {position} outside [0, {max_grade}]")
        self.position = position
        self.grade = grade
        self.max_grade = max_grade


class RankingTooShort(ValidationError):
    pass


class OverlappingItems(ValidationError):
    def __init__(self, doc_id):
        super().__init__(f"doc_id {doc_id!r} appears in both input rankings")
        self.doc_id = doc_id


class LengthMismatch(ValidationError):
    pass


class NoImpressions(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class UndefinedErrorProbability(DomainError):
    """Both the mean difference and its variance are zero."""


class TheoremViolation(AssertionError):
    """An analytic identity or inequality did not hold; carries both sides."""

    def __init__(self, message, lhs, rhs):
        super().__init__(f"{message}: lhs={lhs!r} rhs={rhs!r}")
        self.lhs = lhs
        self.rhs = rhs


class DatasetError(InterleaveLabError):
    pass


class MalformedLine(DatasetError, ValueError):
    def __init__(self, line_no, detail="", source=None):
        loc = f"{source}:{line_no}" if source else f"line {line_no}"
        super().__init__(f"{loc}: malformed LETOR line{': ' + detail if detail else ''}")
        self.line_no = line_no
        self.source = source


class InconsistentFeatures(DatasetError, ValueError):
    def __init__(self, query_id, source=None):
        prefix = f"{source}: " if source else ""
        super().__init__(f"{prefix}query {query_id!r} has documents with differing feature sets")
        self.query_id = query_id


class UnknownFeature(ValidationError):
    pass


class TooFewDocs(ValidationError):
    pass


class TooFewFeatures(ValidationError):
    pass


class CutoffTooLarge(ValidationError):
    pass


class UndecidableTruth(ValidationError):
    pass


class ConfigError(InterleaveLabError, ValueError):
    pass


class NoValidPairs(ConfigError):
    pass
