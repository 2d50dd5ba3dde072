"""Exception types shared across the package."""


class GecombineError(Exception):
    """Base class for all package-specific errors."""


class ConflictError(GecombineError):
    """Two edits cannot be applied to the same sentence."""


class FormatError(GecombineError):
    """Malformed M2 input; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ShapeMismatch(GecombineError):
    """Prediction/gold/weight vectors disagree in length."""


class MissingProbability(GecombineError):
    """An edit-union entry lacks the edit-score probability."""


class RosterMismatch(GecombineError):
    """Prediction-time base systems differ from the training roster."""


class ModelNotLoaded(GecombineError):
    """A scorer or language model was used before loading its artifact."""


class DegenerateInput(GecombineError):
    """Statistic undefined for the given input (e.g. constant vector)."""


class LengthMismatch(GecombineError):
    """Aligned corpora differ in sentence count."""


class DomainError(GecombineError):
    """Input outside the mathematical domain of the operation."""


class TooManyEdits(GecombineError):
    """Edit union exceeds the exhaustive-enumeration cap."""


class EmptyCorpus(GecombineError):
    """Training requested on an empty corpus."""


class ScorerFailure(GecombineError):
    """External scorer crashed, timed out, or returned an error response."""
