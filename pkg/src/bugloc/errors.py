"""Exception and warning types shared across the package."""


class BuglocError(Exception):
    """Base class for all package errors."""


class EmptyQuery(BuglocError):
    """A bug report produced no terms under the chosen representation."""


class ConfigParseError(BuglocError):
    """A configuration id string could not be parsed."""

    def __init__(self, config_id, token):
        super().__init__(f"cannot parse configuration id {config_id!r}: bad token {token!r}")
        self.config_id = config_id
        self.token = token


class ConvergenceFailure(BuglocError):
    """An iterative kernel hit its iteration cap before converging."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularDesign(BuglocError):
    """Rank-deficient design matrix; `columns` lists the dependent columns."""

    def __init__(self, columns):
        super().__init__(f"design matrix is rank deficient; dependent columns: {list(columns)}")
        self.columns = list(columns)


class SingularCovariance(BuglocError):
    """A coefficient covariance sub-block is not invertible."""


class DegenerateInput(BuglocError):
    """Input on which the statistic is undefined (e.g. a constant vector)."""


class ModelMismatch(BuglocError):
    """A trained model does not belong to the corpus it is being used on."""


class InsufficientVariation(BuglocError):
    """No configuration parameter varies; nothing to regress on."""


class MissingResults(BuglocError):
    """The results store has no rows for a requested family."""


class ParseFallbackWarning(UserWarning):
    """Method boundaries could not be determined; whole file kept as the dummy method."""


class MalformedHunkWarning(UserWarning):
    """A diff hunk could not be parsed and was skipped."""


class UnresolvedBugWarning(UserWarning):
    """A commit referenced a bug id absent from the bug store; link dropped."""


class UnresolvedEntityWarning(UserWarning):
    """A linked entity id does not resolve in the evaluation snapshot."""


class TopicClampWarning(UserWarning):
    """Requested topic count exceeded the matrix dimensions and was clamped."""


class DroppedParameterWarning(UserWarning):
    """A configuration parameter was constant across outcomes and was dropped."""
