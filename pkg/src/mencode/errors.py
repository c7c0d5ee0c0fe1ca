"""Exception types shared across the toolkit."""


class MencodeError(Exception):
    """Base class for all domain errors raised by mencode."""


# --- data loading and experiment planning ---


class EmptyInput(MencodeError):
    """The CSV stream contained no usable records."""


class MalformedRecord(MencodeError):
    """A CSV record had the wrong arity or an unparseable numeric field."""


class UnknownLabel(MencodeError):
    """A categorical field held a value outside the declared label set."""


class ConstantColumn(MencodeError):
    """A continuous column has a single distinct value; cannot form two bins."""


class TooFewRows(MencodeError):
    """Fewer rows than the protocol requires (folds, leave-one-out)."""


class SampleTooLarge(MencodeError):
    """Requested subsample size exceeds the available rows."""


# --- model fitting ---


class SchemaMismatch(MencodeError):
    """Dataset and network structure disagree on variable count or arity."""


class NotNaiveBayes(MencodeError):
    """Operation requires the Naive Bayes structure (class root, leaf attributes)."""


class NonPositiveHyper(MencodeError):
    """Posterior-mean fitting needs strictly positive pseudo-counts."""


class BoundaryParameter(MencodeError):
    """A conditional probability touched 0 or 1."""


class OutOfRangeValue(MencodeError):
    """A data vector holds a value index outside its variable's cardinality."""


class NoInteriorMode(MencodeError):
    """The posterior has no interior maximum for some table cell.

    Carries the offending (variable, config, value) cell when known, and
    ``min_feasible_ess``, the smallest ladder ESS that would have avoided
    the failure, when the caller computed one.
    """

    def __init__(self, message, *, variable=None, config=None, value=None,
                 min_feasible_ess=None):
        super().__init__(message)
        self.variable = variable
        self.config = config
        self.value = value
        self.min_feasible_ess = min_feasible_ess


# --- codelength laboratory ---


class BoundaryTheta(MencodeError):
    """A parameter value outside the open interval (0, 1)."""


class NonpositivePrecision(MencodeError):
    """Precision quantum d must be strictly positive."""


class ZeroPriorDensity(MencodeError):
    """The prior density vanishes where a codeword needs positive mass."""


class NoInteriorMaximum(MencodeError):
    """The maximized expression has its supremum on the parameter boundary."""


class InstanceTooLarge(MencodeError):
    """Problem size exceeds the exhaustive-search limits."""


class UncoveredOutcome(MencodeError):
    """Some outcome has zero likelihood under every codeword."""


# --- scoring ---


class ZeroProbability(MencodeError):
    """Log-score is undefined for probability zero."""


# --- configuration (CLI and service) ---


class ConfigError(MencodeError):
    """Invalid experiment configuration."""
