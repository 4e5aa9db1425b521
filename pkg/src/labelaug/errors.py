"""Exception types shared across the package."""


class LabelAugError(Exception):
    """Base class for all package errors."""


class ConfigError(LabelAugError):
    """Invalid configuration: bad dimensions, counts, ranges, or file contents."""


class ShapeError(LabelAugError):
    """Array/vector dimensions do not match what an operation requires."""


class DataFormatError(LabelAugError):
    """A data file does not conform to its declared binary format."""


class InvalidInputError(LabelAugError):
    """A runtime argument is outside the operation's domain."""


class EvaluatorError(LabelAugError):
    """The reward evaluator (built-in or external) failed or is unavailable."""
