"""Label-aware augmentation policy search.

Two-stage pipeline: per-label reward exploration with a neural surrogate
(stage 1), then minimum-redundancy maximum-reward policy construction
(stage 2), plus a training harness that applies the resulting policies.
"""

__version__ = "0.1.0"

from .errors import (
    LabelAugError,
    ConfigError,
    ShapeError,
    DataFormatError,
    InvalidInputError,
    EvaluatorError,
)

__all__ = [
    "LabelAugError",
    "ConfigError",
    "ShapeError",
    "DataFormatError",
    "InvalidInputError",
    "EvaluatorError",
    "__version__",
]
