"""Context-aware ethical data tailoring.

Contexts and ethical requirements are modelled as trees, contextual views are
evaluated over relational CSV data, and a context-selected transformation
turns each view into an Ethical View with a provenance record.
"""

from .errors import (
    EthicaError,
    EvaluationError,
    ParseError,
    TransformError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "EthicaError",
    "EvaluationError",
    "ParseError",
    "TransformError",
    "ValidationError",
    "__version__",
]
