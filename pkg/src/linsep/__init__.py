"""Multi-user distributed computation of linearly separable functions."""

from .algebra import Field, Matrix
from .scheme import DemandMatrix, ProblemInstance, SchemePlan, build_plan, to_factorization

__version__ = "0.1.0"

__all__ = [
    "DemandMatrix",
    "Field",
    "Matrix",
    "ProblemInstance",
    "SchemePlan",
    "build_plan",
    "to_factorization",
]
