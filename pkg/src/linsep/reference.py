"""Embedded reference instance: K=10, L=6, M=3, delta=3 over F_11."""

from __future__ import annotations

from .algebra import Field, Matrix
from .scheme import DemandMatrix, ProblemInstance

REFERENCE_ROWS = (
    (1, 1, 1, 1, 1, 1, 1, 1, 1, 1),
    (1, 2, 3, 4, 5, 6, 2, 8, 9, 10),
    (1, 4, 9, 5, 3, 3, 5, 8, 4, 1),
    (1, 3, 4, 9, 4, 1, 2, 6, 3, 10),
    (1, 5, 6, 3, 9, 2, 4, 4, 5, 1),
    (1, 6, 7, 1, 9, 5, 10, 1, 10, 10),
)

# expected for group (0, 0): per-server tasks and nullspace directions
REFERENCE_TASKS = ((0, 3, 4), (1, 3, 4), (2, 3, 4))
REFERENCE_NULLSPACE = ((6, -5, 1), (3, -4, 1), (2, -3, 1))
REFERENCE_RATE = 12


def reference_instance(field: Field | None = None) -> tuple[ProblemInstance, DemandMatrix]:
    field = field or Field.prime(11)
    return ProblemInstance(10, 6, 3, 3, field), DemandMatrix(Matrix(field, REFERENCE_ROWS))
