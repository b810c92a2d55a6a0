"""JSON demand files and run reports."""

from __future__ import annotations

from fractions import Fraction

from .algebra import Field, Matrix, sparsity
from .bounds import BoundsReport
from .scheme import SchemePlan, to_factorization

SCHEMA = "linsep.report/1"


class DemandFileError(ValueError):
    pass


def load_demand(obj: dict) -> tuple[Field, Matrix]:
    """Parse ``{"field": {...}, "matrix": [[...]]}``.

    Prime-field entries must be integers; rational entries may be integers
    or ``"num/den"`` strings.
    """
    try:
        field = Field.from_json(obj["field"])
        rows = obj["matrix"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DemandFileError(f"malformed demand file: {exc}") from exc
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise DemandFileError("matrix must be a non-empty list of rows")
    if len({len(r) for r in rows}) != 1:
        raise DemandFileError("matrix is not rectangular")
    parsed = []
    for r in rows:
        out = []
        for x in r:
            if isinstance(x, bool) or not isinstance(x, (int, str)):
                raise DemandFileError(f"bad entry {x!r}")
            if isinstance(x, str):
                if field.is_prime:
                    raise DemandFileError(f"prime-field entries must be integers, got {x!r}")
                try:
                    x = Fraction(x)
                except (ValueError, ZeroDivisionError) as exc:
                    raise DemandFileError(f"bad rational {x!r}") from exc
            out.append(x)
        parsed.append(out)
    return field, Matrix(field, parsed)


def dump_demand(matrix: Matrix) -> dict:
    return {"field": matrix.field.to_json(), "matrix": matrix.to_json()}


def plan_summary(plan: SchemePlan) -> dict:
    f = plan.instance.field
    blocks = []
    for b in plan.blocks:
        blocks.append({
            "group": list(b.group),
            "kind": b.kind,
            "users": list(b.users),
            "columns": list(b.columns),
            "pivots": list(b.pivots),
            "tasks": [list(t) for t in b.tasks],
            "nullspace": [[f.format(x) for x in nu] for nu in b.nullspace],
            "V_inv": b.V_inv.to_json(),
        })
    cert = to_factorization(plan)
    return {
        "N": plan.N,
        "R": plan.R,
        "rate_formula": plan.rate_formula,
        "blocks": blocks,
        "A": plan.A.to_json(),
        "C": plan.C.to_json(),
        "certificate": {
            "valid": cert.verify(plan.demand.matrix),
            "max_C_column_nonzeros": max((sparsity(plan.C.col(r)) for r in range(plan.R)), default=0),
            "max_A_row_nonzeros": max((sparsity(plan.A.row(r)) for r in range(plan.R)), default=0),
        },
    }


def run_report(command: str, plan: SchemePlan, bounds: BoundsReport, simulation: dict | None = None,
               extra: dict | None = None) -> dict:
    report = {
        "schema": SCHEMA,
        "command": command,
        "instance": plan.instance.to_json(),
        "demand": dump_demand(plan.demand.matrix),
        "plan": plan_summary(plan),
        "bounds": bounds.to_json(),
    }
    if simulation is not None:
        report["simulation"] = simulation
    if extra:
        report.update(extra)
    return report
