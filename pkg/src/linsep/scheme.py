"""Demand-aware task assignment and nullspace transmissions.

The demand matrix is cut into blocks of ``delta`` rows by ``delta + m - 1``
columns.  Each block gets ``delta`` servers; server ``d`` of a block computes
one private pivot column plus every non-pivot column of the block, and sends
a single combination whose coefficients come from a left-nullspace vector of
the block with that server's columns removed.  The users of the row block
invert the stacked nullspace vectors to recover their share of the block.

All column and user indices are 0-based.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

from .algebra import (
    Field,
    Matrix,
    invert,
    left_nullspace_vector,
    pivot_columns,
    rank,
    solve_right,
    sparsity,
    vecmat,
)


@dataclass(frozen=True)
class ProblemInstance:
    K: int
    L: int
    M: int
    delta: int
    field: Field

    def __post_init__(self):
        if not 1 <= self.M <= self.K:
            raise ValueError(f"need 1 <= M <= K, got M={self.M}, K={self.K}")
        if not 1 <= self.delta <= self.L:
            raise ValueError(f"need 1 <= delta <= L, got delta={self.delta}, L={self.L}")

    @property
    def block_width(self) -> int:
        return self.delta + self.M - 1

    def to_json(self) -> dict:
        return {"K": self.K, "L": self.L, "M": self.M, "delta": self.delta, "field": self.field.to_json()}


class DemandMismatch(ValueError):
    """Demand matrix does not fit the problem instance."""


@dataclass(frozen=True)
class DemandMatrix:
    matrix: Matrix

    @classmethod
    def for_instance(cls, instance: ProblemInstance, matrix: Matrix) -> DemandMatrix:
        if matrix.field != instance.field:
            raise DemandMismatch(f"demand over {matrix.field}, instance over {instance.field}")
        if matrix.shape != (instance.L, instance.K):
            raise DemandMismatch(f"demand is {matrix.shape}, instance needs {(instance.L, instance.K)}")
        return cls(matrix)


def random_demand(instance: ProblemInstance, rng: random.Random, full_rank: bool = False) -> DemandMatrix:
    """Uniform entries over F_q, or small fractions over Q."""
    f = instance.field
    while True:
        if f.is_prime:
            rows = [[rng.randrange(f.q) for _ in range(instance.K)] for _ in range(instance.L)]
        else:
            rows = [[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(instance.K)]
                    for _ in range(instance.L)]
        m = Matrix(f, rows)
        if not full_rank or rank(m) == min(instance.L, instance.K):
            return DemandMatrix(m)


@dataclass(frozen=True)
class BlockGrid:
    row_blocks: tuple[range, ...]
    col_blocks: tuple[range, ...]


def partition_demand(instance: ProblemInstance) -> BlockGrid:
    d, w = instance.delta, instance.block_width
    rows = tuple(range(s, min(s + d, instance.L)) for s in range(0, instance.L, d))
    cols = tuple(range(s, min(s + w, instance.K)) for s in range(0, instance.K, w))
    return BlockGrid(rows, cols)


@dataclass(frozen=True)
class RowRepair:
    """Full-rank stand-in for a block plus the map back to the real rows.

    ``row_map @ surrogate`` reproduces the original block exactly.
    """

    surrogate: Matrix
    row_map: Matrix


def repair_block(block: Matrix, delta: int) -> RowRepair:
    """Complete ``block`` (at most ``delta`` rows, at least ``delta`` columns) to rank ``delta``.

    Rows that are independent of the rows above them are kept in place.
    Dependent rows, and the missing slots of a short block, are filled with
    unit rows ``e_c`` for the smallest ``c`` that raises the rank.
    """
    f = block.field
    width = block.ncols
    if block.nrows > delta or width < delta:
        raise ValueError(f"block {block.shape} cannot be repaired to rank {delta}")

    slots: list[tuple | None] = [None] * delta
    kept: list[tuple] = []
    original = set()
    for i, row in enumerate(block.data):
        if rank(Matrix._raw(f, tuple(kept) + (row,), width)) > len(kept):
            kept.append(row)
            slots[i] = row
            original.add(i)

    c = 0
    for s in range(delta):
        if slots[s] is not None:
            continue
        while True:
            unit = tuple(f.one if j == c else f.zero for j in range(width))
            c += 1
            if rank(Matrix._raw(f, tuple(kept) + (unit,), width)) > len(kept):
                kept.append(unit)
                slots[s] = unit
                break

    surrogate = Matrix._raw(f, tuple(slots), width)
    row_map = []
    for i, row in enumerate(block.data):
        if i in original:
            row_map.append(tuple(f.one if s == i else f.zero for s in range(delta)))
        else:
            row_map.append(solve_right(surrogate, row))
    return RowRepair(surrogate, Matrix._raw(f, tuple(row_map), delta))


def select_pivot_columns(surrogate: Matrix) -> tuple[int, ...]:
    """Leftmost ``nrows`` linearly independent columns (local indices)."""
    pivots = pivot_columns(surrogate)
    if len(pivots) < surrogate.nrows:
        raise ValueError(f"block has rank {len(pivots)} < {surrogate.nrows}")
    return tuple(pivots)


def assign_tasks(columns: Sequence[int], pivots: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    """Server ``d`` gets its own pivot plus every shared (non-pivot) column."""
    shared = [k for k in columns if k not in set(pivots)]
    return tuple(tuple(sorted([y, *shared])) for y in pivots)


def design_transmission(surrogate: Matrix, pivots: Sequence[int], d: int) -> tuple[tuple, tuple]:
    """Nullspace vector and transmit coefficients for server ``d``.

    ``pivots`` are local column indices.  Removing the server's task columns
    leaves the other ``delta - 1`` pivot columns; ``nu`` annihilates them, so
    ``nu @ surrogate`` is supported on the server's tasks only.
    """
    others = [p for i, p in enumerate(pivots) if i != d]
    nu = left_nullspace_vector(surrogate.select(cols=others))
    return nu, vecmat(surrogate.field, nu, surrogate)


@dataclass(frozen=True)
class BlockPlan:
    group: tuple[int, int]
    kind: str  # "standard" or "thin"
    users: range
    columns: range
    pivots: tuple[int, ...]  # global column indices; empty for thin blocks
    tasks: tuple[tuple[int, ...], ...]  # global column indices per server
    nullspace: tuple[tuple, ...]
    coefficient_rows: tuple[tuple, ...]  # per server, over the block's columns
    V: Matrix
    V_inv: Matrix
    repair: RowRepair | None

    @property
    def size(self) -> int:
        return len(self.tasks)


@dataclass(frozen=True)
class Server:
    id: int
    group: tuple[int, int]
    index: int
    tasks: tuple[int, ...]
    coefficients: tuple  # global row of A
    recipients: range


@dataclass(frozen=True)
class SchemePlan:
    instance: ProblemInstance
    demand: DemandMatrix
    grid: BlockGrid
    blocks: tuple[BlockPlan, ...]
    servers: tuple[Server, ...]
    A: Matrix  # R x K transmit coefficients
    C: Matrix  # L x R decode coefficients
    rate_formula: int

    @property
    def N(self) -> int:
        return len(self.servers)

    @property
    def R(self) -> int:
        return self.A.nrows

    def block(self, i: int, j: int) -> BlockPlan:
        return next(b for b in self.blocks if b.group == (i, j))

    def user_transmissions(self, user: int) -> list[int]:
        """Indices of the transmissions addressed to ``user``."""
        return [s.id for s in self.servers if user in s.recipients]


def rate_formula(instance: ProblemInstance) -> int:
    d = instance.delta
    return d * math.ceil(instance.L / d) * math.ceil(instance.K / instance.block_width)


def rate_achieved(instance: ProblemInstance) -> int:
    """Transmission count of :func:`build_plan`; thin column blocks cost their width."""
    grid = partition_demand(instance)
    per_row = sum(min(len(cols), instance.delta) for cols in grid.col_blocks)
    return len(grid.row_blocks) * per_row


def _standard_block(D: Matrix, group, users: range, columns: range, delta: int) -> BlockPlan:
    f = D.field
    block = D.select(rows=users, cols=columns)
    repair = repair_block(block, delta)
    local_pivots = select_pivot_columns(repair.surrogate)
    pivots = tuple(columns[p] for p in local_pivots)
    tasks = assign_tasks(columns, pivots)
    nus, rows = [], []
    for d in range(delta):
        nu, row = design_transmission(repair.surrogate, local_pivots, d)
        nus.append(nu)
        rows.append(row)
    V = Matrix._raw(f, tuple(nus), delta)
    return BlockPlan(group, "standard", users, columns, pivots, tasks, tuple(nus), tuple(rows),
                     V, invert(V), repair)


def _thin_block(D: Matrix, group, users: range, columns: range) -> BlockPlan:
    f = D.field
    w = len(columns)
    eye = Matrix.identity(f, w)
    return BlockPlan(group, "thin", users, columns, (), tuple((k,) for k in columns),
                     eye.data, eye.data, eye, eye, None)


def _decode_coefficients(block: BlockPlan, D: Matrix, user: int) -> tuple:
    """Coefficients user ``user`` applies to the block's transmissions."""
    f = D.field
    if block.kind == "thin":
        # raw outputs: weight by the user's own demand coefficients
        return tuple(D[user, k] for k in block.columns)
    slot = user - block.users.start
    return vecmat(f, block.repair.row_map.row(slot), block.V_inv)


def _assemble(instance: ProblemInstance, demand: DemandMatrix, grid: BlockGrid,
              blocks: Sequence[BlockPlan]) -> SchemePlan:
    f = instance.field
    D = demand.matrix
    servers, A_rows = [], []
    C_rows: list[list] = [[] for _ in range(instance.L)]
    for b in blocks:
        ids = []
        for d in range(b.size):
            coeffs = [f.zero] * instance.K
            for k, c in zip(b.columns, b.coefficient_rows[d]):
                coeffs[k] = c
            sid = len(servers)
            ids.append(sid)
            servers.append(Server(sid, b.group, d, b.tasks[d], tuple(coeffs), b.users))
            A_rows.append(tuple(coeffs))
        for u in range(instance.L):
            if u in b.users:
                C_rows[u].extend(_decode_coefficients(b, D, u))
            else:
                C_rows[u].extend([f.zero] * b.size)
    R = len(A_rows)
    A = Matrix._raw(f, tuple(A_rows), instance.K)
    C = Matrix._raw(f, tuple(tuple(r) for r in C_rows), R)
    return SchemePlan(instance, demand, grid, tuple(blocks), tuple(servers), A, C, rate_formula(instance))


def build_plan(instance: ProblemInstance, demand: DemandMatrix) -> SchemePlan:
    demand = DemandMatrix.for_instance(instance, demand.matrix)
    D = demand.matrix
    grid = partition_demand(instance)
    blocks = []
    for i, users in enumerate(grid.row_blocks):
        for j, columns in enumerate(grid.col_blocks):
            if len(columns) < instance.delta:
                blocks.append(_thin_block(D, (i, j), users, columns))
            else:
                blocks.append(_standard_block(D, (i, j), users, columns, instance.delta))
    return _assemble(instance, demand, grid, blocks)


def rescale_nullspace(plan: SchemePlan, factors: dict[tuple[int, int, int], object]) -> SchemePlan:
    """Rebuild ``plan`` with ``nu`` of server ``(i, j, d)`` multiplied by a nonzero factor."""
    f = plan.instance.field
    blocks = []
    for b in plan.blocks:
        if b.kind != "standard" or not any(key[:2] == b.group for key in factors):
            blocks.append(b)
            continue
        nus, rows = list(b.nullspace), list(b.coefficient_rows)
        for d in range(b.size):
            c = f(factors.get((*b.group, d), 1))
            if c == 0:
                raise ValueError("scale factor must be nonzero")
            nus[d] = tuple(f.mul(c, x) for x in nus[d])
            rows[d] = tuple(f.mul(c, x) for x in rows[d])
        V = Matrix._raw(f, tuple(nus), b.V.ncols)
        blocks.append(replace(b, nullspace=tuple(nus), coefficient_rows=tuple(rows), V=V, V_inv=invert(V)))
    return _assemble(plan.instance, plan.demand, plan.grid, blocks)


def decode_user(plan: SchemePlan, user: int, transmissions: Sequence) -> object:
    """Recover ``D[user, :] @ f`` from the transmissions of the user's row group."""
    if not 0 <= user < plan.instance.L:
        raise IndexError(f"user {user} out of range")
    if len(transmissions) != plan.R:
        raise ValueError(f"expected {plan.R} transmissions, got {len(transmissions)}")
    f = plan.instance.field
    total = f.zero
    for r in plan.user_transmissions(user):
        total = f.add(total, f.mul(plan.C[user, r], f(transmissions[r])))
    return total


@dataclass(frozen=True)
class FactorizationCertificate:
    C: Matrix
    A: Matrix
    delta: int
    M: int

    @property
    def R(self) -> int:
        return self.A.nrows

    def violations(self, D: Matrix) -> list[str]:
        problems = []
        if self.C.ncols != self.A.nrows:
            return [f"inner dimensions differ: {self.C.shape} vs {self.A.shape}"]
        if self.C @ self.A != D:
            problems.append("C @ A != D")
        for r in range(self.R):
            if sparsity(self.C.col(r)) > self.delta:
                problems.append(f"column {r} of C has {sparsity(self.C.col(r))} > {self.delta} nonzeros")
            if sparsity(self.A.row(r)) > self.M:
                problems.append(f"row {r} of A has {sparsity(self.A.row(r))} > {self.M} nonzeros")
        return problems

    def verify(self, D: Matrix) -> bool:
        return not self.violations(D)


def to_factorization(plan: SchemePlan) -> FactorizationCertificate:
    return FactorizationCertificate(plan.C, plan.A, plan.instance.delta, plan.instance.M)
