"""Brute-force ground truth for tiny instances.

``min_rate_bruteforce`` finds the smallest inner dimension ``R`` of a
factorization ``D = C @ A`` whose ``C`` columns have at most ``delta``
nonzeros and whose ``A`` rows have at most ``M``.  ``A`` rows are enumerated
up to scaling (first nonzero entry 1) since any row scaling can be pushed
into ``C``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import Field, Matrix, rank, solve_right
from .bounds import BOUND_TOL, counting_bound, lower_bound_fq
from .scheme import (
    DemandMatrix,
    FactorizationCertificate,
    ProblemInstance,
    build_plan,
    rate_achieved,
    to_factorization,
)

MAX_Q = 3
MAX_L = 3
MAX_K = 4
MAX_RMAX = 5
MAX_PAIRS = 10**7


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    min_R: int | None  # None when no factorization with R <= R_max was found
    witness: FactorizationCertificate | None
    search_budget: dict = field(default_factory=dict)

    @property
    def exceeded(self) -> bool:
        return self.min_R is None

    def to_json(self) -> dict:
        out = {
            "min_R": self.min_R if self.min_R is not None else "exceeded budget",
            "search_budget": dict(self.search_budget),
        }
        if self.witness is not None:
            out["witness"] = {"C": self.witness.C.to_json(), "A": self.witness.A.to_json()}
        return out


def _check_feasible(instance: ProblemInstance, R_max: int) -> None:
    f = instance.field
    if not f.is_prime:
        raise ValueError("oracle needs a prime field")
    if f.q > MAX_Q or instance.L > MAX_L or instance.K > MAX_K or R_max > MAX_RMAX:
        raise ValueError(
            f"instance too large for enumeration (need q<={MAX_Q}, L<={MAX_L}, "
            f"K<={MAX_K}, R_max<={MAX_RMAX})"
        )


def sparse_vectors(n: int, s: int, q: int, canonical: bool = False) -> list[tuple]:
    """All nonzero length-``n`` vectors over F_q with at most ``s`` nonzeros.

    With ``canonical`` only vectors whose first nonzero entry is 1 are kept.
    Ordered by support (lexicographic), then values.
    """
    out = []
    for size in range(1, min(s, n) + 1):
        for support in itertools.combinations(range(n), size):
            lead = [1] if canonical else range(1, q)
            for first in lead:
                for rest in itertools.product(range(1, q), repeat=size - 1):
                    v = [0] * n
                    for k, x in zip(support, (first, *rest)):
                        v[k] = x
                    out.append(tuple(v))
    return out


def _min_masks(f: Field, A: list[tuple], target: tuple) -> list[int]:
    """Inclusion-minimal subsets of rows of ``A`` (bitmasks) whose span contains ``target``."""
    R = len(A)
    if not any(target):
        return [0]
    good: dict[int, bool] = {}
    minimal = []
    for mask in sorted(range(1, 1 << R), key=lambda m: (bin(m).count("1"), m)):
        sub_good = any(good.get(mask & ~(1 << b)) for b in range(R) if mask >> b & 1)
        if sub_good:
            good[mask] = True
            continue
        rows = tuple(A[b] for b in range(R) if mask >> b & 1)
        ok = solve_right(Matrix._raw(f, rows, len(target)), target) is not None
        good[mask] = ok
        if ok:
            minimal.append(mask)
    return minimal


def _assign_users(options: list[list[int]], R: int, delta: int) -> list[int] | None:
    """Pick one mask per user so that each row serves at most ``delta`` users."""
    load = [0] * R
    choice: list[int] = []

    def go(u: int) -> bool:
        if u == len(options):
            return True
        for mask in options[u]:
            bits = [b for b in range(R) if mask >> b & 1]
            if all(load[b] < delta for b in bits):
                for b in bits:
                    load[b] += 1
                choice.append(mask)
                if go(u + 1):
                    return True
                choice.pop()
                for b in bits:
                    load[b] -= 1
        return False

    return choice if go(0) else None


def _witness(f: Field, D: Matrix, A: list[tuple], masks: list[int], delta: int, M: int) -> FactorizationCertificate:
    R = len(A)
    C = [[0] * R for _ in range(D.nrows)]
    for u, mask in enumerate(masks):
        bits = [b for b in range(R) if mask >> b & 1]
        x = solve_right(Matrix._raw(f, tuple(A[b] for b in bits), D.ncols), D.row(u))
        for b, c in zip(bits, x):
            C[u][b] = c
    return FactorizationCertificate(Matrix(f, C, R), Matrix._raw(f, tuple(A), D.ncols), delta, M)


def _search(f: Field, D: Matrix, rows: list[tuple], R: int, delta: int, M: int):
    """First multiset of ``R`` canonical rows that admits a sparse ``C``, or None."""
    K = D.ncols
    d_rows = tuple(r for r in D.data if any(r))
    leaves = 0

    def dims(chosen):
        span = rank(Matrix._raw(f, tuple(chosen), K)) if chosen else 0
        joint = rank(Matrix._raw(f, tuple(chosen) + d_rows, K)) if chosen or d_rows else 0
        return span, joint

    def go(start: int, chosen: list[tuple]):
        nonlocal leaves
        span, joint = dims(chosen)
        if joint - span > R - len(chosen):
            return None
        if len(chosen) == R:
            leaves += 1
            options = [_min_masks(f, chosen, D.row(u)) for u in range(D.nrows)]
            if any(not o for o in options):
                return None
            masks = _assign_users(options, R, delta)
            return None if masks is None else (list(chosen), masks)
        for i in range(start, len(rows)):
            chosen.append(rows[i])
            hit = go(i, chosen)
            chosen.pop()
            if hit:
                return hit
        return None

    return go(0, []), leaves


def min_rate_bruteforce(instance: ProblemInstance, demand: DemandMatrix, R_max: int) -> OracleResult:
    _check_feasible(instance, R_max)
    f = instance.field
    D = DemandMatrix.for_instance(instance, demand.matrix).matrix
    budget = {"R_max": R_max, "leaves_visited": 0}
    r0 = rank(D)
    if r0 == 0:
        empty = FactorizationCertificate(Matrix.zeros(f, instance.L, 0), Matrix.zeros(f, 0, instance.K),
                                         instance.delta, instance.M)
        return OracleResult(0, empty, budget)
    rows = sparse_vectors(instance.K, instance.M, f.q, canonical=True)
    budget["candidate_rows"] = len(rows)
    for R in range(r0, R_max + 1):
        hit, leaves = _search(f, D, rows, R, instance.delta, instance.M)
        budget["leaves_visited"] += leaves
        if hit:
            A, masks = hit
            return OracleResult(R, _witness(f, D, A, masks, instance.delta, instance.M), budget)
    return OracleResult(None, None, budget)


def product_count_bound(L: int, K: int, R: int, delta: int, M: int, q: int) -> Fraction:
    """Upper bound on the number of distinct sparse products ``C @ A``."""
    per = math.comb(L, delta) * q**delta * math.comb(K, M) * q**M
    return Fraction(per**R, (q - 1) ** R)


def count_distinct_products(L: int, K: int, R: int, delta: int, M: int, q: int) -> tuple[int, Fraction]:
    """Exact number of distinct ``C @ A`` over all admissible pairs, and the counting bound."""
    cols = [(0,) * L] + sparse_vectors(L, delta, q)
    rows = [(0,) * K] + sparse_vectors(K, M, q)
    pairs = (len(cols) * len(rows)) ** R
    if pairs > MAX_PAIRS:
        raise BudgetExceeded(f"{pairs} (C, A) pairs exceeds {MAX_PAIRS}")
    outer = [tuple(c[i] * a[k] % q for i in range(L) for k in range(K)) for c in cols for a in rows]
    outer = sorted(set(outer))  # distinct rank-one terms suffice
    seen = set()
    for terms in itertools.product(outer, repeat=R):
        seen.add(tuple(sum(t) % q for t in zip(*terms)))
    count = len(seen)
    bound = product_count_bound(L, K, R, delta, M, q)
    if count > bound:
        raise AssertionError(f"{count} distinct products exceed the bound {bound}")
    return count, bound


@dataclass
class SandwichReport:
    lower: float
    min_R: int | None
    scheme_R: int
    rank: int
    holds: bool
    lb_finite_q: float | None = None

    def to_json(self) -> dict:
        return {"lower": self.lower, "min_R": self.min_R, "scheme_R": self.scheme_R,
                "rank": self.rank, "holds": self.holds, "lb_finite_q": self.lb_finite_q}


def sandwich_check(instance: ProblemInstance, demand: DemandMatrix) -> SandwichReport:
    """Check ``lower <= min_R <= scheme R`` for one demand matrix.

    ``lower`` is ``rank(D)``.  The finite-field bound is a worst case over
    all ``D`` and a particular matrix can beat it (a full-rank ``1 x 4`` row with one nonzero entry over F_3 needs only one
    transmission against a bound of 1.52).  The bound is reported alongside;
    ``worst_case_sandwich`` checks it against the exhaustive worst case.
    """
    plan = build_plan(instance, demand)
    if not to_factorization(plan).verify(demand.matrix):
        raise AssertionError("scheme certificate does not verify")
    r = rank(demand.matrix)
    result = min_rate_bruteforce(instance, demand, min(plan.R, MAX_RMAX))
    holds = result.min_R is not None and r <= result.min_R <= plan.R
    return SandwichReport(float(r), result.min_R, plan.R, r, holds, lower_bound_fq(instance))


def worst_case_min_rate(instance: ProblemInstance, R_max: int, limit: int = 4096) -> tuple[int | None, Matrix]:
    """Largest per-matrix minimum rate over every demand matrix of the instance's shape.

    Returns ``(None, D)`` as soon as some ``D`` needs more than ``R_max``.
    """
    _check_feasible(instance, R_max)
    f = instance.field
    n = instance.L * instance.K
    if f.q**n > limit:
        raise BudgetExceeded(f"{f.q ** n} demand matrices exceed the limit {limit}")
    worst, arg = -1, None
    for flat in itertools.product(range(f.q), repeat=n):
        D = Matrix(f, [flat[i * instance.K:(i + 1) * instance.K] for i in range(instance.L)], instance.K)
        res = min_rate_bruteforce(instance, DemandMatrix(D), R_max)
        if res.min_R is None:
            return None, D
        if res.min_R > worst:
            worst, arg = res.min_R, D
    return worst, arg


def worst_case_sandwich(instance: ProblemInstance, limit: int = 4096) -> SandwichReport:
    """Check ``lb_finite_q <= R* <= scheme R`` with ``R*`` found exhaustively.

    The converse assumes the users' requests can be linearly independent,
    which needs ``L <= K``; otherwise no demand has rank ``L``.
    """
    if instance.L > instance.K:
        raise ValueError("worst-case bound needs L <= K (independent requests)")
    scheme = rate_achieved(instance)  # the plan's size does not depend on D
    worst, D = worst_case_min_rate(instance, min(scheme, MAX_RMAX), limit)
    lb = lower_bound_fq(instance)
    holds = worst is not None and lb <= worst + BOUND_TOL and worst <= scheme
    return SandwichReport(lb, worst, scheme, instance.L, holds, lb)


__all__ = [
    "BudgetExceeded",
    "OracleResult",
    "SandwichReport",
    "count_distinct_products",
    "counting_bound",
    "min_rate_bruteforce",
    "product_count_bound",
    "sandwich_check",
    "sparse_vectors",
    "worst_case_min_rate",
    "worst_case_sandwich",
]
