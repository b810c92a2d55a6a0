"""End-to-end acceptance checks, one test per criterion.

Each test is tagged ``@pytest.mark.criterion(n)``; ``conftest.py`` prints a
PASS/FAIL line per criterion at the end of the run.
"""

import json
import random
import time

import pytest

from linsep.algebra import Field, Matrix, is_prime, is_scalar_multiple, matvec, rank, sparsity
from linsep.bounds import BOUND_TOL, gap_report, lower_bound_fq, lower_bound_real
from linsep.cli import main
from linsep.oracle import count_distinct_products, min_rate_bruteforce, sandwich_check, worst_case_sandwich
from linsep.reference import REFERENCE_NULLSPACE, REFERENCE_TASKS, reference_instance
from linsep.scheme import (
    DemandMatrix,
    ProblemInstance,
    build_plan,
    decode_user,
    random_demand,
    rate_formula,
    rescale_nullspace,
    to_factorization,
)
from linsep.simulator import run

F13 = Field.prime(13)
Q = Field.rational()


def grid():
    for K in range(1, 9):
        for L in range(1, 7):
            for M in range(1, K + 1):
                for d in range(1, L + 1):
                    yield K, L, M, d


@pytest.mark.criterion(1)
def test_example1_golden():
    start = time.perf_counter()
    instance, demand = reference_instance()
    plan = build_plan(instance, demand)
    assert plan.N == 12 and plan.R == 12
    block = plan.block(0, 0)
    # 0-based {0,3,4} is {1,4,5} in 1-based numbering
    assert block.tasks == REFERENCE_TASKS == ((0, 3, 4), (1, 3, 4), (2, 3, 4))
    for nu, ref in zip(block.nullspace, REFERENCE_NULLSPACE):
        assert is_scalar_multiple(instance.field, nu, ref)
    for seed in range(3):
        assert run(instance, demand, plan, seed).exact
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(2)
def test_scheme_exactness_grid():
    start = time.perf_counter()
    rng = random.Random(2)
    checked = 0
    for K, L, M, d in grid():
        for field in (F13, Q):
            inst = ProblemInstance(K, L, M, d, field)
            formula = rate_formula(inst)
            last_width = K - (d + M - 1) * ((K - 1) // (d + M - 1))
            for _ in range(5):
                demand = random_demand(inst, rng)
                plan = build_plan(inst, demand)
                cert = to_factorization(plan)
                assert cert.C @ cert.A == demand.matrix
                assert all(sparsity(cert.C.col(r)) <= d for r in range(cert.R))
                assert all(sparsity(cert.A.row(r)) <= M for r in range(cert.R))
                assert plan.N == plan.R <= formula
                if last_width >= d:
                    assert plan.R == formula
                for seed in range(3):
                    srng = random.Random(seed * 7919 + checked)
                    f = [field(srng.randint(-100, 100)) for _ in range(K)]
                    x = matvec(plan.A, f)
                    assert [decode_user(plan, u, x) for u in range(L)] == list(matvec(demand.matrix, f))
                checked += 1
    assert checked == 756 * 2 * 5
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(3)
def test_rate_optimal_over_rationals():
    for K, L, M, d in grid():
        inst = ProblemInstance(K, L, M, d, Q)
        ratio = rate_formula(inst) / lower_bound_real(inst)
        if L % d == 0 and K % (d + M - 1) == 0:
            assert ratio == 1
        else:
            assert ratio <= 4


@pytest.mark.criterion(4)
def test_finite_field_gap():
    r = gap_report(ProblemInstance(10, 6, 3, 3, Field.prime(11)))
    assert abs(r.lb_finite_q - 7.2415) < 1e-4
    assert abs(r.gap_finite_q - 1.657) < 1e-3

    divisible_violations, findings = [], []
    for K, L, M, d in grid():
        for q in (p for p in range(K, 2 * K + 1) if is_prime(p)):
            inst = ProblemInstance(K, L, M, d, Field.prime(q))
            ratio = rate_formula(inst) / lower_bound_fq(inst)
            if L % d == 0 and K % (d + M - 1) == 0:
                if not 1 - BOUND_TOL <= ratio <= 3 + BOUND_TOL:
                    divisible_violations.append(((K, L, M, d, q), round(ratio, 4)))
            elif ratio > 8 + BOUND_TOL:
                findings.append(((K, L, M, d, q), round(ratio, 4)))
    if findings:
        print(f"non-divisible points above factor 8: {findings}")
    assert not divisible_violations, f"gap above 3 at {divisible_violations}"


@pytest.mark.criterion(5)
def test_counting_bound():
    start = time.perf_counter()
    expected = {
        (1, 1, 1, 1, 1, 2): (2, 4),
        (2, 1, 1, 1, 1, 3): (5, 9),
        (2, 2, 2, 1, 1, 2): (11, 256),
        (2, 2, 2, 2, 1, 2): (16, 256),
    }
    for point, (count, bound) in expected.items():
        assert count_distinct_products(*point) == (count, bound)
    extra = [(2, 2, 1, 1, 2, 3), (1, 3, 2, 1, 2, 2), (2, 3, 2, 1, 2, 2), (3, 2, 2, 2, 1, 2), (2, 2, 3, 1, 1, 2)]
    for point in extra:
        count, bound = count_distinct_products(*point)
        assert count <= bound
    assert time.perf_counter() - start < 30


def oracle_instances():
    out = []
    for q in (2, 3):
        for K in range(1, 5):
            for L in range(1, 4):
                for M in range(1, K + 1):
                    for d in range(1, L + 1):
                        inst = ProblemInstance(K, L, M, d, Field.prime(q))
                        if rate_formula(inst) <= 5:
                            out.append(inst)
    return out


@pytest.mark.criterion(6)
def test_oracle_sandwich():
    start = time.perf_counter()
    F2 = Field.prime(2)
    pinned = ProblemInstance(2, 2, 1, 1, F2)
    eye = DemandMatrix(Matrix.identity(F2, 2))
    assert min_rate_bruteforce(pinned, eye, 5).min_R == 2
    assert lower_bound_fq(pinned) <= 2 <= sandwich_check(pinned, eye).scheme_R

    # lb_finite_q bounds the worst case over D, so it is checked against the
    # exhaustive maximum of min_R; each random D gets the per-matrix bracket
    rng = random.Random(6)
    instances = oracle_instances()
    worst_checked = 0
    for inst in instances:
        demand = random_demand(inst, rng, full_rank=True)
        rep = sandwich_check(inst, demand)
        assert rep.min_R is not None
        assert rank(demand.matrix) <= rep.min_R <= rep.scheme_R, (inst, rep)
        if inst.L <= inst.K and inst.field.q ** (inst.L * inst.K) <= 4096:
            wc = worst_case_sandwich(inst)
            assert wc.min_R is not None
            assert lower_bound_fq(inst) <= wc.min_R + BOUND_TOL and wc.min_R <= wc.scheme_R, (inst, wc)
            worst_checked += 1
    assert worst_checked >= 20
    assert time.perf_counter() - start < 300


@pytest.mark.criterion(7)
def test_property_suites(capsys):
    rng = random.Random(7)
    for field in (F13, Q):
        standard = 0
        while standard < 500:
            K, L = rng.randint(2, 8), rng.randint(1, 6)
            inst = ProblemInstance(K, L, rng.randint(1, K), rng.randint(1, L), field)
            demand = random_demand(inst, rng)
            plan = build_plan(inst, demand)
            for b in plan.blocks:
                if b.repair is None:
                    continue
                assert b.repair.row_map @ b.repair.surrogate == demand.matrix.select(b.users, b.columns)
                if b.kind != "standard":
                    continue
                standard += 1
                assert rank(b.V) == inst.delta
                local = [k - b.columns.start for k in b.pivots]
                for dd, row in enumerate(b.coefficient_rows):
                    support = {b.columns[k] for k, x in enumerate(row) if x}
                    assert support <= set(b.tasks[dd]) and row[local[dd]] != 0

            factors = {(*b.group, dd): field(rng.randint(1, 12))
                       for b in plan.blocks if b.kind == "standard" for dd in range(b.size)}
            scaled = rescale_nullspace(plan, factors)
            f = [field(rng.randint(-30, 30)) for _ in range(K)]
            x, y = matvec(plan.A, f), matvec(scaled.A, f)
            assert [decode_user(plan, u, x) for u in range(L)] == [decode_user(scaled, u, y) for u in range(L)]

    argv = ["simulate", "--k", "8", "--l", "6", "--m", "2", "--delta", "4", "--field", "rational",
            "--random", "--seed", "11"]
    reports = []
    for _ in range(2):
        assert main(argv) == 0
        reports.append(capsys.readouterr().out)
    assert reports[0] == reports[1]
    assert json.loads(reports[0])["simulation"]["passed"]
