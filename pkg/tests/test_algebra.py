import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linsep.algebra import (
    DimensionMismatch,
    Field,
    FieldMismatch,
    Matrix,
    NullspaceDimension,
    SingularMatrix,
    invert,
    is_scalar_multiple,
    left_nullspace_vector,
    matmul,
    rank,
    rref,
    solve_right,
    sparsity,
    vecmat,
)
from linsep.reference import REFERENCE_ROWS

F11 = Field.prime(11)
F13 = Field.prime(13)
Q = Field.rational()

D11_Q = Matrix(Q, [r[:5] for r in REFERENCE_ROWS[:3]])
D11_F = Matrix(F11, [r[:5] for r in REFERENCE_ROWS[:3]])


def schoolbook(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return [[sum(a[i][k] * b[k][j] for k in range(m)) for j in range(p)] for i in range(n)]


def random_matrix(field, rng, n, m):
    if field.is_prime:
        return Matrix(field, [[rng.randrange(field.q) for _ in range(m)] for _ in range(n)])
    return Matrix(field, [[Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(m)] for _ in range(n)])


class TestField:
    def test_rejects_composite(self):
        with pytest.raises(ValueError):
            Field.prime(12)

    def test_parse(self):
        assert Field.parse("prime:11") == F11
        assert Field.parse("rational") == Q
        with pytest.raises(ValueError):
            Field.parse("gf:4")

    def test_canonical_forms(self):
        assert F11(-5) == 6
        assert F11(Fraction(1, 2)) == 6
        assert Q("6/4") == Fraction(3, 2)
        assert Q(Fraction(-2, -4)).denominator == 2

    @pytest.mark.parametrize("field", [Field.prime(2), Field.prime(11), F13, Q])
    def test_inverse_and_negation_randomized(self, field):
        rng = random.Random(17)
        for _ in range(10_000):
            if field.is_prime:
                a = rng.randrange(field.q)
            else:
                a = Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 10**6))
            assert field.add(a, field.neg(a)) == 0
            if a != 0:
                assert field.mul(a, field.inv(a)) == 1
            if field.is_prime:
                assert 0 <= field.add(a, a) < field.q

    def test_inverse_of_zero(self):
        with pytest.raises(ZeroDivisionError):
            F11.inv(0)


class TestMatmul:
    def test_identity(self):
        m = Matrix(Q, [[1, 2, 3], [4, 5, 6], [7, 8, 10]])
        assert Matrix.identity(Q, 3) @ m == m

    def test_reference_v_times_inverse(self):
        V = Matrix(F11, [[6, -5, 1], [3, -4, 1], [2, -3, 1]])
        assert V.data == ((6, 6, 1), (3, 7, 1), (2, 8, 1))
        assert V @ invert(V) == Matrix.identity(F11, 3)

    def test_against_schoolbook(self):
        rng = random.Random(3)
        for _ in range(20):
            a = random_matrix(Q, rng, 3, 4)
            b = random_matrix(Q, rng, 4, 2)
            assert (a @ b).data == tuple(map(tuple, schoolbook(a.data, b.data)))

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            Matrix(Q, [[1, 2]]) @ Matrix(Q, [[1, 2]])
        with pytest.raises(FieldMismatch):
            Matrix(Q, [[1]]) @ Matrix(F11, [[1]])

    def test_empty_inner_dimension(self):
        assert matmul(Matrix.zeros(Q, 2, 0), Matrix.zeros(Q, 0, 3)) == Matrix.zeros(Q, 2, 3)


class TestRref:
    def test_zero_matrix(self):
        E, piv, T = rref(Matrix.zeros(F11, 3, 4))
        assert E == Matrix.zeros(F11, 3, 4)
        assert piv == []
        assert T == Matrix.identity(F11, 3)

    def test_reference_block_pivots(self):
        _, piv, _ = rref(D11_F)
        assert piv == [0, 1, 2]

    def test_proportional_rows(self):
        _, piv, _ = rref(Matrix(Q, [[1, 2], [2, 4]]))
        assert piv == [0]

    @pytest.mark.parametrize("field", [F13, Q])
    def test_transform_and_idempotence(self, field):
        rng = random.Random(5)
        for _ in range(50):
            m = random_matrix(field, rng, rng.randint(1, 5), rng.randint(1, 6))
            E, piv, T = rref(m)
            assert T @ m == E
            assert rank(T) == T.nrows
            E2, piv2, _ = rref(E)
            assert (E2, piv2) == (E, piv)


class TestRank:
    def test_identity(self):
        assert rank(Matrix.identity(F11, 4)) == 4

    def test_two_columns(self):
        # independent check: some 2x2 minor is nonzero
        m = [[1, 1], [2, 3], [4, 9]]
        minors = [m[i][0] * m[j][1] - m[i][1] * m[j][0] for i, j in itertools.combinations(range(3), 2)]
        assert any(minors)
        assert rank(Matrix(Q, m)) == 2

    def test_full_reference_matrix(self):
        # a nonzero 6x6 minor on columns 0..5 was found by brute-force determinant
        assert rank(Matrix(F11, REFERENCE_ROWS)) == 6


class TestInvert:
    def test_identity(self):
        assert invert(Matrix.identity(Q, 4)) == Matrix.identity(Q, 4)

    def test_reference_decode_row(self):
        V = Matrix(F11, [[6, -5, 1], [3, -4, 1], [2, -3, 1]])
        # 1/2 (x1 - 2 x2 + x3): 1/2 = 6, -2 = 9 in F_11
        assert invert(V).row(0) == (6, 10, 6)
        assert tuple(F11.mul(6, c) for c in (1, 9, 1)) == (6, 10, 6)

    def test_involution(self):
        rng = random.Random(9)
        done = 0
        while done < 10:
            m = random_matrix(Q, rng, 4, 4)
            if rank(m) < 4:
                continue
            assert invert(invert(m)) == m
            assert m @ invert(m) == invert(m) @ m == Matrix.identity(Q, 4)
            done += 1

    def test_singular(self):
        with pytest.raises(SingularMatrix) as info:
            invert(Matrix(Q, [[1, 2], [2, 4]]))
        assert info.value.rank == 1


class TestLeftNullspace:
    def test_reference_first_server(self):
        nu = left_nullspace_vector(Matrix(Q, [[1, 1], [2, 3], [4, 9]]))
        assert is_scalar_multiple(Q, nu, [6, -5, 1])
        assert nu == (6, -5, 1)  # last-entry normalization

    def test_unit(self):
        nu = left_nullspace_vector(Matrix(Q, [[1], [0]]))
        assert is_scalar_multiple(Q, nu, [0, 1])

    def test_reference_second_server(self):
        nu = left_nullspace_vector(D11_Q.select(cols=[0, 2]))
        assert is_scalar_multiple(Q, nu, [3, -4, 1])

    def test_no_columns(self):
        assert left_nullspace_vector(Matrix.zeros(F11, 1, 0)) == (1,)

    def test_wrong_dimension(self):
        with pytest.raises(NullspaceDimension):
            left_nullspace_vector(Matrix(Q, [[1, 0], [0, 1], [0, 0], [0, 0]]))

    @pytest.mark.parametrize("field", [F13, Q])
    def test_annihilates_and_unique_up_to_scale(self, field):
        rng = random.Random(11)
        done = 0
        while done < 100:
            r = rng.randint(1, 5)
            m = random_matrix(field, rng, r, r - 1)
            if rank(m) != r - 1:
                continue
            nu = left_nullspace_vector(m)
            assert any(nu)
            assert all(x == 0 for x in vecmat(field, nu, m))
            # shuffling columns does not change the nullspace
            perm = list(range(m.ncols))
            rng.shuffle(perm)
            assert is_scalar_multiple(field, left_nullspace_vector(m.select(cols=perm)), nu)
            done += 1


class TestSolveRight:
    def test_identity(self):
        assert solve_right(Matrix.identity(Q, 3), [1, 2, 3]) == (1, 2, 3)

    def test_inconsistent(self):
        assert solve_right(Matrix(Q, [[1, 0, 0], [0, 1, 0]]), [0, 0, 1]) is None

    def test_dependent_row_recovered(self):
        a = Matrix(Q, [[1, 1], [2, 2], [0, 1]])
        b = [3, 5]
        x = solve_right(a, b)
        assert vecmat(Q, x, a) == (3, 5)

    def test_empty_basis(self):
        assert solve_right(Matrix.zeros(Q, 0, 2), [0, 0]) == ()
        assert solve_right(Matrix.zeros(Q, 0, 2), [0, 1]) is None


class TestSparsity:
    def test_values(self):
        assert sparsity([0, 0, 0]) == 0
        assert sparsity([1] * 7) == 7

    def test_reference_transmission(self):
        row = vecmat(Q, (Q(6), Q(-5), Q(1)), D11_Q)
        assert row == (2, 0, 0, -9, -16)
        assert sparsity(row) == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.integers(-20, 20), min_size=3, max_size=3), min_size=1, max_size=4),
       st.sampled_from([Field.prime(2), Field.prime(7), Q]))
def test_operations_are_deterministic(rows, field):
    m = Matrix(field, rows)
    assert rref(m) == rref(Matrix(field, rows))
    assert rank(m) <= min(m.shape)
