"""Exact linear algebra over prime fields and the rationals.

Scalars are plain Python values in canonical form: ``int`` residues in
``[0, q)`` for a prime field, ``fractions.Fraction`` for the rationals.
A :class:`Field` owns the arithmetic and a :class:`Matrix` is an immutable
grid of canonical scalars tagged with its field.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class FieldMismatch(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class SingularMatrix(ArithmeticError):
    def __init__(self, rank: int, size: int):
        super().__init__(f"matrix is singular: rank {rank} < {size}")
        self.rank = rank
        self.size = size


class NullspaceDimension(ArithmeticError):
    def __init__(self, dim: int):
        super().__init__(f"left nullspace has dimension {dim}, expected 1")
        self.dim = dim


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class Field:
    """A prime field ``F_q`` (``q`` set) or the rationals (``q is None``)."""

    q: int | None = None

    def __post_init__(self):
        if self.q is not None and not is_prime(self.q):
            raise ValueError(f"field size {self.q} is not prime")

    @classmethod
    def prime(cls, q: int) -> Field:
        return cls(q)

    @classmethod
    def rational(cls) -> Field:
        return cls(None)

    @classmethod
    def parse(cls, text: str) -> Field:
        """Parse ``"prime:<q>"`` or ``"rational"``."""
        text = text.strip().lower()
        if text in ("rational", "q"):
            return cls.rational()
        if text.startswith("prime:"):
            return cls.prime(int(text[len("prime:"):]))
        raise ValueError(f"unknown field descriptor {text!r}")

    @property
    def is_prime(self) -> bool:
        return self.q is not None

    @property
    def kind(self) -> str:
        return "prime" if self.is_prime else "rational"

    def __str__(self) -> str:
        return f"prime:{self.q}" if self.is_prime else "rational"

    def to_json(self) -> dict:
        if self.is_prime:
            return {"kind": "prime", "q": self.q}
        return {"kind": "rational"}

    @classmethod
    def from_json(cls, obj: dict) -> Field:
        if obj.get("kind") == "prime":
            return cls.prime(int(obj["q"]))
        if obj.get("kind") == "rational":
            return cls.rational()
        raise ValueError(f"bad field descriptor {obj!r}")

    # scalar arithmetic -------------------------------------------------

    @property
    def zero(self):
        return 0 if self.is_prime else Fraction(0)

    @property
    def one(self):
        return 1 if self.is_prime else Fraction(1)

    def __call__(self, x):
        """Coerce an int, Fraction or ``"num/den"`` string to canonical form."""
        if isinstance(x, str):
            x = Fraction(x.strip())
        if self.is_prime:
            if isinstance(x, Fraction):
                return (x.numerator * pow(x.denominator, -1, self.q)) % self.q
            if isinstance(x, bool) or not isinstance(x, int):
                raise TypeError(f"cannot coerce {x!r} into {self}")
            return x % self.q
        if isinstance(x, float):
            raise TypeError("floats are not exact; pass a Fraction or a string")
        return Fraction(x)

    def add(self, a, b):
        return (a + b) % self.q if self.is_prime else a + b

    def sub(self, a, b):
        return (a - b) % self.q if self.is_prime else a - b

    def mul(self, a, b):
        return (a * b) % self.q if self.is_prime else a * b

    def neg(self, a):
        return (-a) % self.q if self.is_prime else -a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.q) if self.is_prime else 1 / a

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def dot(self, u: Sequence, v: Sequence):
        s = sum(x * y for x, y in zip(u, v))
        return s % self.q if self.is_prime else Fraction(s)

    def format(self, a) -> int | str:
        """JSON-friendly form: ints stay ints, non-integral fractions become strings."""
        if self.is_prime or a.denominator == 1:
            return int(a)
        return f"{a.numerator}/{a.denominator}"


class Matrix:
    """Immutable dense matrix of canonical field scalars."""

    __slots__ = ("field", "nrows", "ncols", "data")

    def __init__(self, field: Field, rows: Iterable[Iterable], ncols: int | None = None):
        data = tuple(tuple(field(x) for x in row) for row in rows)
        if ncols is None:
            ncols = len(data[0]) if data else 0
        if any(len(r) != ncols for r in data):
            raise DimensionMismatch("ragged rows")
        self.field = field
        self.nrows = len(data)
        self.ncols = ncols
        self.data = data

    @classmethod
    def _raw(cls, field: Field, data: tuple, ncols: int) -> Matrix:
        # trusted constructor: entries already canonical
        m = object.__new__(cls)
        m.field, m.nrows, m.ncols, m.data = field, len(data), ncols, data
        return m

    @classmethod
    def identity(cls, field: Field, n: int) -> Matrix:
        z, o = field.zero, field.one
        return cls._raw(field, tuple(tuple(o if i == j else z for j in range(n)) for i in range(n)), n)

    @classmethod
    def zeros(cls, field: Field, nrows: int, ncols: int) -> Matrix:
        return cls._raw(field, tuple((field.zero,) * ncols for _ in range(nrows)), ncols)

    @classmethod
    def row_vector(cls, field: Field, values: Iterable) -> Matrix:
        values = tuple(field(x) for x in values)
        return cls._raw(field, (values,), len(values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def row(self, i: int) -> tuple:
        return self.data[i]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self.data)

    @property
    def T(self) -> Matrix:
        data = tuple(zip(*self.data)) if self.nrows else tuple(() for _ in range(self.ncols))
        return Matrix._raw(self.field, data, self.nrows)

    def select(self, rows: Sequence[int] | None = None, cols: Sequence[int] | None = None) -> Matrix:
        rows = range(self.nrows) if rows is None else rows
        cols = range(self.ncols) if cols is None else cols
        data = tuple(tuple(self.data[i][j] for j in cols) for i in rows)
        return Matrix._raw(self.field, data, len(cols))

    def drop_cols(self, cols: Iterable[int]) -> Matrix:
        dropped = set(cols)
        return self.select(cols=[j for j in range(self.ncols) if j not in dropped])

    def vstack(self, other: Matrix) -> Matrix:
        _check_field(self, other)
        if self.ncols != other.ncols:
            raise DimensionMismatch(f"cannot stack {self.shape} on {other.shape}")
        return Matrix._raw(self.field, self.data + other.data, self.ncols)

    def hstack(self, other: Matrix) -> Matrix:
        _check_field(self, other)
        if self.nrows != other.nrows:
            raise DimensionMismatch(f"cannot join {self.shape} and {other.shape}")
        data = tuple(a + b for a, b in zip(self.data, other.data))
        return Matrix._raw(self.field, data, self.ncols + other.ncols)

    def scale_row(self, i: int, c) -> Matrix:
        f = self.field
        data = list(self.data)
        data[i] = tuple(f.mul(c, x) for x in data[i])
        return Matrix._raw(f, tuple(data), self.ncols)

    def __matmul__(self, other: Matrix) -> Matrix:
        return matmul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and self.data == other.data

    def __hash__(self) -> int:
        return hash((self.field, self.shape, self.data))

    def __repr__(self) -> str:
        rows = [[self.field.format(x) for x in r] for r in self.data]
        return f"Matrix({self.field}, {rows})"

    def to_json(self) -> list[list]:
        return [[self.field.format(x) for x in r] for r in self.data]


def _check_field(a: Matrix, b: Matrix) -> None:
    if a.field != b.field:
        raise FieldMismatch(f"{a.field} vs {b.field}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    _check_field(a, b)
    if a.ncols != b.nrows:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    f = a.field
    cols = b.T.data
    data = tuple(tuple(f.dot(r, c) for c in cols) for r in a.data)
    return Matrix._raw(f, data, b.ncols)


def vecmat(field: Field, v: Sequence, m: Matrix) -> tuple:
    """Row vector times matrix, returned as a tuple."""
    if len(v) != m.nrows:
        raise DimensionMismatch(f"vector of length {len(v)} against {m.shape}")
    return tuple(field.dot(v, m.col(j)) for j in range(m.ncols))


def matvec(m: Matrix, v: Sequence) -> tuple:
    if len(v) != m.ncols:
        raise DimensionMismatch(f"{m.shape} against vector of length {len(v)}")
    return tuple(m.field.dot(r, v) for r in m.data)


def _eliminate(field: Field, rows: list[list], ncols: int) -> list[int]:
    """In-place Gauss-Jordan on ``rows``; pivots searched in the first ``ncols`` columns.

    Leftmost column first, topmost nonzero row as pivot.
    """
    pivots = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r]
        inv = field.inv(piv[c])
        if inv != 1:
            piv = rows[r] = [field.mul(inv, x) for x in piv]
        for i in range(nrows):
            if i != r:
                t = rows[i][c]
                if t != 0:
                    rows[i] = [field.sub(x, field.mul(t, y)) for x, y in zip(rows[i], piv)]
        pivots.append(c)
        r += 1
    return pivots


def rref(m: Matrix) -> tuple[Matrix, list[int], Matrix]:
    """Reduced row-echelon form.

    Returns ``(E, pivots, T)`` with ``T @ m == E`` and ``T`` invertible.
    Pivot columns are 0-based and increasing.
    """
    f = m.field
    n = m.nrows
    eye = Matrix.identity(f, n).data
    rows = [list(r) + list(e) for r, e in zip(m.data, eye)]
    pivots = _eliminate(f, rows, m.ncols)
    E = Matrix._raw(f, tuple(tuple(r[:m.ncols]) for r in rows), m.ncols)
    T = Matrix._raw(f, tuple(tuple(r[m.ncols:]) for r in rows), n)
    return E, pivots, T


def pivot_columns(m: Matrix) -> list[int]:
    rows = [list(r) for r in m.data]
    return _eliminate(m.field, rows, m.ncols)


def rank(m: Matrix) -> int:
    return len(pivot_columns(m))


def invert(m: Matrix) -> Matrix:
    if m.nrows != m.ncols:
        raise DimensionMismatch(f"cannot invert non-square {m.shape}")
    E, pivots, T = rref(m)
    if len(pivots) < m.nrows:
        raise SingularMatrix(len(pivots), m.nrows)
    return T


def _right_nullspace(m: Matrix) -> list[list]:
    """Basis of ``{x : m x = 0}``, one vector per free column."""
    f = m.field
    rows = [list(r) for r in m.data]
    pivots = _eliminate(f, rows, m.ncols)
    free = [c for c in range(m.ncols) if c not in set(pivots)]
    basis = []
    for fc in free:
        x = [f.zero] * m.ncols
        x[fc] = f.one
        for r, pc in enumerate(pivots):
            x[pc] = f.neg(rows[r][fc])
        basis.append(x)
    return basis


def left_nullspace_vector(m: Matrix) -> tuple:
    """Nonzero ``v`` with ``v @ m == 0``, scaled so its last nonzero entry is 1.

    Requires the left nullspace to be one-dimensional.
    """
    basis = _right_nullspace(m.T)
    if len(basis) != 1:
        raise NullspaceDimension(len(basis))
    v = basis[0]
    f = m.field
    last = next(x for x in reversed(v) if x != 0)
    inv = f.inv(last)
    return tuple(f.mul(inv, x) for x in v)


def solve_right(a: Matrix, b: Sequence) -> tuple | None:
    """One solution ``x`` of ``x @ a == b``, or ``None`` if inconsistent."""
    f = a.field
    if len(b) != a.ncols:
        raise DimensionMismatch(f"rhs of length {len(b)} against {a.shape}")
    b = [f(x) for x in b]
    # transpose system: a^T x^T = b^T
    rows = [list(col) + [bj] for col, bj in zip(a.T.data, b)]
    pivots = _eliminate(f, rows, a.nrows)
    for r in rows[len(pivots):]:
        if r[-1] != 0:
            return None
    x = [f.zero] * a.nrows
    for r, pc in enumerate(pivots):
        x[pc] = rows[r][-1]
    return tuple(x)


def in_row_space(a: Matrix, b: Sequence) -> bool:
    return solve_right(a, b) is not None


def sparsity(v: Iterable) -> int:
    """Number of nonzero entries."""
    return sum(1 for x in v if x != 0)


def is_scalar_multiple(field: Field, u: Sequence, v: Sequence) -> bool:
    """True if ``u == c * v`` for some nonzero ``c`` (both vectors nonzero)."""
    if len(u) != len(v):
        return False
    u = [field(x) for x in u]
    v = [field(x) for x in v]
    i = next((k for k, x in enumerate(v) if x != 0), None)
    if i is None or u[i] == 0:
        return False
    c = field.div(u[i], v[i])
    return all(a == field.mul(c, b) for a, b in zip(u, v))
