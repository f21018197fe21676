"""Exact linear algebra over the rationals.

Scalars are :class:`fractions.Fraction`.  Matrices are small and dense, so
everything here is plain Gaussian elimination with first-nonzero pivoting;
no magnitude pivoting, since over Q every nonzero pivot is as good as any
other and picking the first keeps results deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Callable, Iterable, Sequence

Rational = Fraction


class DimensionError(ValueError):
    pass


def to_rational(value) -> Fraction:
    """Parse ``value`` into a Fraction.

    Accepts ints, Fractions and strings of the form ``"p"`` or ``"p/q"``.
    Floats are rejected on purpose: silently rounding a float into an exact
    computation is how resonances stop being exact zeros.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def rational_gcd(values: Iterable[Fraction]) -> Fraction:
    """Largest positive rational g with every value an integer multiple of g."""
    vals = [Fraction(v) for v in values if v != 0]
    if not vals:
        raise ValueError("gcd of an all-zero list is undefined")
    den = 1
    for v in vals:
        den = den * v.denominator // gcd(den, v.denominator)
    g = 0
    for v in vals:
        g = gcd(g, abs(v.numerator * (den // v.denominator)))
    return Fraction(g, den)


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    q = Fraction(q)
    if q < 0:
        return None
    n, d = isqrt(q.numerator), isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


@dataclass(frozen=True)
class QMatrix:
    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "QMatrix":
        rows = [list(r) for r in rows]
        n = len(rows)
        m = len(rows[0]) if n else 0
        if any(len(r) != m for r in rows):
            raise DimensionError("ragged rows")
        return cls(n, m, tuple(to_rational(x) for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, n: int, m: int) -> "QMatrix":
        return cls(n, m, (Fraction(0),) * (n * m))

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list[Fraction]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list[list[Fraction]]:
        return [self.row(i) for i in range(self.rows)]

    def transpose(self) -> "QMatrix":
        return QMatrix.from_rows([[self[i, j] for i in range(self.rows)]
                                  for j in range(self.cols)])

    def matvec(self, v: Sequence[Fraction]) -> list[Fraction]:
        if len(v) != self.cols:
            raise DimensionError(f"vector of length {len(v)} for {self.cols} columns")
        return [sum((a * x for a, x in zip(self.row(i), v)), Fraction(0))
                for i in range(self.rows)]

    def to_json(self) -> list[list[str]]:
        return [[format_rational(x) for x in r] for r in self.to_rows()]

    @classmethod
    def from_json(cls, data) -> "QMatrix":
        return cls.from_rows(data)


@dataclass(frozen=True)
class AffineSolutionSet:
    particular: tuple[Fraction, ...] | None
    kernel_basis: tuple[tuple[Fraction, ...], ...]

    @property
    def feasible(self) -> bool:
        return self.particular is not None


def rref(M: QMatrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = M.to_rows()
    pivots: list[int] = []
    r = 0
    for c in range(M.cols):
        if r == M.rows:
            break
        p = next((k for k in range(r, M.rows) if A[k][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for k in range(M.rows):
            if k != r and A[k][c] != 0:
                f = A[k][c]
                A[k] = [x - f * y for x, y in zip(A[k], A[r])]
        pivots.append(c)
        r += 1
    return A, pivots


def det(M: QMatrix) -> Fraction:
    if M.rows != M.cols:
        raise DimensionError(f"determinant of a non-square {M.rows}x{M.cols} matrix")
    A = M.to_rows()
    n = M.rows
    result = Fraction(1)
    for c in range(n):
        p = next((k for k in range(c, n) if A[k][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            result = -result
        piv = A[c][c]
        result *= piv
        for k in range(c + 1, n):
            if A[k][c] != 0:
                f = A[k][c] / piv
                A[k] = [x - f * y for x, y in zip(A[k], A[c])]
    return result


def rank(M: QMatrix) -> int:
    return len(rref(M)[1])


def kernel(M: QMatrix) -> list[tuple[Fraction, ...]]:
    """Basis of the right null space, one vector per free column.

    Each basis vector has a 1 in its free column and zeros in the other free
    columns, which makes the basis canonical for a given matrix.
    """
    R, pivots = rref(M)
    free = [c for c in range(M.cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * M.cols
        v[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -R[row][f]
        basis.append(tuple(v))
    return basis


def solve_affine(M: QMatrix, b: Sequence) -> AffineSolutionSet:
    b = [to_rational(x) for x in b]
    if len(b) != M.rows:
        raise DimensionError(f"right-hand side of length {len(b)} for {M.rows} rows")
    aug = QMatrix.from_rows([r + [x] for r, x in zip(M.to_rows(), b)])
    R, pivots = rref(aug)
    basis = tuple(kernel(M))
    if M.cols in pivots:
        return AffineSolutionSet(None, basis)
    x = [Fraction(0)] * M.cols
    for row, pc in enumerate(pivots):
        x[pc] = R[row][M.cols]
    return AffineSolutionSet(tuple(x), basis)


class QPolynomial:
    """Univariate polynomial with Fraction coefficients, lowest degree first."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Iterable = ()):
        cs = [to_rational(c) for c in coefficients]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coefficients: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def from_roots(cls, roots: Iterable, lead=1) -> "QPolynomial":
        p = cls([lead])
        for r in roots:
            p = p * cls([-to_rational(r), 1])
        return p

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, QPolynomial):
            return self.coefficients == other.coefficients
        return NotImplemented

    def __hash__(self):
        return hash(self.coefficients)

    def __add__(self, other: "QPolynomial") -> "QPolynomial":
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (Fraction(0),) * (n - len(self.coefficients))
        b = other.coefficients + (Fraction(0),) * (n - len(other.coefficients))
        return QPolynomial(x + y for x, y in zip(a, b))

    def __neg__(self) -> "QPolynomial":
        return QPolynomial(-c for c in self.coefficients)

    def __sub__(self, other: "QPolynomial") -> "QPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "QPolynomial":
        if not isinstance(other, QPolynomial):
            return QPolynomial(c * to_rational(other) for c in self.coefficients)
        if self.is_zero() or other.is_zero():
            return QPolynomial()
        out = [Fraction(0)] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return QPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QPolynomial":
        out = QPolynomial([1])
        for _ in range(n):
            out = out * self
        return out

    def divide_linear(self, root: Fraction) -> tuple["QPolynomial", Fraction]:
        """Synthetic division by (x - root): quotient and remainder."""
        out = []
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * root + c
            out.append(acc)
        remainder = out.pop() if out else Fraction(0)
        return QPolynomial(reversed(out)), remainder

    def rational_roots(self) -> tuple[list[tuple[Fraction, int]], "QPolynomial"]:
        """Rational roots with multiplicities, plus the cofactor with none left.

        Candidates come from the rational root theorem applied to the
        integer polynomial obtained by clearing denominators.
        """
        if self.is_zero():
            raise ValueError("the zero polynomial has every number as a root")
        roots: list[tuple[Fraction, int]] = []
        rest = self
        mult = 0
        while rest.degree > 0 and rest.coefficients[0] == 0:
            rest = QPolynomial(rest.coefficients[1:])
            mult += 1
        if mult:
            roots.append((Fraction(0), mult))
        if rest.degree > 0:
            den = 1
            for c in rest.coefficients:
                den = den * c.denominator // gcd(den, c.denominator)
            ints = [int(c * den) for c in rest.coefficients]
            candidates = set()
            for p in _divisors(abs(ints[0])):
                for q in _divisors(abs(ints[-1])):
                    candidates.add(Fraction(p, q))
                    candidates.add(Fraction(-p, q))
            for cand in sorted(candidates):
                m = 0
                while rest.degree > 0:
                    quo, rem = rest.divide_linear(cand)
                    if rem != 0:
                        break
                    rest, m = quo, m + 1
                if m:
                    roots.append((cand, m))
        roots.sort()
        return roots, rest

    def __repr__(self) -> str:
        return f"QPolynomial({[format_rational(c) for c in self.coefficients]})"

    def __str__(self) -> str:
        return self.format("x")

    def format(self, var: str = "x") -> str:
        if self.is_zero():
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            c = self.coefficients[k]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if k == 0:
                body = format_rational(mag)
            else:
                mono = var if k == 1 else f"{var}^{k}"
                body = mono if mag == 1 else f"{format_rational(mag)}*{mono}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


def _divisors(n: int) -> list[int]:
    if n == 0:
        return [1]
    small, large = [], []
    k = 1
    while k * k <= n:
        if n % k == 0:
            small.append(k)
            if k * k != n:
                large.append(n // k)
        k += 1
    return small + large[::-1]


def interpolate(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> QPolynomial:
    """Lagrange interpolation through the points (xs[k], ys[k])."""
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation nodes must be distinct")
    result = QPolynomial()
    for k, (xk, yk) in enumerate(zip(xs, ys)):
        if yk == 0:
            continue
        basis = QPolynomial([1])
        denom = Fraction(1)
        for m, xm in enumerate(xs):
            if m != k:
                basis = basis * QPolynomial([-xm, 1])
                denom *= xk - xm
        result = result + basis * (yk / denom)
    return result


def det_poly(matrix_family: Callable[[Fraction], QMatrix], degree_bound: int,
             nodes: Sequence[Fraction] | None = None) -> QPolynomial:
    """Recover det F(s) as an exact polynomial in s.

    ``matrix_family`` must have entries affine in s, so the determinant has
    degree at most the matrix size.  It is sampled at ``degree_bound + 1``
    distinct nodes and interpolated.
    """
    if nodes is None:
        nodes = [Fraction(k) for k in range(degree_bound + 1)]
    nodes = [to_rational(x) for x in nodes]
    size = matrix_family(nodes[0]).rows
    if degree_bound < size or len(nodes) < degree_bound + 1:
        raise ValueError(
            f"need at least {size + 1} evaluation points for a {size}x{size} family, "
            f"got degree_bound={degree_bound} and {len(nodes)} nodes"
        )
    return interpolate(nodes, [det(matrix_family(x)) for x in nodes])
