"""The two quadratic ODE systems and their zero-energy constraint.

Warped products over r Einstein factors of dimensions d_1..d_r use the
state ``(x_1..x_{r+1}, u_1..u_{r+1})``::

    x_i' = -2 x_i u_i              u_i' = -u_i u_{r+1} + x_i / d_i
    x_{r+1}' = x_{r+1} u_{r+1}     u_{r+1}' = -sum_k d_k u_k^2

with constraint ``G = sum_k d_k u_k^2 - u_{r+1}^2 + sum_k x_k + 1``.

The circle-bundle (Berard Bergery) system over a base of real dimension d2
uses ``(x_1, x_2, x_3, v_1, v_2, v_3)``::

    x_1' = -2 x_1 v_1              v_1' = -v_1 v_3 + (x_1 + 2 x_2) / d2
    x_2' = -2 x_2 (2 v_1 + v_2)    v_2' = -v_2 v_3 + x_2
    x_3' = x_3 v_3                 v_3' = -d2 v_1^2 - v_2^2

with ``G = d2 v_1^2 + v_2^2 - v_3^2 + x_1 + x_2 + 1``.  In both cases the
soliton condition H = 0 is equivalent to G = 0, and G is a first integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rational import DimensionError, format_rational, to_rational


class InvalidDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def factors(self) -> list[int]:
        """Variable indices with repetition, e.g. x0*x0 -> [0, 0]."""
        out = []
        for k, e in enumerate(self.exponents):
            out.extend([k] * e)
        return out

    def evaluate(self, state):
        value = self.coeff
        for k, e in enumerate(self.exponents):
            if e:
                value = value * state[k] ** e
        return value


@dataclass(frozen=True)
class QuadraticSystem:
    kind: str
    dims: tuple[int, ...]
    names: tuple[str, ...]
    rhs: tuple[tuple[Term, ...], ...]
    constraint: tuple[Term, ...]

    def __post_init__(self):
        for terms in self.rhs + (self.constraint,):
            for t in terms:
                if t.degree > 2 or len(t.exponents) != self.n_vars:
                    raise ValueError(f"bad monomial {t}")

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def r(self) -> int:
        """Number of factors (warped) or 2 for the bundle system."""
        return (self.n_vars - 2) // 2

    def index(self, name: str) -> int:
        return self.names.index(name)

    def eval_rhs(self, state: Sequence) -> list:
        if len(state) != self.n_vars:
            raise DimensionError(f"state of length {len(state)}, expected {self.n_vars}")
        return [sum((t.evaluate(state) for t in terms), 0 * state[0]) for terms in self.rhs]

    def eval_constraint(self, state: Sequence):
        if len(state) != self.n_vars:
            raise DimensionError(f"state of length {len(state)}, expected {self.n_vars}")
        return sum((t.evaluate(state) for t in self.constraint), 0 * state[0])

    def constraint_gradient(self, state: Sequence) -> list:
        """Exact gradient of G at ``state``."""
        grad = [0 * state[0]] * self.n_vars
        for t in self.constraint:
            for k, e in enumerate(t.exponents):
                if e:
                    exps = list(t.exponents)
                    exps[k] -= 1
                    grad[k] = grad[k] + e * Term(t.coeff, tuple(exps)).evaluate(state)
        return grad

    def to_json(self) -> dict:
        def mono(t: Term):
            return {"coeff": format_rational(t.coeff), "exponents": list(t.exponents)}

        return {
            "kind": self.kind,
            "dims": list(self.dims),
            "variables": list(self.names),
            "rhs": [[mono(t) for t in terms] for terms in self.rhs],
            "constraint": [mono(t) for t in self.constraint],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadraticSystem":
        def mono(m):
            return Term(to_rational(m["coeff"]), tuple(m["exponents"]))

        return cls(data["kind"], tuple(data["dims"]), tuple(data["variables"]),
                   tuple(tuple(mono(m) for m in terms) for terms in data["rhs"]),
                   tuple(mono(m) for m in data["constraint"]))


class _Builder:
    def __init__(self, names):
        self.names = list(names)
        self.n = len(self.names)

    def term(self, coeff, *vars_) -> Term:
        exps = [0] * self.n
        for v in vars_:
            exps[self.names.index(v)] += 1
        return Term(to_rational(coeff), tuple(exps))


def check_warped_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise InvalidDimensionError("need at least one factor")
    if any(d < 2 for d in dims):
        raise InvalidDimensionError(f"factor dimensions must be >= 2, got {dims}")
    return dims


def check_bb_dim(d2: int) -> int:
    d2 = int(d2)
    if d2 < 2 or d2 % 2:
        raise InvalidDimensionError(f"base dimension must be even and >= 2, got {d2}")
    return d2


def warped_names(r: int) -> list[str]:
    return [f"x{i}" for i in range(1, r + 2)] + [f"u{i}" for i in range(1, r + 2)]


def build_warped_system(dims: Sequence[int]) -> QuadraticSystem:
    dims = check_warped_dims(dims)
    r = len(dims)
    names = warped_names(r)
    b = _Builder(names)
    X = names[:r + 1]
    U = names[r + 1:]
    rhs_x = [(b.term(-2, X[i], U[i]),) for i in range(r)]
    rhs_x.append((b.term(1, X[r], U[r]),))
    rhs_u = [(b.term(-1, U[i], U[r]), b.term(Fraction(1, dims[i]), X[i])) for i in range(r)]
    rhs_u.append(tuple(b.term(-dims[k], U[k], U[k]) for k in range(r)))
    constraint = tuple(
        [b.term(dims[k], U[k], U[k]) for k in range(r)]
        + [b.term(-1, U[r], U[r])]
        + [b.term(1, X[k]) for k in range(r)]
        + [b.term(1)]
    )
    return QuadraticSystem("warped", dims, tuple(names), tuple(rhs_x + rhs_u), constraint)


def build_bb_system(d2: int) -> QuadraticSystem:
    d2 = check_bb_dim(d2)
    names = ["x1", "x2", "x3", "v1", "v2", "v3"]
    b = _Builder(names)
    inv = Fraction(1, d2)
    rhs = (
        (b.term(-2, "x1", "v1"),),
        (b.term(-4, "x2", "v1"), b.term(-2, "x2", "v2")),
        (b.term(1, "x3", "v3"),),
        (b.term(-1, "v1", "v3"), b.term(inv, "x1"), b.term(2 * inv, "x2")),
        (b.term(-1, "v2", "v3"), b.term(1, "x2")),
        (b.term(-d2, "v1", "v1"), b.term(-1, "v2", "v2")),
    )
    constraint = (
        b.term(d2, "v1", "v1"), b.term(1, "v2", "v2"), b.term(-1, "v3", "v3"),
        b.term(1, "x1"), b.term(1, "x2"), b.term(1),
    )
    return QuadraticSystem("bb", (d2,), tuple(names), rhs, constraint)


def build_system(kind: str, dims: Sequence[int]) -> QuadraticSystem:
    if kind == "warped":
        return build_warped_system(dims)
    if kind == "bb":
        (d2,) = dims
        return build_bb_system(d2)
    raise ValueError(f"unknown system kind {kind!r}")


def eval_rhs(sys: QuadraticSystem, state: Sequence) -> list:
    return sys.eval_rhs(state)


def eval_constraint(sys: QuadraticSystem, state: Sequence):
    return sys.eval_constraint(state)
