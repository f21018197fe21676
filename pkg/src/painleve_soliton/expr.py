"""Polynomials in named free parameters with rational coefficients.

Leading coefficients of a balance are either fixed rationals or simple
expressions in free parameters such as ``a_{2,0}/9``.  Keeping them as exact
polynomials lets a balance be checked with the parameters left symbolic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .rational import format_rational, to_rational

# a monomial is a sorted tuple of (name, power) pairs; () is the constant 1
Monomial = tuple[tuple[str, int], ...]


class UnboundParameterError(KeyError):
    pass


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    powers = dict(a)
    for name, k in b:
        powers[name] = powers.get(name, 0) + k
    return tuple(sorted(powers.items()))


class Expr:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {
            m: Fraction(c) for m, c in (terms or {}).items() if c != 0
        }

    @classmethod
    def const(cls, value) -> "Expr":
        return cls({(): to_rational(value)})

    @classmethod
    def param(cls, name: str) -> "Expr":
        return cls({((name, 1),): Fraction(1)})

    @classmethod
    def lift(cls, value) -> "Expr":
        return value if isinstance(value, Expr) else cls.const(value)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} depends on parameters")
        return self.terms.get((), Fraction(0))

    def parameters(self) -> set[str]:
        return {name for m in self.terms for name, _ in m}

    def __add__(self, other) -> "Expr":
        other = Expr.lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Expr(out)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Expr":
        return self + (-Expr.lift(other))

    def __rsub__(self, other) -> "Expr":
        return Expr.lift(other) - self

    def __mul__(self, other) -> "Expr":
        other = Expr.lift(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Expr(out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Expr":
        return self * Expr.const(1 / to_rational(other))

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def evaluate(self, bindings: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for name, k in m:
                if name not in bindings:
                    raise UnboundParameterError(name)
                term *= Fraction(bindings[name]) ** k
            total += term
        return total

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(name if k == 1 else f"{name}^{k}" for name, k in m)
            if not mono:
                pieces.append(format_rational(c))
            elif c == 1:
                pieces.append(mono)
            elif c == -1:
                pieces.append("-" + mono)
            else:
                pieces.append(f"{format_rational(c)}*{mono}")
        return " + ".join(pieces).replace("+ -", "- ")

    __repr__ = __str__

    def to_json(self):
        if self.is_constant():
            return format_rational(self.constant_value())
        return [[format_rational(c), dict(m)] for m, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, data) -> "Expr":
        if isinstance(data, (str, int)):
            return cls.const(data)
        return cls({tuple(sorted((n, int(k)) for n, k in powers.items())): to_rational(c)
                    for c, powers in data})
