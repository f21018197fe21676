"""Rational points on d_1 a_1^2 + ... + d_l a_l^2 = 4.

Points with all coordinates nonzero parametrize the leading exponents of the
non-pole-dominated warped balances.  Search is by brute force over a common
denominator; nonexistence is certified by local (mod m) obstructions.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Sequence

from .rational import format_rational, to_rational

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadricSpec:
    dims: tuple[int, ...]
    target: Fraction = Fraction(4)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "target", to_rational(self.target))
        if not self.dims:
            raise ValueError("need at least one coefficient")
        if any(d < 2 for d in self.dims):
            raise ValueError(f"coefficients must be >= 2, got {self.dims}")
        if self.target <= 0:
            raise ValueError("target must be positive")

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return sum((d * Fraction(a) ** 2 for d, a in zip(self.dims, point)), Fraction(0))

    def contains(self, point: Sequence[Fraction]) -> bool:
        return len(point) == len(self.dims) and self.value(point) == self.target


@dataclass(frozen=True)
class EllipsoidPoint:
    coordinates: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coordinates",
                           tuple(to_rational(a) for a in self.coordinates))
        if any(a == 0 for a in self.coordinates):
            raise ValueError("ellipsoid points must have nonzero coordinates")

    def __len__(self):
        return len(self.coordinates)

    def __iter__(self):
        return iter(self.coordinates)

    def __getitem__(self, k):
        return self.coordinates[k]

    def to_json(self) -> list[str]:
        return [format_rational(a) for a in self.coordinates]

    @classmethod
    def from_json(cls, data) -> "EllipsoidPoint":
        return cls(tuple(data))


@dataclass
class PointSearch:
    points: list[EllipsoidPoint]
    zero_coordinate_count: int = 0
    height_bound: int = 0


def _integer_target(spec: QuadricSpec) -> tuple[int, int]:
    """Write target = num/den; points (p/q) satisfy den*sum d p^2 = num q^2."""
    return spec.target.numerator, spec.target.denominator


def search_points(spec: QuadricSpec, height_bound: int) -> PointSearch:
    """All points with common denominator q <= height_bound, in lowest terms.

    Deterministic order: by denominator, then lexicographically by numerators.
    """
    if height_bound < 1:
        raise ValueError("height_bound must be >= 1")
    num, den = _integer_target(spec)
    dims = spec.dims
    found: list[EllipsoidPoint] = []
    zero_count = 0
    for q in range(1, height_bound + 1):
        rhs = num * q * q
        if rhs % den:
            continue
        rhs //= den
        sols: list[tuple[int, ...]] = []
        _representations(dims, rhs, (), sols)
        for p in sorted(sols):
            g = q
            for x in p:
                g = gcd(g, x)
            if g != 1:
                continue
            if any(x == 0 for x in p):
                zero_count += 1
                continue
            found.append(EllipsoidPoint(tuple(Fraction(x, q) for x in p)))
    return PointSearch(found, zero_count, height_bound)


def _representations(dims, remaining, prefix, out):
    """Integer tuples p with sum dims[k] p_k^2 == remaining (all signs)."""
    if not dims:
        if remaining == 0:
            out.append(prefix)
        return
    d, rest = dims[0], dims[1:]
    if not rest:
        if remaining % d == 0:
            s = isqrt(remaining // d)
            if s * s * d == remaining:
                out.extend([prefix + (s,), prefix + (-s,)] if s else [prefix + (0,)])
        return
    bound = isqrt(remaining // d)
    for p in range(-bound, bound + 1):
        _representations(rest, remaining - d * p * p, prefix + (p,), out)


def enumerate_points(spec: QuadricSpec, height_bound: int) -> list[EllipsoidPoint]:
    return search_points(spec, height_bound).points


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def modular_obstruction(spec: QuadricSpec, modulus: int) -> str:
    """Return ``"obstructed"`` or ``"inconclusive"``.

    A rational point gives a primitive integer zero (p_1, .., p_l, z) of
    ``den*sum d_k p_k^2 - num' z^2``, where num' is the numerator of the target
    with its square factors removed (for the target 4 this is just
    ``sum d_k p_k^2 = z^2``).  Primitive means no prime divides every
    entry, so modulo m every residue tuple must avoid being 0 mod some prime
    factor of m.  If no residue tuple works, no rational point exists.
    """
    if modulus < 2:
        raise ValueError("modulus must be >= 2")
    num, den = _integer_target(spec)
    num_free = num
    for p in _prime_factors(num):
        while num_free % (p * p) == 0:
            num_free //= p * p
    primes = _prime_factors(modulus)
    dims = spec.dims
    squares = [(x * x) % modulus for x in range(modulus)]
    for z in range(modulus):
        zz = (num_free * squares[z]) % modulus
        for ps in itertools.product(range(modulus), repeat=len(dims)):
            if any(all(v % pr == 0 for v in ps) and z % pr == 0 for pr in primes):
                continue
            lhs = den * sum(d * squares[p] for d, p in zip(dims, ps))
            if (lhs - zz) % modulus == 0:
                return "inconclusive"
    return "obstructed"


def secant_point(spec: QuadricSpec, base: Sequence[Fraction],
                 direction: Sequence[Fraction]) -> EllipsoidPoint | None:
    """Second intersection of the line base + s*direction with the quadric.

    Returns None for a tangent line or when the second point has a zero
    coordinate.
    """
    base = [to_rational(a) for a in base]
    direction = [to_rational(a) for a in direction]
    if not spec.contains(base):
        raise ValueError("base point is not on the quadric")
    if all(v == 0 for v in direction):
        raise ValueError("direction must be nonzero")
    quad = sum((d * v * v for d, v in zip(spec.dims, direction)), Fraction(0))
    lin = 2 * sum((d * a * v for d, a, v in zip(spec.dims, base, direction)), Fraction(0))
    # quadric is positive definite, so quad > 0
    s = -lin / quad
    if s == 0:
        log.info("direction %s is tangent at %s; skipped",
                 [format_rational(v) for v in direction], [format_rational(a) for a in base])
        return None
    point = tuple(a + s * v for a, v in zip(base, direction))
    if any(a == 0 for a in point):
        log.info("secant point %s has a zero coordinate; skipped",
                 [format_rational(a) for a in point])
        return None
    return EllipsoidPoint(point)


def _slopes():
    """0, 1, -1, 2, -2, 1/2, -1/2, 3, ... : every rational once."""
    yield Fraction(0)
    seen = {Fraction(0)}
    height = 1
    while True:
        for num in range(1, height + 1):
            den = height + 1 - num
            if gcd(num, den) != 1:
                continue
            for q in (Fraction(num, den), Fraction(-num, den)):
                if q not in seen:
                    seen.add(q)
                    yield q
        height += 1


def secant_family(spec: QuadricSpec, base: Sequence[Fraction],
                  direction: Sequence[Fraction], count: int) -> list[EllipsoidPoint]:
    """Points from ``count`` lines through ``base``.

    Line k has direction ``direction + m_k * e_last`` where m_0 = 0, m_1 = 1,
    m_2 = -1, ... runs over the rationals; tangent lines and points with a zero
    coordinate are skipped (and logged).  Distinct slopes give distinct points
    because a line meets the quadric in at most two points.
    """
    points: list[EllipsoidPoint] = []
    if count <= 0:
        return points
    direction = [to_rational(v) for v in direction]
    for k, m in enumerate(_slopes()):
        if k >= count:
            break
        v = list(direction)
        v[-1] += m
        if all(x == 0 for x in v):
            log.info("slope %s gives the zero direction; skipped", m)
            continue
        p = secant_point(spec, base, v)
        if p is not None and p not in points:
            points.append(p)
    return points
