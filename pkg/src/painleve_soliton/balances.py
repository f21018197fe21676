"""Leading-order balances for the warped and circle-bundle systems.

A balance fixes, for every state variable, the leading exponent and leading
coefficient of a generalized power series ``sum_i c_i t^(exponent + i*Q)``.
Coefficients may depend on named free parameters ("b0", "a_{2,0}", ...),
which are bound to rationals only when the recursion is run.

Families:

* ``uno`` / ``caseI`` -- the first l factors have x_i ~ t^-2 (pole-dominated);
* ``dos`` / ``caseII`` -- the first l factors have x_i ~ t^alpha_i with
  (alpha_1..alpha_l) a rational point on sum d_k alpha_k^2 = 4;
* ``bb`` -- the (0, 2 | 1, -1) family of the circle-bundle system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .ellipsoid import EllipsoidPoint, QuadricSpec
from .expr import Expr, UnboundParameterError
from .rational import format_rational, rational_gcd, rational_sqrt, to_rational
from .systems import (QuadraticSystem, build_system, check_bb_dim, check_warped_dims)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Balance:
    system_kind: str
    family: str
    dims: tuple[int, ...]
    exponents: tuple[Fraction, ...]
    coefficients: tuple[Expr, ...]
    step: Fraction
    l: int
    free_parameters: tuple[str, ...]
    permutation: tuple[int, ...] = ()
    point: tuple[Fraction, ...] = ()
    shifts: tuple[int, ...] = ()
    label: str = ""

    @property
    def n_vars(self) -> int:
        return len(self.exponents)

    def system(self) -> QuadraticSystem:
        return build_system(self.system_kind, self.dims)

    def leading_values(self, params: Mapping[str, Fraction]) -> list[Fraction]:
        missing = [p for p in self.free_parameters if p not in params]
        if missing:
            raise UnboundParameterError(", ".join(missing))
        return [c.evaluate(params) for c in self.coefficients]

    def default_params(self) -> dict[str, Fraction]:
        return {name: Fraction(1) for name in self.free_parameters}

    def to_json(self) -> dict:
        return {
            "system": self.system_kind,
            "family": self.family,
            "label": self.label,
            "dims": list(self.dims),
            "exponents": [format_rational(e) for e in self.exponents],
            "coefficients": [c.to_json() for c in self.coefficients],
            "Q": format_rational(self.step),
            "l": self.l,
            "free_parameters": list(self.free_parameters),
            "permutation": list(self.permutation),
            "point": [format_rational(a) for a in self.point],
            "shifts": list(self.shifts),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Balance":
        return cls(
            system_kind=data["system"],
            family=data["family"],
            dims=tuple(data["dims"]),
            exponents=tuple(to_rational(e) for e in data["exponents"]),
            coefficients=tuple(Expr.from_json(c) for c in data["coefficients"]),
            step=to_rational(data["Q"]),
            l=data["l"],
            free_parameters=tuple(data["free_parameters"]),
            permutation=tuple(data.get("permutation", ())),
            point=tuple(to_rational(a) for a in data.get("point", ())),
            shifts=tuple(data.get("shifts", ())),
            label=data.get("label", ""),
        )


class BalanceList(list):
    """Balances plus a note of families that exist but are not rational."""

    def __init__(self, items=(), excluded=()):
        super().__init__(items)
        self.excluded = list(excluded)


def _a(i: int) -> str:
    return f"a_{{{i},0}}"


def balance_multi_caseI(dims: Sequence[int], l: int) -> Balance:
    """Pole-dominated balance: x_1..x_l ~ t^-2, x_{l+1}..x_r ~ t^0."""
    dims = check_warped_dims(dims)
    r = len(dims)
    if not 1 <= l <= r:
        raise ValueError(f"l must lie in [1, {r}], got {l}")
    e0 = Fraction(sum(dims[:l]))
    exps, coefs = [None] * (2 * r + 2), [None] * (2 * r + 2)
    free = ["b0"]
    for i in range(r):
        x, u = i, r + 1 + i
        if i < l:
            exps[x], coefs[x] = Fraction(-2), Expr.const(dims[i] * (e0 - 1))
            exps[u], coefs[u] = Fraction(-1), Expr.const(1)
        else:
            a = Expr.param(_a(i + 1))
            free.append(_a(i + 1))
            exps[x], coefs[x] = Fraction(0), a
            exps[u], coefs[u] = Fraction(1), a / (dims[i] * (e0 + 1))
    exps[r], coefs[r] = e0, Expr.param("b0")
    exps[2 * r + 1], coefs[2 * r + 1] = Fraction(-1), Expr.const(e0)
    return Balance("warped", "caseI", dims, tuple(exps), tuple(coefs), Fraction(1), l,
                   tuple(free), tuple(range(r)), label=f"caseI l={l}")


def balance_multi_caseII(dims: Sequence[int], point: EllipsoidPoint | Sequence,
                         r: int | None = None) -> Balance:
    """Balance with x_i ~ t^alpha_i for a rational ellipsoid point alpha.

    ``dims`` lists all r factor dimensions; the first ``len(point)`` of them
    carry the nonzero exponents.  Factors are reordered so the nonzero
    exponents come first in ascending order; ``permutation[k]`` is the
    original index of reordered factor k.
    """
    dims = check_warped_dims(dims)
    if not isinstance(point, EllipsoidPoint):
        point = EllipsoidPoint(tuple(point))
    r = len(dims) if r is None else r
    if r != len(dims):
        raise ValueError(f"r={r} but {len(dims)} dimensions given")
    l = len(point)
    if not 1 <= l <= r:
        raise ValueError(f"point has {l} coordinates for r={r}")
    if not QuadricSpec(dims[:l]).contains(point.coordinates):
        raise ValueError(f"{point.to_json()} is not on the ellipsoid for {dims[:l]}")
    if any(a <= -2 for a in point):
        raise ValueError("exponents must exceed -2")
    order = sorted(range(l), key=lambda k: (point[k], k)) + list(range(l, r))
    dims = tuple(dims[k] for k in order)
    alpha = tuple(point[k] for k in order[:l])
    Q = rational_gcd(list(alpha) + [Fraction(2)])
    shifts = tuple(int((a + 2) / Q) for a in alpha)
    exps, coefs = [None] * (2 * r + 2), [None] * (2 * r + 2)
    free = []
    for i in range(r):
        x, u = i, r + 1 + i
        a = Expr.param(_a(i + 1))
        free.append(_a(i + 1))
        if i < l:
            exps[x], coefs[x] = alpha[i], a
            exps[u], coefs[u] = Fraction(-1), Expr.const(-alpha[i] / 2)
        else:
            exps[x], coefs[x] = Fraction(0), a
            exps[u], coefs[u] = Fraction(1), a / (2 * dims[i])
    free.append("b0")
    exps[r], coefs[r] = Fraction(1), Expr.param("b0")
    exps[2 * r + 1], coefs[2 * r + 1] = Fraction(-1), Expr.const(1)
    return Balance("warped", "caseII", dims, tuple(exps), tuple(coefs), Q, l, tuple(free),
                   tuple(order), alpha, shifts,
                   label="caseII alpha=(" + ", ".join(format_rational(a) for a in alpha) + ")")


def balances_one_factor(d1: int) -> BalanceList:
    """Both one-factor families; the second only when sqrt(d1) is rational."""
    (d1,) = check_warped_dims([d1])
    uno = balance_multi_caseI([d1], 1)
    out = [_relabel(uno, "uno", "uno")]
    excluded = []
    root = rational_sqrt(Fraction(d1))
    if root is None:
        excluded.append(f"dos: alpha = -+2/sqrt({d1}) is irrational")
        log.info("d1=%d is not a perfect square; the dos family has irrational exponents", d1)
    else:
        for sign, name in ((-1, "minus"), (1, "plus")):
            bal = balance_multi_caseII([d1], [sign * 2 / root])
            out.append(_relabel(bal, "dos", f"dos sign={name}"))
    return BalanceList(out, excluded)


def balance_dos(d1: int, sign: str) -> Balance:
    """One-factor balance with alpha = -2/sqrt(d1) ("minus") or +2/sqrt(d1) ("plus")."""
    for bal in balances_one_factor(d1)[1:]:
        if bal.label.endswith(sign):
            return bal
    raise ValueError(f"no rational dos balance for d1={d1}")


def _relabel(bal: Balance, family: str, label: str) -> Balance:
    return Balance(bal.system_kind, family, bal.dims, bal.exponents, bal.coefficients,
                   bal.step, bal.l, bal.free_parameters, bal.permutation, bal.point,
                   bal.shifts, label)


def balance_bb(d2: int) -> Balance:
    d2 = check_bb_dim(d2)
    a1, a2 = Expr.param(_a(1)), Expr.param(_a(2))
    exps = tuple(Fraction(e) for e in (0, 2, 1, 1, -1, -1))
    coefs = (a1, a2, Expr.param("b0"), a1 / (2 * d2), Expr.const(-1), Expr.const(1))
    return Balance("bb", "bb", (d2,), exps, coefs, Fraction(1), 2,
                   (_a(1), _a(2), "b0"), label="bb (0,2|1,-1)")


@dataclass
class Verdict:
    ok: bool
    equation: str | None = None
    detail: str = ""
    residuals: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def validate_balance(sys: QuadraticSystem, bal: Balance) -> Verdict:
    """Substitute the one-term ansatz and check every equation balances.

    For equation j the left side contributes e_j c_j t^(e_j - 1).  Every group
    of terms at an exponent <= e_j - 1 must cancel exactly, with the free
    parameters kept symbolic.
    """
    if sys.n_vars != bal.n_vars:
        raise ValueError("balance does not match the system shape")
    exps, coefs = bal.exponents, bal.coefficients
    for j, terms in enumerate(sys.rhs):
        groups: dict[Fraction, Expr] = {}
        lhs = coefs[j] * exps[j]
        if not lhs.is_zero():
            groups[exps[j] - 1] = lhs
        for t in terms:
            value = Expr.const(t.coeff)
            e = Fraction(0)
            for k in t.factors():
                value = value * coefs[k]
                e += exps[k]
            if value.is_zero():
                continue
            groups[e] = groups.get(e, Expr()) - value
        for e in sorted(groups):
            if e > exps[j] - 1:
                break
            if not groups[e].is_zero():
                return Verdict(False, sys.names[j],
                               f"t^{format_rational(e)} coefficient {groups[e]} does not vanish",
                               {format_rational(e): str(groups[e])})
    return Verdict(True)
