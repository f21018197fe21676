"""Coefficient recursion for generalized power-series solutions.

For a balance with leading exponents e_j and step Q, variable j is expanded
as ``sum_i c[j][i] t^(e_j + i*Q)``.  Substituting into a quadratic system and
collecting the coefficient of ``t^(e_j - 1 + i*Q)`` in equation j gives, for
every step i >= 1, a linear system

    X(i*Q) c_i = v_i

where ``X(iota) = diag(e_j + iota) - J`` with J the Jacobian of the
*dominant* monomials (those whose leading exponent equals e_j - 1) at the
leading coefficients, and v_i collects all products of lower-order
coefficients.  Resonances are the steps where X is singular; there the
right-hand side must lie in the image of X (compatibility) and the kernel
contributes free parameters.

The recursion is built directly from the monomial lists of the system, so
the same code covers every family of balances.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .balances import Balance
from .expr import UnboundParameterError
from .rational import (AffineSolutionSet, QMatrix, QPolynomial, det, det_poly,
                       format_rational, rank, solve_affine, to_rational)
from .systems import QuadraticSystem

log = logging.getLogger(__name__)


class GridError(ValueError):
    """A monomial does not land on the series grid of the balance."""


class CompatibilityError(RuntimeError):
    def __init__(self, state: "RecursionState", step: int):
        super().__init__(f"compatibility fails at step {step}")
        self.state = state
        self.step = step


class ProjectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class _Contribution:
    coeff: Fraction
    factors: tuple[int, ...]  # variable indices, length 0, 1 or 2
    shift: int                # steps between the LHS exponent and the monomial's base


def _contributions(sys: QuadraticSystem, bal: Balance) -> list[list[_Contribution]]:
    out = []
    Q = bal.step
    for j, terms in enumerate(sys.rhs):
        row = []
        target = bal.exponents[j] - 1
        for t in terms:
            factors = tuple(t.factors())
            base = sum((bal.exponents[k] for k in factors), Fraction(0))
            steps = (base - target) / Q
            if steps < 0 or steps.denominator != 1:
                raise GridError(
                    f"monomial {t} in the {sys.names[j]} equation sits at offset "
                    f"{format_rational(base - target)}, not a nonnegative multiple of Q"
                )
            row.append(_Contribution(t.coeff, factors, int(steps)))
        out.append(row)
    return out


@dataclass
class ResonanceEvent:
    step: int
    iota: Fraction
    det_value: Fraction
    rank: int
    kernel_basis: list[tuple[Fraction, ...]]
    rhs: list[Fraction]
    compatible: bool
    particular: tuple[Fraction, ...] | None = None
    choice: tuple[Fraction, ...] | None = None
    lam: Fraction | None = None
    projected: bool = False

    def to_json(self) -> dict:
        vec = lambda v: None if v is None else [format_rational(x) for x in v]
        return {
            "step": self.step,
            "iota": format_rational(self.iota),
            "det": format_rational(self.det_value),
            "rank": self.rank,
            "kernel": [vec(k) for k in self.kernel_basis],
            "rhs": vec(self.rhs),
            "compatible": self.compatible,
            "particular": vec(self.particular),
            "choice": vec(self.choice),
            "lambda": None if self.lam is None else format_rational(self.lam),
            "h0_projected": self.projected,
        }


class RecursionState:
    """Coefficients computed so far plus the resonance log.  Single writer."""

    def __init__(self, balance: Balance, params: Mapping[str, Fraction] | None = None,
                 system: QuadraticSystem | None = None):
        self.balance = balance
        self.system = system or balance.system()
        self.params = {k: to_rational(v) for k, v in (params or {}).items()}
        lead = balance.leading_values(self.params)
        self.coefficients: list[list[Fraction]] = [[c] for c in lead]
        self.resonance_log: list[ResonanceEvent] = []
        self.failed_step: int | None = None
        self._contrib = _contributions(self.system, balance)

    @property
    def last_step(self) -> int:
        return len(self.coefficients[0]) - 1

    @property
    def leading(self) -> list[Fraction]:
        return [c[0] for c in self.coefficients]

    def coefficient(self, var: int, step: int) -> Fraction:
        if step < 0:
            return Fraction(0)
        return self.coefficients[var][step]

    def vector(self, step: int) -> list[Fraction]:
        return [c[step] for c in self.coefficients]

    def event_at(self, step: int) -> ResonanceEvent | None:
        return next((e for e in self.resonance_log if e.step == step), None)


def matrix_at(state_or_balance, params, iota: Fraction) -> QMatrix:
    """X(iota) for the balance; ``iota`` is the exponent shift i*Q."""
    if isinstance(state_or_balance, RecursionState):
        st = state_or_balance
        bal, lead, contrib = st.balance, st.leading, st._contrib
    else:
        bal = state_or_balance
        lead = bal.leading_values({k: to_rational(v) for k, v in params.items()})
        contrib = _contributions(bal.system(), bal)
    n = bal.n_vars
    M = [[Fraction(0)] * n for _ in range(n)]
    for j in range(n):
        M[j][j] += bal.exponents[j] + iota
        for c in contrib[j]:
            if c.shift != 0:
                continue
            if len(c.factors) == 1:
                M[j][c.factors[0]] -= c.coeff
            elif len(c.factors) == 2:
                a, b = c.factors
                M[j][a] -= c.coeff * lead[b]
                M[j][b] -= c.coeff * lead[a]
    return QMatrix.from_rows(M)


def resonance_matrix(bal: Balance, params: Mapping, step) -> QMatrix:
    """X at integer (or rational, for interpolation) step i, i.e. iota = i*Q."""
    return matrix_at(bal, params, to_rational(step) * bal.step)


@dataclass
class ResonanceReport:
    det_polynomial: QPolynomial       # in iota = i*Q
    roots: list[tuple[Fraction, int]]  # rational roots in iota, with multiplicity
    residual: QPolynomial             # cofactor without rational roots
    classification: dict[Fraction, str]
    step: Fraction
    singular_steps: list[int] = field(default_factory=list)

    @property
    def top(self) -> Fraction | None:
        pos = [r for r, _ in self.roots if r > 0]
        return max(pos) if pos else None

    @property
    def top_step(self) -> int | None:
        top = self.top
        if top is None:
            return None
        s = top / self.step
        return int(s) if s.denominator == 1 else None

    def to_json(self) -> dict:
        return {
            "det_polynomial": self.det_polynomial.format("iota"),
            "det_coefficients": [format_rational(c) for c in self.det_polynomial.coefficients],
            "roots": [{"iota": format_rational(r), "multiplicity": m,
                       "step": format_rational(r / self.step),
                       "class": self.classification[r]} for r, m in self.roots],
            "residual": self.residual.format("iota"),
            "Q": format_rational(self.step),
            "singular_steps": self.singular_steps,
        }


def resonance_report(bal: Balance, params: Mapping | None = None,
                     bound: int = 0) -> ResonanceReport:
    """det X as a polynomial in iota, its rational roots and their roles.

    Steps 1..bound are scanned as well and every singular integer step is
    listed (a cross-check of root membership against exact rank).
    """
    params = bal.default_params() if params is None else params
    n = bal.n_vars
    poly = det_poly(lambda s: matrix_at(bal, params, s), n)
    roots, residual = poly.rational_roots()
    positive = [r for r, _ in roots if r > 0]
    top = max(positive) if positive else None
    classes = {}
    for r, _ in roots:
        if r == top:
            classes[r] = "top"
        elif r < -1:
            classes[r] = "meaningless-negative"
        else:
            classes[r] = "ordinary"
    singular = [i for i in range(1, bound + 1)
                if rank(matrix_at(bal, params, i * bal.step)) < n]
    return ResonanceReport(poly, roots, residual, classes, bal.step, singular)


def rhs_at_step(state: RecursionState, step: int) -> list[Fraction]:
    """The right-hand side v_i built from coefficients at steps < i."""
    if step < 1:
        raise ValueError("right-hand sides exist for steps >= 1")
    if state.last_step < step - 1:
        raise ValueError(f"coefficients up to step {step - 1} are needed, "
                         f"have {state.last_step}")
    co = state.coefficient
    out = []
    for j in range(state.balance.n_vars):
        total = Fraction(0)
        for c in state._contrib[j]:
            n = step - c.shift
            if n < 0:
                continue
            if not c.factors:
                if n == 0:
                    total += c.coeff
            elif len(c.factors) == 1:
                if c.shift > 0:
                    total += c.coeff * co(c.factors[0], n)
            else:
                a, b = c.factors
                lo, hi = (1, n - 1) if c.shift == 0 else (0, n)
                acc = Fraction(0)
                for p in range(lo, hi + 1):
                    acc += co(a, p) * co(b, n - p)
                total += c.coeff * acc
        out.append(total)
    return out


def _normalize_kernel(vec: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    # lambda convention: the last variable (u_{r+1} / v_3) moves by 2*lambda
    if vec[-1] != 0:
        scale = 2 / vec[-1]
        return tuple(x * scale for x in vec)
    return vec


def advance(state: RecursionState, step: int,
            resonance_choice: Sequence | None = None) -> RecursionState:
    """Compute the coefficients at ``step`` (which must be the next one).

    At a singular step the right-hand side is checked against the image of X
    exactly.  On success the coefficients are ``particular + choice`` where
    ``choice`` is an element of ker X (default 0), given either as a vector
    or, for a one-dimensional kernel, as the scalar lambda multiplying the
    kernel vector normalized so its last entry is 2.  On failure the event is
    logged and :class:`CompatibilityError` is raised.
    """
    if state.failed_step is not None:
        raise CompatibilityError(state, state.failed_step)
    if step != state.last_step + 1:
        raise ValueError(f"next step is {state.last_step + 1}, not {step}")
    iota = step * state.balance.step
    X = matrix_at(state, None, iota)
    v = rhs_at_step(state, step)
    d = det(X)
    if d != 0:
        given = resonance_choice
        if given is not None and not isinstance(given, (list, tuple)):
            given = [given]
        if given is not None and any(to_rational(x) != 0 for x in given):
            raise ValueError(f"step {step} is not a resonance; no free choice is available")
        sol = solve_affine(X, v)
        coeffs = list(sol.particular)
    else:
        sol = solve_affine(X, v)
        basis = [_normalize_kernel(k) for k in sol.kernel_basis]
        event = ResonanceEvent(step, iota, d, X.cols - len(basis), basis, v, sol.feasible,
                               sol.particular)
        state.resonance_log.append(event)
        if not sol.feasible:
            state.failed_step = step
            log.warning("compatibility fails at step %d (iota=%s)", step, iota)
            raise CompatibilityError(state, step)
        coeffs = list(sol.particular)
        if resonance_choice is not None:
            if not isinstance(resonance_choice, (list, tuple)):
                # a scalar is lambda along the normalized kernel vector
                if len(basis) != 1:
                    raise ValueError(f"kernel at step {step} has dimension {len(basis)}; "
                                     "give a full vector")
                lam = to_rational(resonance_choice)
                resonance_choice = [lam * x for x in basis[0]]
            w = [to_rational(x) for x in resonance_choice]
            if any(x != 0 for x in X.matvec(w)):
                raise ValueError("resonance choice is not in the kernel of X")
            coeffs = [p + x for p, x in zip(coeffs, w)]
            event.choice = tuple(w)
            if len(basis) == 1 and basis[0][-1] != 0:
                event.lam = w[-1] / basis[0][-1]
        else:
            event.lam = Fraction(0)
    for j, c in enumerate(coeffs):
        state.coefficients[j].append(c)
    return state


# --- the constraint along a series -------------------------------------------------

def _grid_expansion(terms, exps, coeffs, Q, max_step):
    """Expand polynomial ``terms`` along series; returns ({exponent: value}, min base)."""
    out: dict[Fraction, Fraction] = {}
    bases = []
    for t in terms:
        factors = t.factors()
        base = sum((exps[k] for k in factors), Fraction(0))
        bases.append(base)
        if not factors:
            out[base] = out.get(base, Fraction(0)) + t.coeff
        elif len(factors) == 1:
            (a,) = factors
            for p in range(min(max_step, len(coeffs[a]) - 1) + 1):
                e = base + p * Q
                out[e] = out.get(e, Fraction(0)) + t.coeff * coeffs[a][p]
        else:
            a, b = factors
            for n in range(max_step + 1):
                acc = Fraction(0)
                for p in range(n + 1):
                    if p < len(coeffs[a]) and n - p < len(coeffs[b]):
                        acc += coeffs[a][p] * coeffs[b][n - p]
                e = base + n * Q
                out[e] = out.get(e, Fraction(0)) + t.coeff * acc
    return out, min(bases)


def _constraint_coefficients(sys, bal, coeffs, through):
    expansion, lo = _grid_expansion(sys.constraint, bal.exponents, coeffs, bal.step, through)
    top = lo + through * bal.step
    grid = {}
    k = 0
    while lo + k * bal.step <= top:
        e = lo + k * bal.step
        grid[e] = Fraction(0)
        k += 1
    for e, v in expansion.items():
        if e <= top:
            grid[e] = grid.get(e, Fraction(0)) + v
    return sorted(grid.items())


def constraint_coefficient(state: RecursionState, exponent: Fraction = Fraction(0)) -> Fraction:
    through = state.last_step
    for e, v in _constraint_coefficients(state.system, state.balance,
                                         state.coefficients, through):
        if e == exponent:
            return v
    raise ValueError(f"t^{exponent} is beyond the computed range")


def project_H0(state: RecursionState) -> Fraction:
    """Choose the top-resonance parameter so that G has no t^0 term.

    The state must have just been advanced through the top resonance.  The
    t^0 coefficient of G is affine in lambda; it is evaluated at lambda = 0
    and lambda = 1 and solved.  Returns lambda, normalized so that the last
    variable's coefficient at that step is particular + 2*lambda.
    """
    step = state.last_step
    event = state.event_at(step)
    if event is None or not event.compatible:
        raise ProjectionError(f"step {step} is not a compatible resonance")
    if len(event.kernel_basis) != 1:
        raise ProjectionError(f"kernel at step {step} has dimension {len(event.kernel_basis)}")
    k = event.kernel_basis[0]
    p = list(event.particular)

    def g_at(lam):
        for j in range(len(p)):
            state.coefficients[j][step] = p[j] + lam * k[j]
        return constraint_coefficient(state, Fraction(0))

    g0 = g_at(Fraction(0))
    slope = g_at(Fraction(1)) - g0
    if slope == 0:
        g_at(Fraction(0))
        raise ProjectionError("the t^0 coefficient of G does not depend on lambda")
    lam = -g0 / slope
    g_at(lam)
    event.lam = lam
    event.choice = tuple(lam * x for x in k)
    event.projected = True
    return lam


# --- full runs ---------------------------------------------------------------------

@dataclass
class SeriesSolution:
    balance: Balance | None
    system: QuadraticSystem
    params: dict[str, Fraction]
    exponents: tuple[Fraction, ...]
    step: Fraction
    coefficients: tuple[tuple[Fraction, ...], ...]
    order: int
    h0_projected: bool = False
    lam: Fraction | None = None
    top_step: int | None = None
    resonance_log: list[ResonanceEvent] = field(default_factory=list)

    @classmethod
    def constant(cls, system: QuadraticSystem, state: Sequence) -> "SeriesSolution":
        """A constant solution (an equilibrium), written as a zeroth-order series."""
        state = [to_rational(x) for x in state]
        if any(x != 0 for x in system.eval_rhs(state)):
            raise ValueError("state is not an equilibrium")
        n = system.n_vars
        return cls(None, system, {}, (Fraction(0),) * n, Fraction(1),
                   tuple((x,) for x in state), 0)

    @property
    def n_vars(self) -> int:
        return len(self.exponents)

    def terms(self, var: int) -> list[tuple[Fraction, Fraction]]:
        e, Q = self.exponents[var], self.step
        return [(e + i * Q, c) for i, c in enumerate(self.coefficients[var])]

    def coefficient(self, var, step: int) -> Fraction:
        if isinstance(var, str):
            var = self.system.index(var)
        if step < 0:
            return Fraction(0)
        return self.coefficients[var][step]

    def truncate(self, order: int) -> "SeriesSolution":
        if order > self.order:
            raise ValueError("cannot extend a series by truncating it")
        return SeriesSolution(self.balance, self.system, self.params, self.exponents,
                              self.step, tuple(c[:order + 1] for c in self.coefficients),
                              order, self.h0_projected, self.lam, self.top_step,
                              [e for e in self.resonance_log if e.step <= order])

    @property
    def parameter_count(self) -> int:
        """Free parameters: the balance's, one per kernel direction at positive
        compatible resonances, and the position of the singularity."""
        if self.balance is None:
            return 0
        kernel_dims = sum(len(e.kernel_basis) for e in self.resonance_log if e.compatible)
        return len(self.balance.free_parameters) + kernel_dims + 1

    def to_json(self) -> dict:
        variables = {}
        for j, name in enumerate(self.system.names):
            variables[name] = [{"exponent": format_rational(e), "coeff": format_rational(c)}
                               for e, c in self.terms(j)]
        return {
            "schema": 1,
            "system": self.system.to_json(),
            "balance": None if self.balance is None else self.balance.to_json(),
            "params": {k: format_rational(v) for k, v in sorted(self.params.items())},
            "Q": format_rational(self.step),
            "N": self.order,
            "h0_projected": self.h0_projected,
            "lambda": None if self.lam is None else format_rational(self.lam),
            "top_step": self.top_step,
            "parameter_count": self.parameter_count,
            "variables": variables,
            "resonance_log": [e.to_json() for e in self.resonance_log],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SeriesSolution":
        system = QuadraticSystem.from_json(data["system"])
        balance = None if data["balance"] is None else Balance.from_json(data["balance"])
        exps, coeffs = [], []
        for name in system.names:
            entries = data["variables"][name]
            exps.append(to_rational(entries[0]["exponent"]))
            coeffs.append(tuple(to_rational(e["coeff"]) for e in entries))
        log_ = []
        for ev in data.get("resonance_log", []):
            vec = lambda v: None if v is None else tuple(to_rational(x) for x in v)
            log_.append(ResonanceEvent(
                ev["step"], to_rational(ev["iota"]), to_rational(ev["det"]), ev["rank"],
                [vec(k) for k in ev["kernel"]], list(vec(ev["rhs"])), ev["compatible"],
                vec(ev["particular"]), vec(ev["choice"]),
                None if ev["lambda"] is None else to_rational(ev["lambda"]),
                ev["h0_projected"]))
        return cls(balance, system, {k: to_rational(v) for k, v in data["params"].items()},
                   tuple(exps), to_rational(data["Q"]), tuple(coeffs), data["N"],
                   data["h0_projected"],
                   None if data["lambda"] is None else to_rational(data["lambda"]),
                   data.get("top_step"), log_)


def default_order(bal: Balance) -> int:
    return math.ceil(12 / bal.step)


def run(bal: Balance, params: Mapping | None = None, N: int | None = None,
        auto_H0: bool = True, choices: Mapping[int, Sequence] | None = None) -> SeriesSolution:
    """Run the recursion through step N.

    ``choices`` maps resonant steps to kernel elements (vectors or scalars, see
    :func:`advance`) added to the particular solution.  With ``auto_H0`` the
    top-resonance parameter is instead solved so the series lies on G = 0, and
    every constraint coefficient in range is then checked to vanish.
    """
    params = {k: to_rational(v) for k, v in (params or {}).items()}
    missing = [p for p in bal.free_parameters if p not in params]
    if missing:
        raise UnboundParameterError(", ".join(missing))
    N = default_order(bal) if N is None else N
    choices = dict(choices or {})
    report = resonance_report(bal, params)
    top = report.top_step
    state = RecursionState(bal, params)
    lam = None
    projected = False
    for i in range(1, N + 1):
        choice = None if (auto_H0 and i == top) else choices.get(i)
        advance(state, i, choice)
        if auto_H0 and i == top:
            lam = project_H0(state)
            projected = True
        elif i == top:
            ev = state.event_at(i)
            lam = ev.lam if ev is not None else None
    sol = SeriesSolution(bal, state.system, params, bal.exponents, bal.step,
                         tuple(tuple(c) for c in state.coefficients), N, projected, lam,
                         top, state.resonance_log)
    if projected:
        bad = [(e, v) for e, v in constraint_series(sol) if v != 0]
        if bad:
            raise ProjectionError(
                f"constraint coefficient t^{format_rational(bad[0][0])} = "
                f"{format_rational(bad[0][1])} after projection")
    return sol


def constraint_series(sol: SeriesSolution, through: int | None = None
                      ) -> list[tuple[Fraction, Fraction]]:
    """Coefficients of G along the series, by exponent, on the grid of step Q.

    Only exponents fully determined by the computed coefficients are listed:
    from the lowest monomial exponent up to ``through`` steps above it.
    """
    through = sol.order if through is None else min(through, sol.order)
    coeffs = [list(c) for c in sol.coefficients]
    bal_like = _Shape(sol.exponents, sol.step)
    return _constraint_coefficients(sol.system, bal_like, coeffs, through)


def residual_series(sol: SeriesSolution, extra: int = 0) -> list[list[tuple[Fraction, Fraction]]]:
    """Per equation, the coefficients of (d/dt series - rhs(series)).

    Listed on the grid ``e_j - 1 + i*Q`` for i <= order + extra, where the
    terms beyond ``order`` only contain the products available from the
    truncated series.
    """
    out = []
    Q = sol.step
    coeffs = [list(c) for c in sol.coefficients]
    for j, terms in enumerate(sol.system.rhs):
        lo = sol.exponents[j] - 1
        top = sol.order + extra
        grid = {lo + i * Q: Fraction(0) for i in range(top + 1)}
        for i, c in enumerate(coeffs[j]):
            e = sol.exponents[j] + i * Q
            if e - 1 in grid:
                grid[e - 1] += e * c
        expansion, _ = _grid_expansion(terms, sol.exponents, coeffs, Q, 2 * sol.order)
        for e, v in expansion.items():
            if e in grid:
                grid[e] -= v
            elif e < lo and v != 0:
                grid[e] = -v
        out.append(sorted(grid.items()))
    return out


@dataclass(frozen=True)
class _Shape:
    exponents: tuple[Fraction, ...]
    step: Fraction
