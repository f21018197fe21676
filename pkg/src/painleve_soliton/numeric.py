"""Floating-point checks of exact series: residuals, integration, frames.

Series are evaluated on the positive real branch ``t^(e + i*Q)``.  Residuals
of the truncated series are tiny differences of large terms near t = 0, so
:func:`ode_residual` evaluates in extended precision (mpmath); everything
else works in double precision.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy.integrate import DOP853

from .recursion import SeriesSolution, residual_series
from .systems import QuadraticSystem

log = logging.getLogger(__name__)


class FrameError(ValueError):
    """The geometric frame is undefined (u_{r+1} = 0 or some x_i < 0)."""


# --- series evaluation -------------------------------------------------------------

def _check_t(t):
    if not t > 0:
        raise ValueError(f"series are evaluated for t > 0, got {t}")


def eval_series(sol: SeriesSolution, t: float) -> np.ndarray:
    """Partial sums of every variable at ``t``."""
    _check_t(t)
    out = np.zeros(sol.n_vars)
    for j in range(sol.n_vars):
        out[j] = sum(float(c) * t ** float(e) for e, c in sol.terms(j) if c != 0)
    return out


def eval_series_derivative(sol: SeriesSolution, t: float) -> np.ndarray:
    _check_t(t)
    out = np.zeros(sol.n_vars)
    for j in range(sol.n_vars):
        out[j] = sum(float(c * e) * t ** float(e - 1) for e, c in sol.terms(j) if c != 0)
    return out


def _mp(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def _mp_rhs(system: QuadraticSystem, state):
    out = []
    for terms in system.rhs:
        total = mpmath.mpf(0)
        for term in terms:
            value = _mp(term.coeff)
            for k in term.factors():
                value *= state[k]
            total += value
        out.append(total)
    return out


def ode_residual(sol: SeriesSolution, sys: QuadraticSystem | None = None,
                 t: float = 0.05, dps: int = 50) -> float:
    """max_j |d/dt S_j - f_j(S)| at t, derivative taken term by term."""
    _check_t(t)
    sys = sol.system if sys is None else sys
    with mpmath.workdps(dps):
        tt = mpmath.mpf(t)
        vals, ders = [], []
        for j in range(sol.n_vars):
            v = d = mpmath.mpf(0)
            for e, c in sol.terms(j):
                if c == 0:
                    continue
                p = tt ** _mp(e)
                v += _mp(c) * p
                d += _mp(c * e) * p / tt
            vals.append(v)
            ders.append(d)
        rhs = _mp_rhs(sys, vals)
        return float(max(abs(d - f) for d, f in zip(ders, rhs)))


def residual_order(sol: SeriesSolution, extra: int = 4) -> Fraction | None:
    """Exponent of the lowest nonzero coefficient of the exact residual.

    This is the expected log-log slope of :func:`ode_residual` as t -> 0.
    None means the truncated series is an exact solution.
    """
    best = None
    for j, coeffs in enumerate(residual_series(sol, extra=extra + sol.order)):
        for e, v in coeffs:
            if v != 0:
                best = e if best is None else min(best, e)
                break
    return best


def fit_slope(ts: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(t)."""
    slope, _ = np.polyfit(np.log(ts), np.log(values), 1)
    return float(slope)


def estimate_radius(sol: SeriesSolution, tail: int = 6) -> float:
    """Root-test estimate of the convergence radius in t.

    In z = t^Q every variable is a power series; the radius in z is estimated
    as the smallest median of |c_i|^(-1/i) over the last ``tail`` nonzero
    coefficients, then mapped back by t = z^(1/Q).  Returns inf if no
    variable has enough nonzero coefficients.
    """
    radii = []
    for coeffs in sol.coefficients:
        pts = [(i, abs(float(c))) for i, c in enumerate(coeffs) if i > 0 and c != 0]
        pts = pts[-tail:]
        if len(pts) < 2:
            continue
        lead = abs(float(coeffs[0])) or 1.0
        est = [(lead / a) ** (1.0 / i) for i, a in pts]
        radii.append(float(np.median(est)))
    if not radii:
        return math.inf
    return min(radii) ** (1.0 / float(sol.step))


def default_t_max(sol: SeriesSolution) -> float:
    return 0.25 * estimate_radius(sol)


# --- integration -------------------------------------------------------------------

@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    rhs_evaluations: int = 0
    rtol: float = 0.0
    atol: float = 0.0

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    stats: IntegratorStats
    names: tuple[str, ...] = ()
    reason: str | None = None      # set when the run stopped early
    _pieces: list = field(default_factory=list, repr=False)

    @property
    def completed(self) -> bool:
        return self.reason is None

    def at(self, t: float) -> np.ndarray:
        """Dense-output state at ``t`` within the integrated range."""
        if not self._pieces:
            raise ValueError("trajectory has no dense output")
        lo, hi = self.times[0], self.times[-1]
        if not lo - 1e-14 <= t <= hi + 1e-14:
            raise ValueError(f"t={t} outside [{lo}, {hi}]")
        k = int(np.searchsorted(self.times, t, side="left")) - 1
        k = min(max(k, 0), len(self._pieces) - 1)
        return self._pieces[k](t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *(self.names or [f"y{k}" for k in range(self.states.shape[1])])])
        for t, s in zip(self.times, self.states):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in s)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "variables": list(self.names),
            "times": [float(t) for t in self.times],
            "states": [[float(x) for x in s] for s in self.states],
            "stats": self.stats.to_json(),
            "reason": self.reason,
        }


def integrate(sys: QuadraticSystem, initial: Sequence[float], t_span: tuple[float, float],
              rtol: float = 1e-10, atol: float = 1e-12, max_steps: int = 100_000,
              blowup: float = 1e12) -> Trajectory:
    """Adaptive 8th-order embedded Runge-Kutta (Dormand-Prince 8(5,3)).

    Every accepted step is sampled.  A non-finite state, a state larger than
    ``blowup``, step-size collapse or the step budget stop the run early with
    the reason recorded on the trajectory.
    """
    y0 = np.asarray(initial, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    t0, t1 = map(float, t_span)
    counter = [0]

    def f(t, y):
        counter[0] += 1
        return np.array(sys.eval_rhs(list(y)), dtype=float)

    stats = IntegratorStats(rtol=rtol, atol=atol)
    times, states, pieces = [t0], [y0.copy()], []
    reason = None
    if t1 == t0:
        return Trajectory(np.array(times), np.array(states), stats, sys.names)
    solver = DOP853(f, t0, y0, t1, rtol=rtol, atol=atol)
    stages = DOP853.n_stages
    while solver.status == "running":
        if stats.steps >= max_steps:
            reason = f"step budget {max_steps} exhausted"
            break
        before = counter[0]
        msg = solver.step()
        used = counter[0] - before
        if solver.status == "failed":
            reason = f"integrator failed: {msg}"
            break
        stats.steps += 1
        stats.rejected += max(used // stages - 1, 0)
        y = solver.y
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > blowup:
            reason = f"divergence near t={solver.t:.6g}"
            break
        pieces.append(solver.dense_output())
        times.append(solver.t)
        states.append(y.copy())
    stats.rhs_evaluations = counter[0]
    if reason:
        log.warning("integration stopped: %s", reason)
    return Trajectory(np.array(times), np.array(states), stats, sys.names, reason, pieces)


def constraint_drift(sys: QuadraticSystem, traj: Trajectory) -> float:
    g = np.array([sys.eval_constraint(list(s)) for s in traj.states])
    return float(np.max(np.abs(g - g[0])))


# --- the geometric frame -----------------------------------------------------------

@dataclass
class GeometricFrame:
    X: np.ndarray
    Y: np.ndarray
    lyapunov: float
    w: float  # u_{r+1}

    @property
    def identity_gap(self) -> float:
        """sum X^2 + Y^2 - (1 - 1/u_{r+1}^2); zero on G = 0."""
        return float(self.lyapunov + 1.0 / self.w ** 2)


def geometric_frame(sys: QuadraticSystem, state: Sequence[float],
                    dims: Sequence[int] | None = None) -> GeometricFrame:
    """X_i = sqrt(d_i) u_i / u_{r+1},  Y_i = sqrt(x_i) / u_{r+1}.

    These follow from x_i'/x_i = -2 u_i and x_{r+1}/x_{r+1}' = 1/u_{r+1}.  The
    sign is fixed so that X solves the reduced vector field in the variable
    s with ds = u_{r+1} dt (see :func:`vectfield_rhs`).
    """
    if sys.kind != "warped":
        raise ValueError("the frame is defined for the warped system only")
    dims = np.asarray(sys.dims if dims is None else dims, dtype=float)
    r = len(dims)
    s = np.asarray(state, dtype=float)
    x, u, w = s[:r], s[r + 1:2 * r + 1], s[2 * r + 1]
    if w == 0:
        raise FrameError("u_{r+1} = 0")
    if np.any(x < 0):
        raise FrameError("negative x_i")
    X = np.sqrt(dims) * u / w
    Y = np.sqrt(x) / w
    L = float(np.sum(X ** 2) + np.sum(Y ** 2) - 1.0)
    return GeometricFrame(X, Y, L, float(w))


def vectfield_rhs(X: Sequence[float], Y: Sequence[float], dims: Sequence[int]):
    """X_i' = X_i (|X|^2 - 1) + Y_i^2/sqrt(d_i),  Y_i' = Y_i (|X|^2 - X_i/sqrt(d_i))."""
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    sd = np.sqrt(np.asarray(dims, dtype=float))
    n2 = float(np.sum(X ** 2))
    return X * (n2 - 1.0) + Y ** 2 / sd, Y * (n2 - X / sd)


def vectfield_residual(sys: QuadraticSystem, traj: Trajectory, h: float = 1e-3,
                       samples: int = 50) -> float:
    """Max deviation of the frame's s-derivative from :func:`vectfield_rhs`.

    Derivatives in t are central differences of the dense output; dividing by
    u_{r+1} converts them to the s-derivative.
    """
    lo, hi = traj.times[0] + h, traj.times[-1] - h
    if hi <= lo:
        raise ValueError("trajectory too short for central differences")
    worst = 0.0
    for t in np.linspace(lo, hi, samples):
        fm = geometric_frame(sys, traj.at(t - h))
        fp = geometric_frame(sys, traj.at(t + h))
        f0 = geometric_frame(sys, traj.at(t))
        dX = (fp.X - fm.X) / (2 * h) / f0.w
        dY = (fp.Y - fm.Y) / (2 * h) / f0.w
        rX, rY = vectfield_rhs(f0.X, f0.Y, sys.dims)
        worst = max(worst, float(np.max(np.abs(dX - rX))), float(np.max(np.abs(dY - rY))))
    return worst


# --- limits as t -> 0 ----------------------------------------------------------------

def richardson_limit(ts: Sequence[float], values: Sequence[float],
                     powers: Sequence[float]) -> float:
    """Solve F(t_k) = L + sum_m c_m t_k^p_m for L (one equation per sample)."""
    ts = np.asarray(ts, dtype=float)
    if len(ts) != len(powers) + 1:
        raise ValueError("need one more sample than correction powers")
    A = np.column_stack([np.ones_like(ts)] + [ts ** p for p in powers])
    return float(np.linalg.solve(A, np.asarray(values, dtype=float))[0])


def frame_limits(sol: SeriesSolution, ts: Sequence[float] = (1e-2, 1e-3, 1e-4)):
    """Extrapolated t -> 0 limits of X_i and Y_i along the series."""
    sys = sol.system
    r = len(sys.dims)
    Q = float(sol.step)
    frames = [geometric_frame(sys, eval_series(sol, t)) for t in ts]
    X = [richardson_limit(ts, [f.X[i] for f in frames], [Q, 2 * Q]) for i in range(r)]
    Y = []
    for i in range(r):
        p = float(sol.exponents[i]) / 2 + 1
        powers = [Q, 2 * Q] if p == 0 else [p, p + Q]
        Y.append(richardson_limit(ts, [f.Y[i] for f in frames], powers))
    return np.array(X), np.array(Y)


def expected_frame_limits(sol: SeriesSolution):
    """Equilibrium values the frame approaches at the singularity.

    A pole factor (x_i ~ t^-2) tends to (sqrt(d_i)/e0, sqrt(a_{i,0})/e0), which
    for one factor is (1/sqrt(d_1), sqrt(1 - 1/d_1)).  A factor with
    x_i ~ t^alpha_i, alpha_i > -2, tends to (-alpha_i sqrt(d_i)/2, 0), and a
    factor with x_i ~ t^0 to (0, 0).
    """
    sys = sol.system
    r = len(sys.dims)
    lead = [float(c[0]) for c in sol.coefficients]
    w0 = lead[2 * r + 1]
    X, Y = [], []
    for i, d in enumerate(sys.dims):
        a = sol.exponents[i]
        if a == -2:
            X.append(math.sqrt(d) * lead[r + 1 + i] / w0)
            Y.append(math.sqrt(lead[i]) / w0)
        elif a == 0:
            X.append(0.0)
            Y.append(0.0)
        else:
            X.append(-float(a) * math.sqrt(d) / 2)
            Y.append(0.0)
    return np.array(X), np.array(Y)


# --- validation report ---------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: dict

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.detail}


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"schema": 1, "passed": self.passed, "checks": [c.to_json() for c in self.checks]}


def _is_constant(sol: SeriesSolution) -> bool:
    return sol.balance is None and sol.order == 0 and all(e == 0 for e in sol.exponents)


def validate_series(sol: SeriesSolution, ts: Sequence[float] = (0.1, 0.05, 0.025),
                    slope_tol: float = 0.5, t0: float = 0.05, drift_tol: float = 1e-8,
                    identity_tol: float = 1e-8) -> ValidationReport:
    """Run every numeric and exact check that applies to ``sol``."""
    from .recursion import constraint_series

    sys = sol.system
    checks: list[Check] = []

    bad = []
    for j, coeffs in enumerate(residual_series(sol)):
        bad += [(sys.names[j], e, v) for e, v in coeffs if v != 0]
    checks.append(Check("formal_residual", not bad,
                        {"nonzero": [[n, str(e), str(v)] for n, e, v in bad[:5]]}))

    if _is_constant(sol):
        res = max(ode_residual(sol, sys, t) for t in ts)
        checks.append(Check("residual", res == 0.0, {"max": res}))
        g = sys.eval_constraint([c[0] for c in sol.coefficients])
        checks.append(Check("constraint", True, {"skipped": "constant solution",
                                                 "G": str(g)}))
        return ValidationReport(checks)

    # exact constraint coefficients along the series
    nonzero = [(e, v) for e, v in constraint_series(sol) if v != 0]
    checks.append(Check("constraint", not nonzero,
                        {"first_nonzero": None if not nonzero else
                         [str(nonzero[0][0]), str(nonzero[0][1])]}))

    expected = residual_order(sol)
    res = [ode_residual(sol, sys, t) for t in ts]
    if expected is None:
        checks.append(Check("residual_slope", max(res) < 1e-30, {"residuals": res}))
    else:
        slope = fit_slope(ts, res)
        checks.append(Check("residual_slope", abs(slope - float(expected)) <= slope_tol,
                            {"slope": slope, "expected": float(expected), "residuals": res}))

    t_max = default_t_max(sol)
    start = min(t0, t_max)
    y0 = eval_series(sol, start)
    traj = integrate(sys, y0, (start, 2 * start))
    drift = constraint_drift(sys, traj)
    checks.append(Check("constraint_drift", drift <= drift_tol and traj.completed,
                        {"drift": drift, "t0": start, "t1": 2 * start,
                         "reason": traj.reason}))

    if sys.kind == "warped":
        try:
            frames = [geometric_frame(sys, s) for s in traj.states]
        except FrameError as exc:
            checks.append(Check("lyapunov", False, {"error": str(exc)}))
        else:
            gap = max(abs(f.identity_gap) for f in frames)
            neg = all(f.lyapunov < 0 for f in frames)
            checks.append(Check("lyapunov", neg and (not sol.h0_projected or gap <= identity_tol),
                                {"identity_gap": gap, "negative": neg}))
            try:
                Xl, Yl = frame_limits(sol)
                Xe, Ye = expected_frame_limits(sol)
                err = float(max(np.max(np.abs(Xl - Xe)), np.max(np.abs(Yl - Ye))))
                checks.append(Check("equilibrium_limits", err <= 1e-4 or sol.step < Fraction(2, 3),
                                    {"error": err, "X": Xl.tolist(), "Y": Yl.tolist(),
                                     "expected_X": Xe.tolist(), "expected_Y": Ye.tolist(),
                                     "informational": sol.step < Fraction(2, 3)}))
            except FrameError as exc:
                checks.append(Check("equilibrium_limits", False, {"error": str(exc)}))
    return ValidationReport(checks)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)
