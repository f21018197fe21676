"""One test per acceptance criterion.

Each test prints a single PASS/FAIL line (run with ``-s`` to see them inline);
the terminal summary repeats them.  Tolerances are pinned here.
"""

import math
import time
from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest

from oracles import formal_residual, proportional
from painleve_soliton.balances import (balance_bb, balance_dos, balance_multi_caseI,
                                       balance_multi_caseII, balances_one_factor)
from painleve_soliton.ellipsoid import (QuadricSpec, enumerate_points, modular_obstruction,
                                        search_points)
from painleve_soliton.numeric import (constraint_drift, eval_series, fit_slope,
                                      frame_limits, geometric_frame, integrate, ode_residual)
from painleve_soliton.rational import QPolynomial, kernel, rank
from painleve_soliton.recursion import (RecursionState, advance, resonance_matrix,
                                        resonance_report, rhs_at_step, run)

DET_SECONDS = 1.0
RESIDUAL_SECONDS = 60.0
ELLIPSOID_SECONDS = 10.0
SLOPE_TOL = 0.5
DRIFT_TOL = 1e-8
IDENTITY_TOL = 1e-8
LIMIT_TOL = 1e-4
INTEGRATOR_RTOL = 1e-10
SLOPE_TS = (0.1, 0.05, 0.025)
RICHARDSON_TS = (1e-2, 1e-3, 1e-4)

A1, A2 = "a_{1,0}", "a_{2,0}"
iv = QPolynomial([0, 1])  # the resonance variable


def lin(c):
    """iota + c"""
    return QPolynomial([c, 1])


def announce(number, title, checks):
    ok = all(passed for _, passed in checks)
    print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
    for name, passed in checks:
        if not passed:
            print(f"    failed: {name}")
    assert ok, [name for name, passed in checks if not passed]


def timed_report(bal, params=None):
    start = time.perf_counter()
    rep = resonance_report(bal, params)
    return rep, time.perf_counter() - start


def _caseII_grid():
    grid = []
    for r in (1, 2, 3):
        for dims in product((2, 3, 4, 9), repeat=r):
            for l in range(1, r + 1):
                pts = enumerate_points(QuadricSpec(dims[:l]), 5)
                for p in pts[:2]:
                    grid.append((dims, p))
    return grid


@pytest.mark.acceptance(1, "determinant factorizations")
def test_criterion_1_determinant_factorizations():
    checks = []
    slow = []

    def check(name, bal, expected, params=None):
        rep, secs = timed_report(bal, params)
        checks.append((name, rep.det_polynomial == expected))
        if secs >= DET_SECONDS:
            slow.append((name, secs))

    for d in range(2, 11):
        bal = balances_one_factor(d)[0]
        expected = iv * lin(d - 1) * lin(1) * lin(-2)
        check(f"uno d1={d}", bal, expected)
        check(f"uno d1={d} b0=3/2", bal, expected, {"b0": F(3, 2)})
    for d in (4, 9):
        for sign in ("minus", "plus"):
            for a0 in (1, F(5, 2)):
                check(f"dos d1={d} {sign} a0={a0}", balance_dos(d, sign),
                      iv ** 2 * lin(1) * lin(-2), {A1: a0, "b0": 1})
    for r in (1, 2, 3):
        for dims in product((2, 3, 4), repeat=r):
            for l in range(1, r + 1):
                e0 = sum(dims[:l])
                p = QPolynomial([2 * (e0 - 1), e0 - 1, 1])
                expected = (iv ** (r - l + 1) * lin(1) * lin(-2) * lin(e0 + 1) ** (r - l)
                            * lin(e0 - 1) * p ** (l - 1))
                check(f"caseI dims={dims} l={l}", balance_multi_caseI(dims, l), expected)
    grid = _caseII_grid()
    assert len(grid) > 20
    for dims, point in grid:
        r, l = len(dims), len(point)
        expected = iv ** (r + l) * lin(1) * lin(2) ** (r - l) * lin(-2)
        check(f"caseII dims={dims} point={point.to_json()}",
              balance_multi_caseII(dims, point), expected)
    for d2 in (2, 4, 6):
        check(f"bb d2={d2}", balance_bb(d2), iv ** 3 * lin(2) * lin(1) * lin(-2))
    checks.append((f"each factorization under {DET_SECONDS}s {slow}", not slow))
    announce(1, "determinant factorizations", checks)


@pytest.mark.acceptance(2, "kernel vectors")
def test_criterion_2_kernel_vectors():
    checks = []
    for d in range(2, 7):
        for b0 in (F(1), F(3, 2)):
            M = resonance_matrix(balances_one_factor(d)[0], {"b0": b0}, 2)
            basis = kernel(M)
            checks.append((f"uno d1={d} b0={b0}",
                           len(basis) == 1 and proportional(basis[0], [d - 1, b0, F(-1, d), 2])))
    for d2 in (2, 4, 6):
        M = resonance_matrix(balance_bb(d2), balance_bb(d2).default_params(), 2)
        basis = kernel(M.transpose())
        checks.append((f"bb d2={d2} left kernel",
                       rank(M) == 5 and len(basis) == 1
                       and proportional(basis[0], [0, 0, 0, 0, 1, 1])))
    announce(2, "kernel vectors", checks)


@pytest.mark.acceptance(3, "H=0 projection values")
def test_criterion_3_projection_values():
    checks = []
    for d in range(2, 11):
        for b0 in (1, F(-2, 3)):
            lam = run(balances_one_factor(d)[0], {"b0": b0}, N=3).lam
            checks.append((f"uno d1={d} b0={b0}", lam == F(1, 3 * (d + 1))))
    # alpha > 0 for every square d1; alpha < 0 for d1 > 4
    for d, sign in [(4, "plus"), (9, "plus"), (16, "plus"), (9, "minus"), (16, "minus"),
                    (25, "minus")]:
        bal = balance_dos(d, sign)
        top = int(2 / bal.step)
        for a0, b0 in ((1, 1), (3, F(1, 2))):
            lam = run(bal, {A1: a0, "b0": b0}, N=top).lam
            checks.append((f"dos d1={d} {sign} a0={a0}", lam == F(1, 6)))
    # case II with r = l and alpha_1 > 0 or -1 < alpha_1 < 0
    for dims, point in [((2, 2), (1, 1)), ((2, 2), (F(-1, 5), F(7, 5))),
                        ((2, 2, 2), (F(-1, 3), F(1, 3), F(4, 3)))]:
        bal = balance_multi_caseII(dims, point)
        lam = run(bal, {**bal.default_params(), A1: 2}, N=int(2 / bal.step)).lam
        checks.append((f"caseII dims={dims} point={point}", lam == F(1, 6)))
    # d1 = 4, alpha = -1: decompose v_2 against (0, a0^2 b0/8, 0, 0) + lam (a0, 2 b0, -1, 4)
    for a0 in (1, 2, 3, F(1, 3)):
        for b0 in (1, F(5, 2)):
            sol = run(balance_dos(4, "minus"), {A1: a0, "b0": b0}, N=2)
            v2 = [c[2] for c in sol.coefficients]
            lam = v2[3] / 4
            a0, b0 = F(a0), F(b0)
            expected = [lam * a0, a0 ** 2 * b0 / 8 + 2 * b0 * lam, -lam, 4 * lam]
            checks.append((f"dos d1=4 minus a0={a0} b0={b0}",
                           v2 == expected and lam == (4 - a0 ** 2) / 48))
    for dims, l in [((2, 3), 1), ((3, 2, 2), 1), ((2, 2, 3), 2)]:
        r = len(dims)
        e0 = sum(dims[:l])
        for values in product((0, 1, 2), repeat=r - l):
            params = {"b0": 1, **{f"a_{{{k + 1},0}}": v for k, v in zip(range(l, r), values)}}
            lam = run(balance_multi_caseI(dims, l), params, N=3).lam
            checks.append((f"caseI dims={dims} l={l} a={values}",
                           lam == F(1 + sum(values), 3 * (e0 + 1))))
    announce(3, "H=0 projection values", checks)


@pytest.mark.acceptance(4, "hand-computed coefficients")
def test_criterion_4_hand_coefficients():
    checks = []
    bal = balance_multi_caseII([2, 4], [F(-4, 3), F(-1, 3)])
    sol = run(bal, {A1: 1, A2: 1, "b0": 1})
    s1 = bal.shifts[0]
    got = [sol.coefficient("x1", s1), sol.coefficient("u1", s1), sol.coefficient("u3", s1),
           sol.coefficient("u1", 2 * s1), sol.coefficient("u3", 2 * s1)]
    checks.append(("caseII (2,4) coefficients",
                   got == [F(-9, 20), F(3, 20), F(3, 5), F(-351, 5600), F(-243, 700)]))
    for a0, b0 in ((1, 1), (F(5, 3), 2)):
        st = RecursionState(balance_dos(4, "minus"), {A1: a0, "b0": b0})
        advance(st, 1)
        checks.append((f"dos d1=4 v1 a0={a0} b0={b0}",
                       st.vector(1) == [0, F(a0) * b0 / 2, 0, F(a0) / 2]))
    for d2 in (2, 4):
        a1, a2, b0 = F(3), F(2), F(5)
        st = RecursionState(balance_bb(d2), {A1: a1, A2: a2, "b0": b0})
        advance(st, 1)
        c1 = a1 / (2 * d2)
        stated = [a1 * c1, -4 * a2 * c1, 0, 2 * a2 / d2, 0, 0]
        checks.append((f"bb d2={d2} step-2 rhs equals the stated vector", rhs_at_step(st, 2) == stated))
    announce(4, "hand-computed coefficients", checks)


def _census_grid():
    out = [(balances_one_factor(d)[0], {}, 3) for d in (2, 3, 5, 8)]
    out += [(balance_dos(d, s), {}, 4) for d in (4, 9) for s in ("minus", "plus")]
    for dims in ((2, 3), (2, 2), (3, 2, 4)):
        for l in range(1, len(dims) + 1):
            out.append((balance_multi_caseI(dims, l), {}, len(dims) - l + 3))
    for dims, point in [((2, 2), (-1, -1)), ((2, 2), (1, -1)), ((2, 4), (F(-4, 3), F(-1, 3))),
                        ((2, 2, 3), (-1, -1)), ((2, 2), (F(-1, 5), F(7, 5)))]:
        out.append((balance_multi_caseII(dims, point), {}, len(dims) + 3))
    out += [(balance_bb(d2), {}, 5) for d2 in (2, 4, 6)]
    return out


@pytest.mark.acceptance(5, "compatibility at the top resonance and parameter census")
def test_criterion_5_compatibility_and_census():
    checks = []
    for bal, extra, count in _census_grid():
        sol = run(bal, {**bal.default_params(), **extra}, N=int(2 / bal.step) + 2)
        top = [e for e in sol.resonance_log if e.step == sol.top_step]
        checks.append((f"{bal.label} {bal.dims} compatible at top",
                       len(top) == 1 and top[0].compatible))
        checks.append((f"{bal.label} {bal.dims} census {sol.parameter_count} == {count}",
                       sol.parameter_count == count))
    announce(5, "compatibility at the top resonance and parameter census", checks)


def _representative_series():
    cases = [
        (balances_one_factor(2)[0], {}),
        (balances_one_factor(3)[0], {"b0": F(1, 2)}),
        (balance_dos(4, "minus"), {A1: 3}),
        (balance_dos(4, "plus"), {}),
        (balance_dos(9, "plus"), {}),
        (balance_multi_caseI([2, 3], 1), {A2: 2}),
        (balance_multi_caseI([2, 2], 2), {}),
        (balance_multi_caseII([2, 2], [-1, -1]), {A2: 2}),
        (balance_multi_caseII([2, 4], [F(-4, 3), F(-1, 3)]), {}),
        (balance_bb(2), {"b0": 3}),
    ]
    return [run(bal, {**bal.default_params(), **extra}) for bal, extra in cases]


@pytest.mark.acceptance(6, "residual property suite")
def test_criterion_6_residuals():
    start = time.perf_counter()
    checks = []
    for sol in _representative_series():
        name = f"{sol.balance.label} {sol.balance.dims}"
        assert sol.h0_projected and sol.order == math.ceil(12 / sol.step)
        cap = max(sol.exponents) + (sol.order + 6) * sol.step
        res = formal_residual(sol.system, sol.exponents, sol.step, sol.coefficients, cap)
        exact = all(all(e > sol.exponents[j] - 1 + sol.order * sol.step for e in coeffs)
                    for j, coeffs in enumerate(res))
        checks.append((f"{name} exact zeros through step N", exact))
        first = min(min(c) for c in res if c)
        values = [ode_residual(sol, sol.system, t) for t in SLOPE_TS]
        slope = fit_slope(SLOPE_TS, values)
        checks.append((f"{name} slope {slope:.3f} vs {float(first):.3f}",
                       abs(slope - float(first)) <= SLOPE_TOL))
    elapsed = time.perf_counter() - start
    checks.append((f"runtime {elapsed:.1f}s", elapsed <= RESIDUAL_SECONDS))
    announce(6, "residual property suite", checks)


def _expected_limits(sol):
    bal = sol.balance
    X, Y = [], []
    for i, d in enumerate(bal.dims):
        a = bal.exponents[i]
        if bal.family == "uno":
            X.append(1 / math.sqrt(d))
            Y.append(math.sqrt(1 - 1 / d))
        else:
            X.append(-float(a) * math.sqrt(d) / 2)
            Y.append(0.0)
    return np.array(X), np.array(Y)


@pytest.mark.acceptance(7, "constraint drift, Lyapunov identity and frame limits")
def test_criterion_7_constraint_and_lyapunov():
    checks = []
    warped = [s for s in _representative_series() if s.system.kind == "warped"]
    for sol in warped:
        name = f"{sol.balance.label} {sol.balance.dims}"
        for t0 in (0.05, 0.1):
            traj = integrate(sol.system, eval_series(sol, t0), (t0, 2 * t0),
                             rtol=INTEGRATOR_RTOL, atol=1e-12)
            drift = constraint_drift(sol.system, traj)
            frames = [geometric_frame(sol.system, s) for s in traj.states]
            gap = max(abs(f.identity_gap) for f in frames)
            checks.append((f"{name} t0={t0} completed", traj.completed))
            checks.append((f"{name} t0={t0} drift {drift:.2e}", drift <= DRIFT_TOL))
            checks.append((f"{name} t0={t0} identity gap {gap:.2e}", gap <= IDENTITY_TOL))
            checks.append((f"{name} t0={t0} L < 0", all(f.lyapunov < 0 for f in frames)))
    limit_cases = [run(balances_one_factor(d)[0], {"b0": 1}) for d in (2, 3, 5)]
    limit_cases += [run(balance_multi_caseII([2, 2], [-1, -1]), {A1: 1, A2: 1, "b0": 1}),
                    run(balance_dos(4, "minus"), {A1: 1, "b0": 1}),
                    run(balance_dos(9, "minus"), {A1: 1, "b0": 1})]
    for sol in limit_cases:
        X, Y = frame_limits(sol, RICHARDSON_TS)
        Xe, Ye = _expected_limits(sol)
        err = float(max(np.max(np.abs(X - Xe)), np.max(np.abs(Y - Ye))))
        checks.append((f"{sol.balance.label} {sol.balance.dims} limit error {err:.1e}",
                       err <= LIMIT_TOL))
    announce(7, "constraint drift, Lyapunov identity and frame limits", checks)


@pytest.mark.acceptance(8, "ellipsoid points and obstructions")
def test_criterion_8_ellipsoid():
    start = time.perf_counter()
    checks = []
    spec = QuadricSpec((2, 2))
    pts = {p.coordinates for p in enumerate_points(spec, 5)}
    units = {(F(a), F(b)) for a, b in product((-1, 1), repeat=2)}
    checks.append(("(2,2) contains (+-1,+-1)", units <= pts))
    checks.append((f"(2,2) has {len(pts - units)} further points", len(pts - units) >= 8))
    checks.append(("(2,2) points exact and nonzero",
                   all(spec.contains(p) and all(p) for p in pts)))
    spec7 = QuadricSpec((7, 7, 7))
    checks.append(("(7,7,7) empty at bound 20", search_points(spec7, 20).points == []))
    checks.append(("(7,7,7) obstructed mod 8", modular_obstruction(spec7, 8) == "obstructed"))
    having = [d for d in range(2, 11) if enumerate_points(QuadricSpec((d,)), 5)]
    checks.append((f"one coordinate: points for {having}", having == [4, 9]))
    elapsed = time.perf_counter() - start
    checks.append((f"runtime {elapsed:.1f}s", elapsed <= ELLIPSOID_SECONDS))
    announce(8, "ellipsoid points and obstructions", checks)
