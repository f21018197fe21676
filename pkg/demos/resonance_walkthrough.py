"""Resonance structure of the warped-product soliton system.

Walks through the one-factor balance, the dimension-4 square-root balance
and a two-factor point on the ellipsoid, printing det X(iota), the roots and
the H=0 projection value lambda.

    python3 demos/resonance_walkthrough.py
"""

from fractions import Fraction

from painleve_soliton import (balance_dos, balance_multi_caseII, balances_one_factor,
                              resonance_report, run)


def show(bal, params=None):
    rep = resonance_report(bal, params)
    print(f"{bal.label:>10} dims={list(bal.dims)}  det = {rep.det_polynomial}")
    print("            roots:", ", ".join(f"{r} (x{m})" for r, m in rep.roots))
    print("            top resonance:", rep.top, "at step", rep.top_step)


# single factor: pole of order 2 in x_1, resonances -(d1-1), -1, 0, 2
for d in (2, 3, 5):
    bal = balances_one_factor(d)[0]
    show(bal)
    sol = run(bal, {"b0": 1})
    print("            lambda =", sol.lam, " census =", sol.parameter_count)

print()
# d1 a perfect square admits the extra branch; alpha = -1 for d1 = 4
for a0 in (1, 2, Fraction(1, 3)):
    sol = run(balance_dos(4, "minus"), {"a_{1,0}": a0, "b0": 1}, N=2)
    print(f"dos d1=4 a0={a0}: step-2 vector", [str(c[2]) for c in sol.coefficients])

print()
bal = balance_multi_caseII([2, 4], [Fraction(-4, 3), Fraction(-1, 3)])
show(bal)
sol = run(bal, {"a_{1,0}": 1, "a_{2,0}": 1, "b0": 1})
for name in ("x1", "u1", "u3"):
    terms = [f"{sol.coefficient(name, k)}" for k in (0, bal.shifts[0], 2 * bal.shifts[0])]
    print(f"  {name}: ", terms)
