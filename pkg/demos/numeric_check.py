"""Numerical cross-check of a formal series.

Builds the H=0 series for the d1=3 balance, shows the ODE residual shrinking
like t^k as t -> 0, integrates forward from t0 = 0.05 and reports constraint
drift and the Lyapunov-style quantity in the geometric frame.
"""

import numpy as np

from painleve_soliton import balances_one_factor, run
from painleve_soliton.numeric import (constraint_drift, eval_series, fit_slope,
                                      frame_limits, geometric_frame, integrate, ode_residual,
                                      residual_order)

sol = run(balances_one_factor(3)[0], {"b0": 1})
print("order N =", sol.order, " lambda =", sol.lam)

ts = [0.1, 0.05, 0.025]
res = [ode_residual(sol, sol.system, t) for t in ts]
for t, r in zip(ts, res):
    print(f"  t={t:<6} residual={r:.3e}")
print("fitted slope", round(fit_slope(ts, res), 3), "expected", residual_order(sol))

traj = integrate(sol.system, eval_series(sol, 0.05), (0.05, 0.1), rtol=1e-10, atol=1e-12)
print("steps", traj.stats.steps, "rejected", traj.stats.rejected,
      "drift", f"{constraint_drift(sol.system, traj):.2e}")

frames = [geometric_frame(sol.system, s) for s in traj.states]
print("max |identity gap|", max(abs(f.identity_gap) for f in frames))
print("L < 0 everywhere:", all(f.lyapunov < 0 for f in frames))

X, Y = frame_limits(sol)
print("frame limits X, Y:", X, Y, " equilibrium:", 1 / np.sqrt(3), np.sqrt(2 / 3))
