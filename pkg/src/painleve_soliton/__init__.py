"""Painleve analysis of the cohomogeneity-one steady gradient Ricci soliton ODEs.

Exact rational machinery (systems, balances, resonances, coefficient
recursion, rational points on ellipsoids) plus floating-point validation of
the resulting series.
"""

from .balances import (Balance, BalanceList, Verdict, balance_bb, balance_dos,
                       balance_multi_caseI, balance_multi_caseII, balances_one_factor,
                       validate_balance)
from .ellipsoid import (EllipsoidPoint, QuadricSpec, enumerate_points, modular_obstruction,
                        search_points, secant_family, secant_point)
from .expr import Expr, UnboundParameterError
from .rational import (AffineSolutionSet, DimensionError, QMatrix, QPolynomial, Rational,
                       det, det_poly, kernel, rank, rref, solve_affine, to_rational)
from .recursion import (CompatibilityError, GridError, ProjectionError, RecursionState,
                        ResonanceEvent, ResonanceReport, SeriesSolution, advance,
                        constraint_series, project_H0, resonance_matrix, resonance_report,
                        residual_series, rhs_at_step, run)
from .systems import (InvalidDimensionError, QuadraticSystem, Term, build_bb_system,
                      build_system, build_warped_system, eval_constraint, eval_rhs)

__version__ = "0.1.0"
