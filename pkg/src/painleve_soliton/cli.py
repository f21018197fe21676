"""Command-line front end.

    painleve-soliton resonances --system warped --dims 5 --family uno
    painleve-soliton series --system warped --dims 4 --family dos --sign minus --a0 2 --h0
    painleve-soliton validate --input series.json
    painleve-soliton ellipsoid --dims 7,7,7 --bound 20 --moduli 8

Reports are JSON (``"schema": 1``) with sorted keys and no timestamps, so the
same request always produces the same bytes.  Exit codes: 0 success,
2 invalid input, 3 compatibility failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from .balances import (Balance, balance_bb, balance_dos, balance_multi_caseI,
                       balance_multi_caseII, balances_one_factor)
from .ellipsoid import QuadricSpec, modular_obstruction, search_points
from .expr import UnboundParameterError
from .rational import format_rational, to_rational
from .recursion import (CompatibilityError, ProjectionError, SeriesSolution,
                        constraint_series, resonance_report, run)
from .systems import InvalidDimensionError, build_system

EXIT_OK, EXIT_INPUT, EXIT_COMPAT, EXIT_VALIDATION = 0, 2, 3, 4

log = logging.getLogger("painleve_soliton")


class InputError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}")


def _rational(text: str) -> Fraction:
    try:
        return to_rational(text)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc))


def _rational_list(text: str) -> list[Fraction]:
    return [_rational(x) for x in text.split(",") if x.strip()]


def select_balance(args) -> Balance:
    if args.system == "bb":
        d2 = args.d2 if args.d2 is not None else (_int_list(args.dims)[0] if args.dims else None)
        if d2 is None:
            raise InputError("--d2 is required for the bb system")
        return balance_bb(d2)
    if not args.dims:
        raise InputError("--dims is required for the warped system")
    dims = _int_list(args.dims)
    family = args.family or ("uno" if len(dims) == 1 else "caseI")
    if family == "uno":
        if len(dims) != 1:
            raise InputError("family uno needs exactly one dimension")
        return balances_one_factor(dims[0])[0]
    if family == "dos":
        if len(dims) != 1:
            raise InputError("family dos needs exactly one dimension")
        try:
            return balance_dos(dims[0], args.sign)
        except ValueError as exc:
            raise InputError(str(exc))
    if family == "caseI":
        return balance_multi_caseI(dims, args.l)
    if family == "caseII":
        if not args.point:
            raise InputError("family caseII needs --point")
        return balance_multi_caseII(dims, _rational_list(args.point))
    raise InputError(f"family {family!r} does not apply to the warped system")


def bind_params(bal: Balance, args) -> dict[str, Fraction]:
    """Defaults b0 = 1 and a_{i,0} = 1, overridden by --a0, --b0, --param."""
    params = bal.default_params()
    if args.a0 is not None:
        params["a_{1,0}"] = _rational(args.a0)
    if args.b0 is not None:
        params["b0"] = _rational(args.b0)
    for item in args.param or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--param expects name=value, got {item!r}")
        params[name.strip()] = _rational(value)
    unknown = sorted(set(params) - set(bal.free_parameters))
    if unknown:
        raise InputError(f"{bal.label} has no parameter(s) {', '.join(unknown)}; "
                         f"free parameters are {', '.join(bal.free_parameters)}")
    return params


def _choices(args) -> dict[int, object]:
    out = {}
    for item in args.resonance or []:
        step, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--resonance expects STEP=LAMBDA or STEP=v1,v2,..., got {item!r}")
        vals = _rational_list(value)
        out[int(step)] = vals[0] if len(vals) == 1 else vals
    return out


def _request(args, bal: Balance | None, params=None) -> dict:
    req = {"command": args.command}
    if bal is not None:
        req.update(system=bal.system_kind, family=bal.family, label=bal.label,
                   dims=list(bal.dims))
    if params is not None:
        req["params"] = {k: format_rational(v) for k, v in sorted(params.items())}
    return req


# --- commands --------------------------------------------------------------------

def cmd_resonances(args) -> tuple[int, dict]:
    bal = select_balance(args)
    params = bind_params(bal, args)
    rep = resonance_report(bal, params, bound=args.bound)
    return EXIT_OK, {"request": _request(args, bal, params), "result": rep.to_json()}


def _build_series(args):
    bal = select_balance(args)
    params = bind_params(bal, args)
    choices = _choices(args)
    sol = run(bal, params, N=args.N, auto_H0=args.h0, choices=choices)
    return bal, params, sol


def cmd_series(args) -> tuple[int, dict]:
    try:
        bal, params, sol = _build_series(args)
    except CompatibilityError as exc:
        event = exc.state.event_at(exc.step)
        return EXIT_COMPAT, {"request": _request(args, exc.state.balance, exc.state.params),
                             "error": str(exc),
                             "event": None if event is None else event.to_json()}
    table = [{"exponent": format_rational(e), "coeff": format_rational(v)}
             for e, v in constraint_series(sol)]
    return EXIT_OK, {"request": _request(args, bal, params), "result": sol.to_json(),
                     "constraint_coefficients": table}


def _perturbed(sol: SeriesSolution, delta: Fraction) -> SeriesSolution:
    if sol.top_step is None or sol.lam is None:
        raise InputError("series has no top-resonance parameter to perturb")
    return run(sol.balance, sol.params, N=sol.order, auto_H0=False,
               choices={sol.top_step: sol.lam + delta})


def cmd_validate(args) -> tuple[int, dict]:
    from .numeric import eval_series, integrate, validate_series

    if args.input:
        try:
            with open(args.input) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read {args.input}: {exc}")
        sol = SeriesSolution.from_json(data.get("result", data))
        req = {"command": "validate", "input": args.input}
    elif args.equilibrium:
        dims = [args.d2] if args.system == "bb" else _int_list(args.dims or "")
        system = build_system(args.system, dims)
        sol = SeriesSolution.constant(system, [0] * system.n_vars)
        req = {"command": "validate", "system": args.system, "dims": dims,
               "equilibrium": "zero"}
    else:
        _, _, sol = _build_series(args)
        req = _request(args, sol.balance, sol.params)
    if args.perturb is not None:
        sol = _perturbed(sol, _rational(args.perturb))
        req["perturb"] = args.perturb
    report = validate_series(sol)
    if args.trajectory_out and sol.balance is not None:
        y0 = eval_series(sol, args.t0)
        traj = integrate(sol.system, y0, (args.t0, 2 * args.t0))
        with open(args.trajectory_out, "w") as fh:
            fh.write(traj.to_csv())
    code = EXIT_OK if report.passed else EXIT_VALIDATION
    return code, {"request": req, "result": report.to_json()}


def cmd_ellipsoid(args) -> tuple[int, dict]:
    spec = QuadricSpec(_int_list(args.dims))
    search = search_points(spec, args.bound)
    verdicts = {str(m): modular_obstruction(spec, m) for m in _int_list(args.moduli or "")}
    return EXIT_OK, {
        "request": {"command": "ellipsoid", "dims": list(spec.dims), "bound": args.bound},
        "result": {"points": [p.to_json() for p in search.points],
                   "count": len(search.points),
                   "zero_coordinate_points": search.zero_coordinate_count,
                   "obstructions": verdicts},
    }


# --- text output -----------------------------------------------------------------

def _text(payload: dict) -> str:
    req, res = payload.get("request", {}), payload.get("result")
    lines = [" ".join(f"{k}={v}" for k, v in req.items() if k != "params")]
    if "params" in req:
        lines.append("params: " + ", ".join(f"{k}={v}" for k, v in req["params"].items()))
    if "error" in payload:
        lines.append("error: " + payload["error"])
        return "\n".join(lines) + "\n"
    cmd = req.get("command")
    if cmd == "resonances":
        lines.append(f"det X(iota) = {res['det_polynomial']}   (iota = i*Q, Q = {res['Q']})")
        for root in res["roots"]:
            lines.append(f"  iota = {root['iota']:>6}  x{root['multiplicity']}  {root['class']}")
        if res["residual"] != "1":
            lines.append(f"  residual factor without rational roots: {res['residual']}")
    elif cmd == "series":
        lines.append(f"N = {res['N']}, Q = {res['Q']}, lambda = {res['lambda']}, "
                     f"parameters = {res['parameter_count']}")
        for name, terms in res["variables"].items():
            body = " + ".join(f"({t['coeff']}) t^{t['exponent']}"
                              for t in terms if t["coeff"] != "0")
            lines.append(f"  {name} = {body or '0'}")
        nz = [c for c in payload["constraint_coefficients"] if c["coeff"] != "0"]
        lines.append("constraint coefficients: " +
                     ("all zero" if not nz else ", ".join(f"t^{c['exponent']}: {c['coeff']}"
                                                          for c in nz)))
    elif cmd == "validate":
        for c in res["checks"]:
            lines.append(f"  {'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
        lines.append("overall: " + ("PASS" if res["passed"] else "FAIL"))
    elif cmd == "ellipsoid":
        lines.append(f"{res['count']} points")
        for p in res["points"]:
            lines.append("  (" + ", ".join(p) + ")")
        for m, v in res["obstructions"].items():
            lines.append(f"  mod {m}: {v}")
    return "\n".join(lines) + "\n"


# --- parser ------------------------------------------------------------------------

def _add_selection(p):
    p.add_argument("--system", choices=["warped", "bb"], default="warped")
    p.add_argument("--dims", help="comma-separated factor dimensions, e.g. 2,3")
    p.add_argument("--d2", type=int, help="base dimension for the bb system")
    p.add_argument("--family", choices=["uno", "dos", "caseI", "caseII"])
    p.add_argument("--sign", choices=["plus", "minus"], default="minus",
                   help="sign of alpha for the dos family")
    p.add_argument("--l", type=int, default=1, help="number of pole factors (caseI)")
    p.add_argument("--point", help="ellipsoid point for caseII, e.g. -4/3,-1/3")
    p.add_argument("--a0", help="value of a_{1,0}")
    p.add_argument("--b0", help="value of b0")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="bind any free parameter, e.g. a_{2,0}=3")


def _add_series_opts(p):
    p.add_argument("--N", type=int, default=None, help="truncation order (default ceil(12/Q))")
    p.add_argument("--h0", action="store_true", help="solve the top resonance for H = 0")
    p.add_argument("--resonance", action="append", metavar="STEP=VALUE",
                   help="kernel choice at a resonant step: a scalar lambda or a vector")


def _add_output(p):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "text"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="painleve-soliton",
        description="Exact Painleve analysis of the steady soliton ODE systems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resonances", help="det X as a polynomial and its rational roots")
    _add_selection(p)
    p.add_argument("--bound", type=int, default=0,
                   help="also scan integer steps 1..BOUND for singular X")
    _add_output(p)

    p = sub.add_parser("series", help="run the coefficient recursion")
    _add_selection(p)
    _add_series_opts(p)
    _add_output(p)

    p = sub.add_parser("validate", help="numeric and exact checks of a series")
    _add_selection(p)
    _add_series_opts(p)
    p.add_argument("--input", help="series JSON produced by the series command")
    p.add_argument("--equilibrium", action="store_true",
                   help="validate the zero equilibrium of the chosen system")
    p.add_argument("--perturb", help="add this rational to the top-resonance lambda")
    p.add_argument("--t0", type=float, default=0.05)
    p.add_argument("--trajectory-out", help="write the integrated trajectory as CSV")
    _add_output(p)

    p = sub.add_parser("ellipsoid", help="rational points on sum d_k a_k^2 = 4")
    p.add_argument("--dims", required=True)
    p.add_argument("--bound", type=int, default=5)
    p.add_argument("--moduli", help="comma-separated moduli for obstruction tests")
    _add_output(p)
    return parser


COMMANDS = {"resonances": cmd_resonances, "series": cmd_series,
            "validate": cmd_validate, "ellipsoid": cmd_ellipsoid}


def _join_negative_values(argv: list[str]) -> list[str]:
    # "--point -4/3,-1/3" would otherwise read the value as an option
    out, k = [], 0
    while k < len(argv):
        tok = argv[k]
        if tok in ("--point", "--a0", "--b0", "--perturb") and k + 1 < len(argv) \
                and argv[k + 1].startswith("-"):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code, payload = COMMANDS[args.command](args)
    except CompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPAT
    except (InputError, InvalidDimensionError, UnboundParameterError, ValueError,
            ProjectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    payload = {"schema": 1, **payload}
    text = (json.dumps(payload, sort_keys=True, indent=2) + "\n" if args.format == "json"
            else _text(payload))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
