"""Command-line front end.

Exit codes: 0 pass, 1 verdict or invariant failure, 2 input error,
3 numerical failure.  Reports are JSON on stdout with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .caustic import caustic_tangency_check, conservation_report
from .cone import ConeCoefficients, classify_coefficients, cone_coefficients, conic_oracle
from .errors import BilliardError, InputError
from .flow import BilliardTable, Trajectory, orbit
from .geometry import OrientedLine, PseudoConfocalPencil, pencil_member, tangency_spectrum
from .symmetry import is_L_symmetric, symmetry_defect


def _floats(text, name, count=None):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"{name}: expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) != count:
        raise InputError(f"{name}: expected {count} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise InputError(f"{name}: numbers must be finite")
    return vals


def _point_and_direction(text, name):
    head, sep, tail = text.partition(";")
    if not sep:
        raise InputError(f"{name}: expected 'point;direction'")
    p, v = _floats(head, name), _floats(tail, name)
    if len(p) != len(v):
        raise InputError(f"{name}: point and direction dimensions differ")
    return np.array(p), np.array(v)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_table(path):
    return BilliardTable.from_config(_read_json(path))


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_orbit(args):
    table = _load_table(args.table)
    p0, v0 = _point_and_direction(args.init, "--init")
    traj = orbit(table, p0, v0, args.steps, max_chord=args.max_chord)
    if args.out:
        traj.to_csv(args.out)
        _emit({"events": len(traj.events), "status": traj.status, "detail": traj.detail})
    else:
        sys.stdout.write(traj.to_csv())
    if not traj.completed:
        print(f"orbit stopped after {len(traj.events)} events: {traj.status} ({traj.detail})", file=sys.stderr)
        return 1
    return 0


def _load_traj(path):
    try:
        return Trajectory.from_csv(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def cmd_caustic(args):
    traj = _load_traj(args.traj)
    P = PseudoConfocalPencil.parse(args.pencil)
    if P.dimension != traj.p0.shape[0]:
        raise InputError("pencil and trajectory dimensions differ")
    if args.member is not None:
        rep = caustic_tangency_check(traj, pencil_member(P, args.member), tol=args.tol)
    else:
        rep = conservation_report(traj, P, tol=args.tol)
    _emit(rep.to_dict(), args.out)
    return 0 if rep.passed else 1


def cmd_symmetry(args):
    table = _load_table(args.table)
    if args.point:
        q = np.array(_floats(args.point, "--point", table.dimension))
        defect = symmetry_defect(table.surface, table.field, q, method=args.method)
        ok = defect <= args.tol
        _emit({"symmetric": ok, "worst_defect": defect, "worst_point": q.tolist()}, args.out)
        return 0 if ok else 1
    rep = is_L_symmetric(
        table.surface, table.field, args.samples, args.tol, table.interior_point,
        seed=args.seed, method=args.method, margin=args.margin,
    )
    _emit(rep.to_dict(), args.out)
    return 0 if rep.symmetric else 1


def cmd_cone(args):
    opts = {"sym_tol": args.sym_tol, "accept": args.accept, "reject": args.reject, "n_starts": args.starts,
            "steps": args.steps}
    if args.coeffs:
        vals = _floats(args.coeffs, "--coeffs")
        if len(vals) not in (6, 8):
            raise InputError("--coeffs takes a,b,c,d,k1,k2 or a,b,c,d,k1,k2,nu1,nu2")
        cc = ConeCoefficients.of(*vals)
    else:
        if not (args.table and args.point):
            raise InputError("cone needs --coeffs or both --table and --point")
        table = _load_table(args.table)
        q = np.array(_floats(args.point, "--point", table.dimension))
        cc = cone_coefficients(table.surface, table.field, q)
    v = classify_coefficients(cc, **opts)
    _emit(v.to_dict(), args.out)
    return 0 if v.consistent and v.verdict != "inconclusive" else 1


def cmd_pencil(args):
    P = PseudoConfocalPencil.parse(args.pencil)
    out = {"pencil": P.to_config(), "poles": P.poles.tolist()}
    if args.member is not None:
        out["member"] = pencil_member(P, args.member).A.tolist()
    if args.line:
        p, u = _point_and_direction(args.line, "--line")
        roots = tangency_spectrum(P, OrientedLine(p, u))
        out["spectrum"] = [{"lambda": r.lam, "pole": r.pole} for r in roots]
    _emit(out, args.out)
    return 0


def cmd_oracle(args):
    b, c, e, r1, r2, phi = _floats(args.params, "--params", 6)
    res = conic_oracle(b, c, e, r1, r2, phi, kind=args.kind)
    solves = res.max_E <= args.tol
    _emit({"K": None if res.K is None else list(res.K), "max_E": res.max_E, "solves": solves}, args.out)
    return 0 if solves else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="projbilliard", description="Billiard and caustic verification tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbit", help="iterate the billiard map and write a trajectory CSV")
    p.add_argument("--table", required=True, help="table config JSON file")
    p.add_argument("--init", required=True, help="'p1,...,pd;v1,...,vd'")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--max-chord", type=float, default=None, help="marching bound for implicit surfaces")
    p.add_argument("--out", help="CSV path (default: CSV on stdout)")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("caustic", help="tangency-spectrum conservation along a trajectory")
    p.add_argument("--traj", required=True, help="trajectory CSV")
    p.add_argument("--pencil", required=True, help="'a1,...,ad;r=R' or pencil JSON")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--member", type=float, default=None,
                   help="check tangency to the member at this lambda instead")
    p.add_argument("--out")
    p.set_defaults(func=cmd_caustic)

    p = sub.add_parser("symmetry", help="symmetry defect of a table's field")
    p.add_argument("--table", required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("fd", "analytic"), default="fd")
    p.add_argument("--margin", type=float, default=1e-2, help="skip points with |<Mn|n>| below this")
    p.add_argument("--point", help="single boundary point instead of sampling")
    p.add_argument("--out")
    p.set_defaults(func=cmd_symmetry)

    p = sub.add_parser("cone", help="conic test of the tangent-cone branches")
    p.add_argument("--table")
    p.add_argument("--point")
    p.add_argument("--coeffs", help="a,b,c,d,k1,k2[,nu1,nu2]")
    p.add_argument("--sym-tol", type=float, default=1e-6)
    p.add_argument("--accept", type=float, default=1e-6)
    p.add_argument("--reject", type=float, default=1e-3)
    p.add_argument("--starts", type=int, default=4)
    p.add_argument("--steps", type=int, default=800)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cone)

    p = sub.add_parser("pencil", help="pencil members and tangency spectra")
    p.add_argument("--pencil", required=True)
    p.add_argument("--member", type=float, default=None)
    p.add_argument("--line", help="'p1,...,pd;u1,...,ud'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pencil)

    p = sub.add_parser("oracle", help="closed-form conic solution check")
    p.add_argument("--params", required=True, help="b,c,e,r1,r2,phi")
    p.add_argument("--kind", choices=("ellipse", "hyperbola"), default="ellipse")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except BilliardError as exc:
        print(f"numerical failure ({exc.status}): {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OverflowError, RecursionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
