"""Command-line front end.

Exit codes:
    0  success
    2  input error (parse error, bad augmentation form, unknown law)
    3  algebra outside the category
    4  computation error
    5  a law failed
    6  truncated sweep ran out of precision
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import invariants as inv
from .algebra import TruncationContext, consistency_check, parse_input
from .errors import ComputationError, InconsistentStructure, InputError, NotInCategory, PrecisionExhausted
from .laws import DEFAULT_SAMPLES, DEFAULT_SEED, parse_law_ids, run_laws
from .truncated import SweepResult

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CATEGORY = 3
EXIT_COMPUTATION = 4
EXIT_LAW = 5
EXIT_PRECISION = 6

_FIELDS = (
    ("phi", "Phi length"),
    ("psi", "Psi length"),
    ("eta_val", "eta valuation"),
    ("rank", "rank at lambda"),
    ("defect", "defect"),
    ("path", "path"),
    ("c", "codimension"),
    ("wedge", "wedge iota* length"),
)


def _fmt(v) -> str:
    return "-" if v is None else str(v)


def render_table(rows: list[tuple[str, str]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def render_report(rep: inv.InvariantReport) -> str:
    d = rep.to_dict()
    rows = [(label, _fmt(d[key])) for key, label in _FIELDS]
    rows += [(f"flag {k}", v) for k, v in d["flags"].items()]
    return render_table(rows)


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    data = parse_input(text)
    if data.structure is not None:
        rep = consistency_check(data.algebra, data.structure)
        if not rep.passed:
            raise InconsistentStructure(f"{rep.detail}: {rep.witness}")
    return data


def cmd_report(args) -> int:
    data = _load(args.file)
    rep = inv.report_for(data, args.module)
    print(rep.to_json() if args.json else render_report(rep))
    return EXIT_OK


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CMODLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"CMODLAB_SEED is not an integer: {env!r}") from None
    return DEFAULT_SEED


def cmd_verify(args) -> int:
    try:
        ids = parse_law_ids(args.laws)
    except KeyError as exc:
        raise InputError(f"unknown law {exc.args[0]}") from None
    if not ids:
        raise InputError("no laws given")
    results = run_laws(ids, _seed(args), args.samples, jobs=args.jobs)
    if args.json:
        print(json.dumps({"schema": inv.SCHEMA, "results": [r.to_dict() for r in results]}, indent=2))
    else:
        rows = [(r.law, f"{r.status}  samples={r.samples} checks={r.checks} failures={len(r.failures)}")
                for r in results]
        print(render_table(rows))
        for r in results:
            for f in r.failures[:5]:
                print(f"\n{r.law} failure: {f['detail']}\n{f['input']}")
    return EXIT_OK if all(r.status == "pass" for r in results) else EXIT_LAW


def cmd_deform(args) -> int:
    data = _load(args.file)
    M = data.modules.get(args.module) if args.module else None
    if args.module and M is None:
        raise InputError(f"no module named {args.module!r}")
    res = inv.deform(data.algebra, data.structure, M, args.elem)
    if args.json:
        out = {
            "schema": inv.SCHEMA,
            "before": res.before.to_dict(),
            "after": res.after.to_dict(),
            "elements": args.elem,
            "ord": list(res.step.orders),
            "psi_method": res.psi_method,
            "phi_identity": res.phi_identity,
            "psi_identity": res.psi_identity,
            "defect_invariant": res.defect_invariant,
        }
        print(json.dumps(out, indent=2))
    else:
        b, a = res.before, res.after
        rows = [
            ("elements", ", ".join(args.elem)),
            ("ord", ", ".join(map(str, res.step.orders))),
            ("Phi", f"{b.phi_length} -> {a.phi_length}"),
            ("Psi", f"{b.psi_length} -> {a.psi_length} ({res.psi_method})"),
            ("defect", f"{b.defect} -> {a.defect}"),
            ("Phi identity", "holds" if res.phi_identity else "FAILS"),
            ("Psi identity", "holds" if res.psi_identity else "FAILS"),
            ("defect invariant", "holds" if res.defect_invariant else "FAILS"),
        ]
        print(render_table(rows))
    if not (res.phi_identity and res.psi_identity and res.defect_invariant):
        return EXIT_COMPUTATION
    return EXIT_OK


def _sweep_table(res: SweepResult) -> str:
    lines = ["N    D    length  capped"]
    for row in res.rows:
        lines.append(f"{row.N:<4} {row.D:<4} {row.length:<7} {'yes' if row.capped else 'no'}")
    return "\n".join(lines)


def cmd_sweep(args) -> int:
    data = _load(args.file)
    M = data.modules.get(args.module) if args.module else None
    if args.module and M is None:
        raise InputError(f"no module named {args.module!r}")
    try:
        ctx = TruncationContext(N=args.N, D=args.D)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    descent = inv.congruence_module(data.algebra, data.structure, M)
    try:
        _, res = inv.ext1_report(data.algebra, data.structure, M, ctx)
    except PrecisionExhausted as exc:
        print(_sweep_table(exc.result))
        raise
    print(_sweep_table(res))
    print(f"stabilized: {'yes' if res.stabilized else 'no'}  length: {_fmt(res.length)}  descent: {descent.psi_length}")
    if res.stabilized and res.length == descent.psi_length:
        return EXIT_OK
    return EXIT_COMPUTATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmodlab", description="Congruence modules and Wiles defects.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", help="invariants of an input file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.add_argument("--module", help="module block to use (default: A itself)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="run law checks, e.g. L1-L12")
    p.add_argument("laws")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("deform", help="quotient by Ker(lambda) elements and compare")
    p.add_argument("file")
    p.add_argument("--elem", action="append", required=True)
    p.add_argument("--module")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("sweep", help="truncated Ext^1 precision sweep (c = 1)")
    p.add_argument("file")
    p.add_argument("--N", type=int, default=TruncationContext.N)
    p.add_argument("--D", type=int, default=TruncationContext.D)
    p.add_argument("--module")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotInCategory as exc:
        print(f"error: NotInCategory: {exc.condition}", file=sys.stderr)
        return EXIT_CATEGORY
    except PrecisionExhausted as exc:
        print(f"error: PrecisionExhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except ComputationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
