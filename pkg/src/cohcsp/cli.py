"""Command-line entry point: ``cohcsp <subcommand> ...``.

Every subcommand prints one JSON object on stdout with ``command``,
``verdict`` (yes/no/error), ``exit_code`` and ``detail``.  Exit codes: 0 for
yes, 1 for no, 2 for errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ._budget import BudgetExceeded
from .cohomology import (
    build_ztest_system,
    coh_k_consistency,
    csc_check,
    extract_theories,
    avn_check,
    k_consistency,
    ztest,
)
from .corpus import DEFAULT_SEED, random_linear_system
from .equivalence import ck_report, color_refinement, el_report, lk_report, z_report
from .fixpoint import FixpointReport
from .presheaf import build_base, coflasquify
from .structures import (
    Structure,
    StructureError,
    brute_force,
    generate,
    parse_structure,
    parse_template,
    serialize_template,
    template_structure,
)

EXIT = {"yes": 0, "no": 1, "error": 2}


@dataclass
class CommandOutcome:
    command: str
    verdict: str
    detail: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT[self.verdict]

    def to_json(self) -> str:
        doc = {"command": self.command, "verdict": self.verdict, "exit_code": self.exit_code, "detail": self.detail}
        return json.dumps(doc, sort_keys=True, ensure_ascii=False)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FileNotFoundError(f"{path}: {e.strerror or e}") from None


def _load_structure(path: str) -> Structure:
    try:
        return parse_structure(_read(path))
    except StructureError as e:
        raise StructureError(str(e), path) from None


def _report_detail(report: FixpointReport, args) -> dict:
    out = {"rounds": report.rounds, "initial_sections": report.initial_total, "final_sections": report.result.total, "trace": report.trace}
    if report.initial is not None:
        out["start_sections"] = report.initial.total
    if getattr(args, "trace", None):
        out["trace_path"] = args.trace
    return out


def _write_trace(args, report: FixpointReport | None) -> None:
    if getattr(args, "trace", None) and report is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            report.write_trace(fh)


# -- subcommands ---------------------------------------------------------------


def cmd_hom(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    maps = brute_force(A, B, args.mode)
    shown = maps[: args.max_witnesses]
    detail = {
        "mode": args.mode,
        "count": len(maps),
        "witnesses": [{A.universe[i]: B.universe[b] for i, b in enumerate(m)} for m in shown],
        "truncated": len(maps) > len(shown),
    }
    return CommandOutcome("hom", _yes(bool(maps)), detail)


def cmd_kcon(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    verdict, _, report = k_consistency(A, B, args.k)
    _write_trace(args, report)
    return CommandOutcome("kcon", _yes(verdict), {"k": args.k, **_report_detail(report, args)})


def cmd_cohcon(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    verdict, _, report = coh_k_consistency(A, B, args.k, one_step=args.one_step)
    _write_trace(args, report)
    detail = {"k": args.k, "one_step": args.one_step, "strongly_k_consistent": not report.initial.is_empty(), **_report_detail(report, args)}
    return CommandOutcome("cohcon", _yes(verdict), detail)


def cmd_csc(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    S = coflasquify(build_base(A, B, args.k, "hom"))
    return CommandOutcome("csc", _yes(csc_check(S)), {"k": args.k, "sections": S.total})


def cmd_avn(args) -> CommandOutcome:
    A = _load_structure(args.A)
    try:
        T = parse_template(_read(args.template))
    except StructureError as e:
        raise StructureError(str(e), args.template) from None
    R = template_structure(T)
    S = coflasquify(build_base(A, R, args.k, "hom"))
    t_a, t_s = extract_theories(A, T, S)
    holds = avn_check(t_s)
    detail = {
        "k": args.k,
        "modulus": T.modulus,
        "instance_equations": t_a.describe(A),
        "strategy_equations": len(t_s),
        "vacuous_contexts": [[A.universe[a] for a in c] for c in t_s.vacuous_contexts],
    }
    return CommandOutcome("avn", _yes(holds), detail)


def cmd_equiv(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    report = {"el": el_report, "lk": lk_report, "ck": ck_report, "z": z_report}[args.logic](A, B, args.k)
    _write_trace(args, report)
    verdict = not report.result.is_empty()
    return CommandOutcome("equiv", _yes(verdict), {"logic": args.logic, "k": args.k, **_report_detail(report, args)})


def cmd_wl(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    coloring = color_refinement(A, B)
    same = coloring.histogram(0) == coloring.histogram(1)
    return CommandOutcome("wl", _yes(same), {"rounds": coloring.rounds, "classes": coloring.classes})


def cmd_gen(args) -> CommandOutcome:
    template = None
    if args.kind in ("clique", "cycle", "path"):
        if args.n is None:
            raise UsageError(f"gen --kind {args.kind} needs --n")
        S = generate(args.kind, args.n, prefix=args.prefix)
    elif args.kind == "union":
        if not (args.left and args.right):
            raise UsageError("gen --kind union needs --left and --right")
        S = generate("union", _load_structure(args.left), _load_structure(args.right))
    else:
        if args.equations:
            try:
                eqs = json.loads(args.equations)
            except json.JSONDecodeError as e:
                raise StructureError(f"malformed JSON: {e.msg}", "--equations") from None
            S, template = generate("linear", args.modulus, [(xs, cs, d) for xs, cs, d in eqs])
        else:
            rng = random.Random(args.seed)
            S, template = random_linear_system(args.modulus, args.vars, args.eqs, rng)
    detail = {"kind": args.kind, "structure": S.to_dict()}
    if template is not None:
        detail["template"] = json.loads(serialize_template(template))
    if args.out:
        Path(args.out).write_text(json.dumps(S.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    if args.template_out and template is not None:
        Path(args.template_out).write_text(serialize_template(template) + "\n", encoding="utf-8")
    return CommandOutcome("gen", "yes", detail)


def _parse_names(text: str | None) -> list[str]:
    return [x for x in (text or "").split(",") if x]


def cmd_dump(args) -> CommandOutcome:
    A, B = _load_structure(args.A), _load_structure(args.B)
    base = build_base(A, B, args.k, args.mode)
    if args.what == "strategy":
        if args.stage == "base":
            S, rounds = base, 0
        elif args.stage == "flasque":
            from .fixpoint import UP_DOWN, greatest_fixpoint

            rep = greatest_fixpoint(base, UP_DOWN)
            S, rounds = rep.result, rep.rounds
        else:
            _, S, rep = coh_k_consistency(A, B, args.k)
            rounds = rep.rounds
        doc = S.to_dump(rounds)
        if args.out:
            Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
        return CommandOutcome("dump", _yes(not S.is_empty()), {"what": "strategy", "stage": args.stage, "presheaf": doc})
    S = coflasquify(base)
    try:
        ctx = tuple(sorted(A.index[x] for x in _parse_names(args.context)))
        f = dict(zip(_parse_names(args.context), _parse_names(args.section)))
        vals = tuple(B.index[f[A.universe[a]]] for a in ctx)
    except KeyError as e:
        raise StructureError(f"unknown element {e.args[0]!r}", "--context/--section") from None
    if len(_parse_names(args.context)) != len(_parse_names(args.section)):
        raise UsageError("--context and --section need the same number of elements")
    system = build_ztest_system(S, ctx, vals)
    mtx = system.matrix.to_matrix_market("ztest system; rhs in the sidecar index")
    index = {"columns": system.index_document(S), "rhs": system.rhs, "compatibility_rows": system.compatibility_rows}
    if args.out:
        Path(args.out).write_text(mtx, encoding="utf-8")
        Path(args.out + ".index.json").write_text(json.dumps(index, sort_keys=True) + "\n", encoding="utf-8")
    passed = ztest(S, ctx, vals)
    return CommandOutcome("dump", _yes(passed), {"what": "ztest", "matrix_market": mtx, "index": index})


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cohcsp", description="Presheaf-based consistency and equivalence deciders.")
    parser.add_argument("--jobs", type=int, default=1, help="cap on concurrent predicate evaluations (evaluation is sequential)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pair(p):
        p.add_argument("A")
        p.add_argument("B")

    def kopt(p):
        p.add_argument("--k", type=int, required=True)

    def trace(p):
        p.add_argument("--trace", metavar="FILE", help="write fixpoint rounds as JSON lines")

    p = sub.add_parser("hom", help="brute-force homomorphisms/embeddings/isomorphisms")
    p.add_argument("--mode", choices=["hom", "embed", "iso"], default="hom")
    p.add_argument("--max-witnesses", type=int, default=100)
    pair(p)
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("kcon", help="strong k-consistency")
    kopt(p), trace(p), pair(p)
    p.set_defaults(func=cmd_kcon)

    p = sub.add_parser("cohcon", help="cohomological k-consistency")
    kopt(p), trace(p)
    p.add_argument("--one-step", action="store_true")
    pair(p)
    p.set_defaults(func=cmd_cohcon)

    p = sub.add_parser("csc", help="cohomological strong contextuality of the k-consistency family")
    kopt(p), pair(p)
    p.set_defaults(func=cmd_csc)

    p = sub.add_parser("avn", help="all-versus-nothing for a linear template")
    kopt(p)
    p.add_argument("A")
    p.add_argument("template")
    p.set_defaults(func=cmd_avn)

    p = sub.add_parser("equiv", help="logical equivalence deciders")
    p.add_argument("--logic", choices=["el", "lk", "ck", "z"], required=True)
    kopt(p), trace(p), pair(p)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("wl", help="colour refinement oracle")
    pair(p)
    p.set_defaults(func=cmd_wl)

    p = sub.add_parser("gen", help="generate fixtures")
    p.add_argument("--kind", choices=["clique", "cycle", "path", "union", "linear"], required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--prefix", default="")
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--modulus", type=int, default=2)
    p.add_argument("--equations", help='JSON list of [vars, coeffs, const], e.g. [[["x","y"],[1,1],1]]')
    p.add_argument("--vars", type=int, default=6)
    p.add_argument("--eqs", type=int, default=6)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="write the structure document here")
    p.add_argument("--template-out", help="write the linear template document here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dump", help="diagnostic dumps")
    p.add_argument("--what", choices=["strategy", "ztest"], required=True)
    kopt(p)
    p.add_argument("--mode", choices=["hom", "iso"], default="hom")
    p.add_argument("--stage", choices=["base", "flasque", "coh"], default="flasque")
    p.add_argument("--context", help="comma-separated elements of A (ztest)")
    p.add_argument("--section", help="comma-separated images in B, aligned with --context (ztest)")
    p.add_argument("--out", help="output file (ztest also writes OUT.index.json)")
    pair(p)
    p.set_defaults(func=cmd_dump)
    return parser


def run(argv: Sequence[str] | None = None) -> CommandOutcome:
    argv = list(sys.argv[1:] if argv is None else argv)
    command = next((a for a in argv if not a.startswith("-")), "")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return CommandOutcome(command, "error", {"error": "usage", "message": str(e).splitlines()[-1]})
    try:
        return args.func(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return CommandOutcome(args.command, "error", {"error": "usage", "message": str(e)})
    except (StructureError, FileNotFoundError, BudgetExceeded, ValueError, KeyError) as e:
        return CommandOutcome(args.command, "error", {"error": type(e).__name__, "message": str(e)})


def main(argv: Sequence[str] | None = None) -> int:
    try:
        outcome = run(argv)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    print(outcome.to_json())
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
