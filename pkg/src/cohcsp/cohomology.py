"""Z-compatible extensions, cohomological reduction and linear templates.

``ztest`` follows the construction literally: one integer system per anchor
section, with a compatibility row for every pair of maximal contexts and
every section on their overlap.  ``ztest_survivors`` answers the same
question for every maximal section of a family at once; it builds the
equivalent marginal system over all contexts (each section's coefficient
equals the sum of its one-element extensions' coefficients), computes the
integer kernel once, and tests each anchor for membership in the kernel's
projection onto the anchor's context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb
from typing import NamedTuple

from ._budget import check_budget
from .fixpoint import DeflationaryOperator, FixpointReport, greatest_fixpoint
from .presheaf import (
    Context,
    PresheafFamily,
    Values,
    build_base,
    coflasquify,
    is_closed,
)
from .structures import LinearTemplate, Section, Structure, _is_prime, template_structure
from .zlin import Lattice, SparseIntMatrix, integer_kernel, solve_integer, solve_mod_p


@dataclass
class ZtestSystem:
    columns: list[tuple[Context, Values]]
    matrix: SparseIntMatrix
    rhs: list[int]
    anchor: Section
    compatibility_rows: int

    def column_index(self) -> dict[tuple[Context, Values], int]:
        return {cv: i for i, cv in enumerate(self.columns)}

    def index_document(self, S: PresheafFamily) -> list[dict]:
        return [
            {
                "column": i + 1,
                "context": [S.A.universe[a] for a in c],
                "section": [S.B.universe[b] for b in v],
            }
            for i, (c, v) in enumerate(self.columns)
        ]


def _positions(sub: Context, sup: Context) -> tuple[int, ...]:
    return tuple(sup.index(a) for a in sub)


def build_ztest_system(S: PresheafFamily, C0: Context, s: Values | Section) -> ZtestSystem:
    """The integer system whose solutions are Z-compatible extensions of ``s``."""
    if isinstance(s, Section):
        if s.context != C0:
            raise ValueError(f"section lives on {s.context}, not {C0}")
        s = s.values
    C0 = tuple(C0)
    if not S.poset.is_maximal(C0):
        raise ValueError(f"{C0} is not a maximal context")
    if s not in S[C0]:
        raise ValueError(f"{s} is not a section of the family at {C0}")
    maximal = S.poset.maximal
    columns = [(c, v) for c in maximal for v in sorted(S[c])]
    col = {cv: i for i, cv in enumerate(columns)}
    rows: list[dict[int, int]] = []
    for c1, c2 in combinations(maximal, 2):
        overlap = tuple(sorted(set(c1) & set(c2)))
        p1, p2 = _positions(overlap, c1), _positions(overlap, c2)
        by1: dict[Values, list[int]] = {}
        by2: dict[Values, list[int]] = {}
        for v in S[c1]:
            by1.setdefault(tuple(v[i] for i in p1), []).append(col[(c1, v)])
        for v in S[c2]:
            by2.setdefault(tuple(v[i] for i in p2), []).append(col[(c2, v)])
        for r in sorted(S[overlap]):
            row = {j: 1 for j in by1.get(r, ())}
            row.update({j: -1 for j in by2.get(r, ())})
            rows.append(row)
    ncompat = len(rows)
    rhs = [0] * ncompat
    for v in sorted(S[C0]):
        rows.append({col[(C0, v)]: 1})
        rhs.append(1 if v == s else 0)
    return ZtestSystem(columns, SparseIntMatrix.from_rows(rows, len(columns)), rhs, Section(C0, s), ncompat)


def ztest(S: PresheafFamily, C0: Context, s: Values | Section) -> bool:
    system = build_ztest_system(S, C0, s)
    return solve_integer(system.matrix, system.rhs).solvable


def ztest_survivors(S: PresheafFamily) -> dict[Context, frozenset[Values]]:
    """For every maximal context, the sections passing ``ztest`` in ``S``."""
    if not is_closed(S):
        return {c: frozenset(v for v in S[c] if ztest(S, c, v)) for c in S.poset.maximal}
    contexts = S.poset.contexts
    col: dict[tuple[Context, Values], int] = {}
    for c in contexts:
        for v in sorted(S[c]):
            col[(c, v)] = len(col)
    rows: list[dict[int, int]] = []
    for c in reversed(contexts):
        for facet, i in S.poset.facets[c]:
            groups: dict[Values, list[int]] = {}
            for v in S[c]:
                groups.setdefault(v[:i] + v[i + 1:], []).append(col[(c, v)])
            for r in sorted(S[facet]):
                row = {j: 1 for j in groups.get(r, ())}
                row[col[(facet, r)]] = -1
                rows.append(row)
    kernel = integer_kernel(SparseIntMatrix.from_rows(rows, len(col)))
    out = {}
    for c in S.poset.maximal:
        local = {col[(c, v)]: n for n, v in enumerate(sorted(S[c]))}
        if not local:
            out[c] = frozenset()
            continue
        gens = []
        for vec in kernel:
            g = {local[j]: x for j, x in vec.items() if j in local}
            if g:
                gens.append(g)
        lattice = Lattice(len(local), gens)
        keep = []
        for v in sorted(S[c]):
            unit = {local[col[(c, v)]]: 1}
            if unit in lattice:
                keep.append(v)
        out[c] = frozenset(keep)
    return out


def cohomological_reduction(S: PresheafFamily) -> PresheafFamily:
    """Keep, at maximal contexts, only the sections with a Z-compatible extension."""
    if S.is_empty():
        return S
    survivors = ztest_survivors(S)
    return S.with_sections({c: survivors.get(c, v) for c, v in S.sections.items()})


REDUCE_THEN_COFLASQUIFY = DeflationaryOperator("coflasquify∘ch", lambda F: coflasquify(cohomological_reduction(F)))


class CohResult(NamedTuple):
    verdict: bool
    fixpoint: PresheafFamily
    report: FixpointReport


def coh_k_consistency(A: Structure, B: Structure, k: int, one_step: bool = False, budget: int | None = None) -> CohResult:
    """Cohomological k-consistency (or its one-step variant) of A with respect to B.

    ``report.initial`` is the strong k-consistency family S̄ = coflasquify(H_k).
    """
    base = coflasquify(build_base(A, B, k, "hom", budget))
    if one_step:
        result = REDUCE_THEN_COFLASQUIFY(base)
        report = FixpointReport(result, 1, base.total, [result.total], [result.counts()])
    else:
        report = greatest_fixpoint(base, REDUCE_THEN_COFLASQUIFY)
    report.initial = base
    return CohResult(not report.result.is_empty(), report.result, report)


def k_consistency(A: Structure, B: Structure, k: int, budget: int | None = None) -> CohResult:
    """Strong k-consistency, reported through the same fixpoint machinery."""
    from .fixpoint import UP_DOWN

    report = greatest_fixpoint(build_base(A, B, k, "hom", budget), UP_DOWN)
    report.initial = report.result
    return CohResult(not report.result.is_empty(), report.result, report)


def csc_check(S: PresheafFamily) -> bool:
    """Cohomologically strongly contextual: no maximal section passes ``ztest``."""
    if S.is_empty():
        return True
    return all(not v for v in ztest_survivors(S).values())


# -- linear templates ---------------------------------------------------------------

Equation = tuple[tuple[int, ...], tuple[int, ...], int]


def canonical_equation(p: int, variables, coeffs, const: int) -> Equation:
    """Merge repeated variables, drop zero coefficients, sort by variable."""
    acc: dict[int, int] = {}
    for x, c in zip(variables, coeffs):
        acc[x] = (acc.get(x, 0) + c) % p
    items = sorted((x, c) for x, c in acc.items() if c)
    return tuple(x for x, _ in items), tuple(c for _, c in items), const % p


@dataclass(frozen=True)
class EquationTheory:
    modulus: int
    equations: frozenset[Equation]
    vacuous_contexts: tuple[Context, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.equations)

    def __le__(self, other: "EquationTheory") -> bool:
        return self.modulus == other.modulus and self.equations <= other.equations

    def variables(self) -> list[int]:
        return sorted({x for xs, _, _ in self.equations for x in xs})

    def describe(self, A: Structure) -> list[str]:
        out = []
        for xs, cs, d in sorted(self.equations):
            lhs = " + ".join(f"{c}*{A.universe[x]}" if c != 1 else A.universe[x] for x, c in zip(xs, cs)) or "0"
            out.append(f"{lhs} = {d}")
        return out


def instance_theory(A: Structure, T: LinearTemplate) -> EquationTheory:
    p = T.modulus
    eqs = set()
    for name, (coeffs, const) in T.linear.items():
        for t in A.rel_idx.get(name, ()):
            eqs.add(canonical_equation(p, t, coeffs, const))
    return EquationTheory(p, frozenset(eqs))


def context_theory(S: PresheafFamily, C: Context, p: int, n: int) -> set[Equation]:
    """All equations over at most ``n`` variables of ``C`` satisfied by every section of S(C)."""
    sections = S[C]
    eqs: set[Equation] = set()
    for size in range(n + 1):
        for pos in combinations(range(len(C)), size):
            xs = tuple(C[i] for i in pos)
            for coeffs in product(range(1, p), repeat=size):
                sums = {sum(c * v[i] for c, i in zip(coeffs, pos)) % p for v in sections}
                consts = range(p) if not sums else sums if len(sums) == 1 else ()
                for d in consts:
                    eqs.add((xs, coeffs, d))
    return eqs


def extract_theories(A: Structure, T: LinearTemplate, S: PresheafFamily, budget: int | None = None) -> tuple[EquationTheory, EquationTheory]:
    """(T_A, T_S) for an instance over a prime-field template and a family S̄ ⊆ H_k(A, R)."""
    p = T.modulus
    if not _is_prime(p):
        raise ValueError(f"modulus must be prime, got {p}")
    n = T.vocabulary.width
    if S.k < n:
        raise ValueError(f"k={S.k} is below the relational width {n}")
    if S.B.universe != template_structure(T).universe:
        raise ValueError("family target is not the template structure")
    per_context = p ** (n + 1) * comb(S.k, n)
    check_budget("candidate equations", per_context * len(S.poset.maximal), budget)
    t_s: set[Equation] = set()
    vacuous = []
    for C in S.poset.maximal:
        if not S[C]:
            vacuous.append(C)
        t_s |= context_theory(S, C, p, n)
    return instance_theory(A, T), EquationTheory(p, frozenset(t_s), tuple(vacuous))


def avn_check(theory: EquationTheory) -> bool:
    """All-versus-Nothing: no assignment satisfies every equation of the theory."""
    p = theory.modulus
    variables = theory.variables()
    col = {x: j for j, x in enumerate(variables)}
    rows, rhs = [], []
    for xs, cs, d in sorted(theory.equations):
        rows.append({col[x]: c for x, c in zip(xs, cs)})
        rhs.append(d)
    M = SparseIntMatrix.from_rows(rows, len(variables))
    return not solve_mod_p(M, rhs, p).solvable


def theory_satisfied_by(theory: EquationTheory, f: Values) -> bool:
    p = theory.modulus
    return all(sum(c * f[x] for x, c in zip(xs, cs)) % p == d for xs, cs, d in theory.equations)
