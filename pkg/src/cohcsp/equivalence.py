"""Deciders for logical equivalence built on partial-isomorphism families."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Literal

from .cohomology import cohomological_reduction
from .fixpoint import UP_DOWN, DeflationaryOperator, FixpointReport, from_local_predicate, greatest_fixpoint
from .presheaf import Context, PresheafFamily, Values, build_base, coflasquify, dagger
from .structures import Structure, StructureError


@dataclass
class BipartiteGraph:
    left: list[Hashable]
    right: list[Hashable]
    edges: set[tuple[Hashable, Hashable]] = field(default_factory=set)

    def __post_init__(self):
        ls, rs = set(self.left), set(self.right)
        for a, b in self.edges:
            if a not in ls or b not in rs:
                raise ValueError(f"edge {(a, b)} leaves the vertex sets")

    def maximum_matching(self) -> dict:
        """Augmenting-path maximum matching; vertices are tried in list order."""
        adj = {a: [] for a in self.left}
        order = {b: i for i, b in enumerate(self.right)}
        for a, b in self.edges:
            adj[a].append(b)
        for a in adj:
            adj[a].sort(key=order.__getitem__)
        match_right: dict = {}

        def augment(a, seen: set) -> bool:
            for b in adj[a]:
                if b in seen:
                    continue
                seen.add(b)
                if b not in match_right or augment(match_right[b], seen):
                    match_right[b] = a
                    return True
            return False

        for a in self.left:
            augment(a, set())
        return {a: b for b, a in match_right.items()}

    def has_perfect_matching(self) -> bool:
        if len(self.left) != len(self.right):
            return False
        return len(self.maximum_matching()) == len(self.left)

    def edge_list(self) -> list[list]:
        return [list(e) for e in sorted(self.edges, key=repr)]


def cotest_graph(S: PresheafFamily, C: Context, s: Values) -> BipartiteGraph:
    """Edges (a, b) such that some one-element extension of ``s`` sends a to b."""
    edges = set()
    f = dict(zip(C, s))
    for a in range(len(S.A)):
        if a in f:
            edges.add((a, f[a]))
            continue
        d = tuple(sorted(C + (a,)))
        pos = d.index(a)
        for w in S[d]:
            if w[:pos] + w[pos + 1:] == s:
                edges.add((a, w[pos]))
    return BipartiteGraph(list(range(len(S.A))), list(range(len(S.B))), edges)


def cotest(S: PresheafFamily, C: Context, s: Values) -> bool:
    """Duplicator can answer with a bijection extending ``s`` inside ``S``."""
    if len(C) >= S.k:
        raise ValueError("cotest only applies to contexts smaller than k")
    if len(S.A) != len(S.B):
        return False
    return cotest_graph(S, C, s).has_perfect_matching()


COTEST = from_local_predicate(cotest, scope=lambda F, c: len(c) < F.k, name="cotest")


def el_report(A: Structure, B: Structure, k: int) -> FixpointReport:
    return greatest_fixpoint(build_base(A, B, k, "iso"), UP_DOWN)


def el_preorder(A: Structure, B: Structure, k: int) -> bool:
    """Every existential k-variable sentence true in A is true in B."""
    return not el_report(A, B, k).result.is_empty()


def _lk_operator(schedule: str) -> DeflationaryOperator:
    if schedule == "a_first":
        return DeflationaryOperator("lk", lambda F: dagger(coflasquify(dagger(coflasquify(F)))))
    if schedule == "b_first":
        return DeflationaryOperator("lk-b", lambda F: coflasquify(dagger(coflasquify(dagger(F)))))
    raise ValueError(f"unknown schedule {schedule!r}")


def lk_report(A: Structure, B: Structure, k: int, schedule: Literal["a_first", "b_first"] = "a_first") -> FixpointReport:
    """Greatest subfamily T of I_k with both T and its dagger flasque."""
    return greatest_fixpoint(build_base(A, B, k, "iso"), _lk_operator(schedule))


def lk_equiv(A: Structure, B: Structure, k: int) -> bool:
    return not lk_report(A, B, k).result.is_empty()


COFLASQUIFY = DeflationaryOperator("coflasquify", coflasquify)
COUNTING_STEP = COTEST.then(COFLASQUIFY)


def counting_fixpoint(S: PresheafFamily) -> PresheafFamily:
    """Alternate coflasquification and the cotest filter to a fixpoint."""
    return greatest_fixpoint(coflasquify(S), COUNTING_STEP).result


def ck_report(A: Structure, B: Structure, k: int) -> FixpointReport:
    base = build_base(A, B, k, "iso")
    report = greatest_fixpoint(coflasquify(base), COUNTING_STEP)
    report.initial = base
    return report


def ck_equiv(A: Structure, B: Structure, k: int) -> bool:
    return not ck_report(A, B, k).result.is_empty()


def sym_cohomological_reduction(S: PresheafFamily, order: Literal["a_first", "b_first"] = "a_first") -> PresheafFamily:
    """Reduce, invert, reduce, invert back (``b_first`` starts on the inverse side)."""
    if order == "a_first":
        return dagger(cohomological_reduction(dagger(cohomological_reduction(S))))
    if order == "b_first":
        return cohomological_reduction(dagger(cohomological_reduction(dagger(S))))
    raise ValueError(f"unknown order {order!r}")


def z_report(A: Structure, B: Structure, k: int, order: Literal["a_first", "b_first"] = "a_first") -> FixpointReport:
    base = build_base(A, B, k, "iso")
    step = DeflationaryOperator(f"counting∘sym-ch[{order}]", lambda F: counting_fixpoint(sym_cohomological_reduction(F, order)))
    report = greatest_fixpoint(counting_fixpoint(base), step)
    report.initial = base
    return report


def z_equiv(A: Structure, B: Structure, k: int) -> bool:
    return not z_report(A, B, k).result.is_empty()


# -- colour refinement oracle -------------------------------------------------


@dataclass
class Coloring:
    colors: dict[tuple[int, str], int]
    rounds: int
    classes: int

    def histogram(self, side: int) -> Counter:
        return Counter(c for (s, _), c in self.colors.items() if s == side)


def color_refinement(A: Structure, B: Structure) -> Coloring:
    """Joint colour refinement on the disjoint union of A and B.

    Vertices start coloured by their unary/loop type; each round refines by
    the multiset of (pair type, colour) over all other vertices, where the
    pair type records every binary relation in both directions.
    """
    if A.vocabulary != B.vocabulary:
        raise StructureError("structures have different vocabularies", "B")
    if any(arity > 2 for _, arity in A.vocabulary.relations):
        raise StructureError("colour refinement needs a vocabulary of arity at most 2", "vocabulary")
    unary = [n for n, a in A.vocabulary.relations if a == 1]
    binary = [n for n, a in A.vocabulary.relations if a == 2]
    verts = [(0, x) for x in A.universe] + [(1, y) for y in B.universe]
    structs = (A, B)

    def rel(side, name, t):
        return t in structs[side].relations[name]

    def own(v):
        side, x = v
        return tuple(rel(side, n, (x,)) for n in unary) + tuple(rel(side, n, (x, x)) for n in binary)

    def pair(v, w):
        side, x = v
        y = w[1]
        return tuple((rel(side, n, (x, y)), rel(side, n, (y, x))) for n in binary)

    def relabel(sig: dict) -> dict:
        palette = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        return {v: palette[s] for v, s in sig.items()}

    color = relabel({v: own(v) for v in verts})
    rounds = 0
    while True:
        sig = {}
        for v in verts:
            others = sorted((pair(v, w), color[w]) for w in verts if w[0] == v[0] and w != v)
            sig[v] = (color[v], tuple(others))
        new = relabel(sig)
        rounds += 1
        if len(set(new.values())) == len(set(color.values())):
            return Coloring(new, rounds, len(set(new.values())))
        color = new


def wl_oracle(A: Structure, B: Structure, dimension: int = 1) -> bool:
    if dimension != 1:
        raise ValueError("only dimension 1 (colour refinement) is supported")
    coloring = color_refinement(A, B)
    return coloring.histogram(0) == coloring.histogram(1)
