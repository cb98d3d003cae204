"""Families of partial maps indexed by the contexts of size at most k.

A :class:`PresheafFamily` stores, for every context ``C`` (a sorted tuple of
A-indices with ``len(C) <= k``), a frozenset of value vectors aligned with
``C``.  The empty family has no section anywhere, not even at the empty
context; every non-empty family built here carries the empty section at
``()``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping

from ._budget import check_budget, get_budget, BudgetExceeded
from .structures import Mode, Section, Structure, StructureError

Context = tuple[int, ...]
Values = tuple[int, ...]


class ContextPoset:
    """All subsets of ``range(n)`` of size at most ``k``, ordered by (size, lex)."""

    def __init__(self, n: int, k: int):
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        self.n = n
        self.k = k
        self.contexts: tuple[Context, ...] = tuple(
            c for size in range(min(n, k) + 1) for c in combinations(range(n), size)
        )
        if n >= k:
            self.maximal: tuple[Context, ...] = tuple(combinations(range(n), k))
        else:
            self.maximal = (tuple(range(n)),)
        self._maximal_set = frozenset(self.maximal)
        # (bigger context, position of the added element) for each a not in C
        self.extensions: dict[Context, tuple[tuple[Context, int], ...]] = {}
        # (smaller context, position of the removed element) for each a in C
        self.facets: dict[Context, tuple[tuple[Context, int], ...]] = {}
        for c in self.contexts:
            self.facets[c] = tuple((c[:i] + c[i + 1:], i) for i in range(len(c)))
            ext = []
            if len(c) < k:
                for a in range(n):
                    if a not in c:
                        d = tuple(sorted(c + (a,)))
                        ext.append((d, d.index(a)))
            self.extensions[c] = tuple(ext)

    def is_maximal(self, c: Context) -> bool:
        return c in self._maximal_set

    def __len__(self) -> int:
        return len(self.contexts)


@lru_cache(maxsize=64)
def context_poset(n: int, k: int) -> ContextPoset:
    return ContextPoset(n, k)


def _drop(v: Values, i: int) -> Values:
    return v[:i] + v[i + 1:]


class PresheafFamily:
    """An assignment of a finite set of sections to every context of S_k(A).

    Instances are treated as immutable; every operation returns a new family.
    """

    def __init__(self, A: Structure, B: Structure, k: int, mode: Mode, sections: Mapping[Context, Iterable[Values]]):
        self.A = A
        self.B = B
        self.k = k
        self.mode = mode
        self.poset = context_poset(len(A), k)
        table = {}
        for c in self.poset.contexts:
            vals = sections.get(c, ())
            table[c] = vals if isinstance(vals, frozenset) else frozenset(tuple(v) for v in vals)
        extra = set(sections) - set(table)
        if extra:
            raise ValueError(f"context {sorted(extra)[0]} is not in S_{k}(A)")
        self.sections: dict[Context, frozenset[Values]] = table

    def with_sections(self, sections: Mapping[Context, Iterable[Values]]) -> "PresheafFamily":
        return PresheafFamily(self.A, self.B, self.k, self.mode, sections)

    def empty(self) -> "PresheafFamily":
        return self.with_sections({})

    def __getitem__(self, c: Context) -> frozenset[Values]:
        return self.sections[c]

    def sections_at(self, c: Context) -> list[Section]:
        return [Section(c, v) for v in sorted(self.sections[c])]

    def __iter__(self) -> Iterator[Section]:
        for c in self.poset.contexts:
            for v in sorted(self.sections[c]):
                yield Section(c, v)

    @property
    def total(self) -> int:
        """|S|: the number of sections summed over all contexts."""
        return sum(len(v) for v in self.sections.values())

    def is_empty(self) -> bool:
        return all(not v for v in self.sections.values())

    def __bool__(self) -> bool:
        return not self.is_empty()

    def __eq__(self, other) -> bool:
        if not isinstance(other, PresheafFamily):
            return NotImplemented
        return (
            self.k == other.k
            and len(self.A) == len(other.A)
            and len(self.B) == len(other.B)
            and self.sections == other.sections
        )

    __hash__ = None  # type: ignore[assignment]

    def __le__(self, other: "PresheafFamily") -> bool:
        return all(v <= other.sections.get(c, frozenset()) for c, v in self.sections.items())

    def union(self, other: "PresheafFamily") -> "PresheafFamily":
        return self.with_sections({c: v | other.sections[c] for c, v in self.sections.items()})

    @cached_property
    def fingerprint(self) -> int:
        return hash((self.k, len(self.A), len(self.B), tuple(tuple(sorted(self.sections[c])) for c in self.poset.contexts)))

    def counts(self) -> dict[Context, int]:
        return {c: len(v) for c, v in self.sections.items()}

    def context_key(self, c: Context) -> str:
        return json.dumps([self.A.universe[a] for a in c])

    def to_dump(self, rounds: int | None = None) -> dict:
        """The presheaf dump document: context (as a JSON-encoded element
        array) to the list of value arrays, plus ``k``, ``mode`` and ``rounds``."""
        return {
            "k": self.k,
            "mode": self.mode,
            "rounds": rounds,
            "total_sections": self.total,
            "sections": {
                self.context_key(c): [[self.B.universe[b] for b in v] for v in sorted(self.sections[c])]
                for c in self.poset.contexts
            },
        }

    def __repr__(self) -> str:
        return f"PresheafFamily(k={self.k}, mode={self.mode}, |A|={len(self.A)}, |B|={len(self.B)}, total={self.total})"


def family_from_dump(A: Structure, B: Structure, doc: Mapping) -> PresheafFamily:
    sections = {}
    for key, rows in doc["sections"].items():
        ctx = tuple(A.index[x] for x in json.loads(key))
        sections[ctx] = [tuple(B.index[y] for y in row) for row in rows]
    return PresheafFamily(A, B, doc["k"], doc["mode"], sections)


def build_base(A: Structure, B: Structure, k: int, mode: Mode = "hom", budget: int | None = None) -> PresheafFamily:
    """H_k(A, B) (``hom``) or I_k(A, B) (``iso``): every valid section at every context."""
    if A.vocabulary != B.vocabulary:
        raise StructureError("structures have different vocabularies", "B")
    if mode not in ("hom", "iso"):
        raise ValueError(f"unknown mode {mode!r}")
    width = A.vocabulary.width
    if k < width:
        raise ValueError(f"k={k} is below the relational width {width}")
    check_budget("base presheaf sections", len(A) ** k * len(B) ** k, budget)
    poset = context_poset(len(A), k)
    m = len(B)
    rel_a, rel_b = A.rel_idx, B.rel_idx
    arities = A.vocabulary.relations
    table: dict[Context, frozenset[Values]] = {(): frozenset({()})}
    for c in poset.contexts[1:]:
        last = len(c) - 1
        checks = []  # (relation, A-tuple in positions, is the A-tuple in the relation)
        for name, arity in arities:
            for pos in product(range(len(c)), repeat=arity):
                if last not in pos:
                    continue
                in_a = tuple(c[i] for i in pos) in rel_a[name]
                if mode == "iso" or in_a:
                    checks.append((rel_b[name], pos, in_a))
        out = set()
        for v in table[c[:-1]]:
            for b in range(m):
                if mode == "iso" and b in v:
                    continue
                w = v + (b,)
                if all((tuple(w[i] for i in pos) in rb) == in_a for rb, pos, in_a in checks):
                    out.add(w)
        table[c] = frozenset(out)
    return PresheafFamily(A, B, k, mode, table)


def restrict(s: Section, sub: Iterable[int]) -> Section:
    sub = tuple(sorted(set(sub)))
    f = dict(zip(s.context, s.values))
    if any(a not in f for a in sub):
        raise ValueError(f"{sub} is not a subset of the section's context {s.context}")
    return Section(sub, tuple(f[a] for a in sub))


def up_step(F: PresheafFamily) -> PresheafFamily:
    """Drop sections (below size k) lacking an extension to some C ∪ {a}."""
    out = {}
    for c, vals in F.sections.items():
        keep = vals
        for d, pos in F.poset.extensions[c]:
            if not keep:
                break
            keep = keep & {_drop(w, pos) for w in F.sections[d]}
        out[c] = keep
    return F.with_sections(out)


def down_step(F: PresheafFamily) -> PresheafFamily:
    """Drop sections whose restriction to some C \\ {a} is missing."""
    out = {}
    for c, vals in F.sections.items():
        facets = F.poset.facets[c]
        out[c] = frozenset(v for v in vals if all(_drop(v, i) in F.sections[f] for f, i in facets))
    return F.with_sections(out)


def coflasquify(F: PresheafFamily) -> PresheafFamily:
    """The largest flasque, restriction-closed subfamily of ``F``.

    Round-based: a full up step then a full down step per round, until a
    round removes nothing.
    """
    size = F.total
    while True:
        G = down_step(up_step(F))
        if G.total == size:
            return G
        F, size = G, G.total


def is_flasque(F: PresheafFamily) -> bool:
    return up_step(F).total == F.total


def is_closed(F: PresheafFamily) -> bool:
    return down_step(F).total == F.total


# -- global sections ----------------------------------------------------------


@dataclass(frozen=True)
class GlobalSection:
    """A choice of one section per context, compatible under restriction."""

    assignment: Mapping[Context, Values]

    def total_map(self) -> Values:
        singles = sorted((c[0], v[0]) for c, v in self.assignment.items() if len(c) == 1)
        return tuple(v for _, v in singles)


def is_compatible_family(F: PresheafFamily, family: Mapping[Context, Values]) -> bool:
    """Pairwise agreement on overlaps of maximal contexts, with membership."""
    maximal = F.poset.maximal
    if set(family) != set(maximal) or any(family[c] not in F.sections[c] for c in maximal):
        return False
    for c1, c2 in combinations(maximal, 2):
        f1, f2 = dict(zip(c1, family[c1])), dict(zip(c2, family[c2]))
        if any(f1[a] != f2[a] for a in set(c1) & set(c2)):
            return False
    return True


def compatible_families(F: PresheafFamily, budget: int | None = None) -> Iterator[dict[Context, Values]]:
    """Enumerate k-compatible families over the maximal contexts, in lex order.

    Backtracking: each maximal context takes a section agreeing with all
    previously chosen ones on their overlaps.
    """
    maximal = F.poset.maximal
    limit = get_budget(budget)
    assigned: dict[int, int] = {}
    chosen: list[Values] = []
    visited = 0

    def rec(i: int):
        nonlocal visited
        if i == len(maximal):
            yield dict(zip(maximal, chosen))
            return
        c = maximal[i]
        for v in sorted(F.sections[c]):
            visited += 1
            if visited > limit:
                raise BudgetExceeded("compatible-family search nodes", visited, limit)
            if any(a in assigned and assigned[a] != b for a, b in zip(c, v)):
                continue
            new = [a for a in c if a not in assigned]
            for a, b in zip(c, v):
                assigned.setdefault(a, b)
            chosen.append(v)
            yield from rec(i + 1)
            chosen.pop()
            for a in new:
                del assigned[a]

    yield from rec(0)


def extend_compatible_family(F: PresheafFamily, family: Mapping[Context, Values]) -> GlobalSection:
    """Extend a compatible family to every context by restriction."""
    maximal = F.poset.maximal
    assignment = {}
    for c in F.poset.contexts:
        top = next(m for m in maximal if set(c) <= set(m))
        f = dict(zip(top, family[top]))
        v = tuple(f[a] for a in c)
        if v not in F.sections[c]:
            raise ValueError(f"restriction to {c} is not a section of the family (family not closed?)")
        assignment[c] = v
    return GlobalSection(assignment)


def restrict_global_section(F: PresheafFamily, g: GlobalSection) -> dict[Context, Values]:
    return {c: g.assignment[c] for c in F.poset.maximal}


def is_global_section(F: PresheafFamily, g: GlobalSection) -> bool:
    for c in F.poset.contexts:
        v = g.assignment.get(c)
        if v is None or v not in F.sections[c]:
            return False
        for f, i in F.poset.facets[c]:
            if g.assignment[f] != _drop(v, i):
                return False
    return True


def global_sections(F: PresheafFamily, budget: int | None = None) -> list[GlobalSection]:
    return [extend_compatible_family(F, fam) for fam in compatible_families(F, budget)]


# -- composition and inverse ---------------------------------------------------


def identity_family(A: Structure, k: int) -> PresheafFamily:
    poset = context_poset(len(A), k)
    return PresheafFamily(A, A, k, "iso", {c: [c] for c in poset.contexts})


def compose(S: PresheafFamily, T: PresheafFamily) -> PresheafFamily:
    """(T ∘ S)(U) = { t ∘ s | s ∈ S(U), t ∈ T(im s) }."""
    if S.k != T.k:
        raise ValueError("families have different k")
    if len(S.B) != len(T.A) or S.B.universe != T.A.universe:
        raise StructureError("universe mismatch: S's target is not T's source", "T")
    mode: Mode = "iso" if S.mode == T.mode == "iso" else "hom"
    out = {}
    for u, vals in S.sections.items():
        res = set()
        for v in vals:
            img = tuple(sorted(set(v)))
            for t in T.sections[img]:
                tm = dict(zip(img, t))
                res.add(tuple(tm[b] for b in v))
        out[u] = res
    return PresheafFamily(S.A, T.B, S.k, mode, out)


def dagger(S: PresheafFamily) -> PresheafFamily:
    """The inverse-image family over (B, A) of a partial-isomorphism family."""
    if S.mode != "iso":
        raise ValueError("dagger is only defined on partial-isomorphism families")
    out: dict[Context, set] = {}
    for c, vals in S.sections.items():
        for v in vals:
            if len(set(v)) != len(v):
                raise ValueError(f"section {v} at {c} is not injective")
            inv = sorted(zip(v, c))
            out.setdefault(tuple(b for b, _ in inv), set()).add(tuple(a for _, a in inv))
    return PresheafFamily(S.B, S.A, S.k, "iso", out)
