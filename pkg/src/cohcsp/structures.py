"""Finite relational structures, partial maps between them, and generators.

Elements are identified by strings in documents and in the public API; every
:class:`Structure` also carries a dense integer re-indexing (``index`` and
``rel_idx``) that the presheaf machinery uses in its inner loops.  Sections and
brute-force maps are therefore expressed over element *indices*.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations, product
from math import perm
from typing import Iterable, Literal, Mapping, NamedTuple, Sequence

from ._budget import check_budget

Mode = Literal["hom", "iso"]
MapMode = Literal["hom", "embed", "iso"]


class StructureError(ValueError):
    """Invalid structure document or structure operation.

    ``location`` is a dotted path into the offending document (or the name of
    the offending argument) so that error messages can point at the problem.
    """

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass(frozen=True)
class Vocabulary:
    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for i, (name, arity) in enumerate(self.relations):
            if not isinstance(name, str) or not name:
                raise StructureError("relation name must be a non-empty string", f"vocabulary[{i}]")
            if name in seen:
                raise StructureError(f"duplicate relation name {name!r}", f"vocabulary[{i}]")
            if not isinstance(arity, int) or isinstance(arity, bool) or arity < 1:
                raise StructureError(f"arity must be a positive integer, got {arity!r}", f"vocabulary[{i}]")
            seen.add(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def arity(self, name: str) -> int:
        for rel, arity in self.relations:
            if rel == name:
                return arity
        raise KeyError(name)

    @property
    def width(self) -> int:
        """Relational width: the maximum arity (1 for an empty vocabulary)."""
        return max((arity for _, arity in self.relations), default=1)


@dataclass(frozen=True, eq=True)
class Structure:
    vocabulary: Vocabulary
    universe: tuple[str, ...]
    relations: Mapping[str, frozenset[tuple[str, ...]]] = field(default_factory=dict)

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))
        if len(set(self.universe)) != len(self.universe):
            dup = next(x for i, x in enumerate(self.universe) if x in self.universe[:i])
            raise StructureError(f"duplicate universe element {dup!r}", "universe")
        members = set(self.universe)
        rels = {}
        for name, arity in self.vocabulary.relations:
            tuples = frozenset(tuple(t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != arity:
                    raise StructureError(f"arity mismatch: tuple {list(t)} for arity {arity}", f"relations.{name}")
                for x in t:
                    if x not in members:
                        raise StructureError(f"unknown element {x!r} in tuple {list(t)}", f"relations.{name}")
            rels[name] = tuples
        extra = set(self.relations) - set(rels)
        if extra:
            raise StructureError(f"relation {sorted(extra)[0]!r} not in vocabulary", "relations")
        object.__setattr__(self, "relations", rels)

    def __len__(self) -> int:
        return len(self.universe)

    @cached_property
    def index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.universe)}

    @cached_property
    def rel_idx(self) -> dict[str, frozenset[tuple[int, ...]]]:
        """Relations re-indexed over element positions."""
        ix = self.index
        return {name: frozenset(tuple(ix[x] for x in t) for t in tuples) for name, tuples in self.relations.items()}

    @cached_property
    def all_tuples(self) -> tuple[tuple[str, tuple[int, ...]], ...]:
        """Every (relation, index tuple) pair, in a fixed order."""
        return tuple((name, t) for name in self.vocabulary.names for t in sorted(self.rel_idx[name]))

    def to_dict(self) -> dict:
        ix = self.index
        return {
            "vocabulary": [{"name": n, "arity": a} for n, a in self.vocabulary.relations],
            "universe": list(self.universe),
            "relations": {
                name: [list(t) for t in sorted(self.relations[name], key=lambda t: [ix[x] for x in t])]
                for name in self.vocabulary.names
            },
        }


class Section(NamedTuple):
    """A partial map given by a sorted context of A-indices and aligned B-indices."""

    context: tuple[int, ...]
    values: tuple[int, ...]

    @classmethod
    def from_mapping(cls, A: Structure, B: Structure, mapping: Mapping[str, str]) -> "Section":
        pairs = sorted((A.index[a], B.index[b]) for a, b in mapping.items())
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def as_mapping(self, A: Structure, B: Structure) -> dict[str, str]:
        return {A.universe[a]: B.universe[b] for a, b in zip(self.context, self.values)}


@dataclass(frozen=True)
class LinearTemplate:
    """Affine equations over Z_p, one per relation symbol.

    Relation ``name`` is interpreted on universe ``Z_p`` as the set of tuples
    ``r`` with ``sum(coeffs[i] * r[i]) == const (mod p)``.
    """

    modulus: int
    linear: Mapping[str, tuple[tuple[int, ...], int]]

    def __post_init__(self):
        if not _is_prime(self.modulus):
            raise StructureError(f"modulus must be prime, got {self.modulus}", "modulus")
        p = self.modulus
        norm = {}
        for name, (coeffs, const) in self.linear.items():
            if not coeffs:
                raise StructureError("relation needs at least one coefficient", f"linear.{name}")
            norm[name] = (tuple(c % p for c in coeffs), const % p)
        object.__setattr__(self, "linear", dict(sorted(norm.items())))

    @property
    def vocabulary(self) -> Vocabulary:
        return Vocabulary(tuple((name, len(c)) for name, (c, _) in self.linear.items()))


def _is_prime(p) -> bool:
    if not isinstance(p, int) or isinstance(p, bool) or p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def template_structure(T: LinearTemplate) -> Structure:
    """The structure on universe ``["0", ..., str(p-1)]`` induced by ``T``."""
    p = T.modulus
    rels = {}
    for name, (coeffs, const) in T.linear.items():
        rels[name] = frozenset(
            tuple(str(v) for v in r)
            for r in product(range(p), repeat=len(coeffs))
            if sum(c * v for c, v in zip(coeffs, r)) % p == const
        )
    return Structure(T.vocabulary, tuple(str(v) for v in range(p)), rels)


# -- documents ---------------------------------------------------------------


def _load(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise StructureError(f"malformed JSON: {e.msg}", f"line {e.lineno} column {e.colno}") from None
    if not isinstance(doc, dict):
        raise StructureError("document must be a JSON object", "$")
    return doc


def _vocabulary_from(doc: dict) -> Vocabulary:
    voc = doc.get("vocabulary")
    if not isinstance(voc, list):
        raise StructureError("missing or non-list 'vocabulary'", "vocabulary")
    rels = []
    for i, entry in enumerate(voc):
        if not isinstance(entry, dict) or "name" not in entry or "arity" not in entry:
            raise StructureError("entries need 'name' and 'arity'", f"vocabulary[{i}]")
        rels.append((entry["name"], entry["arity"]))
    return Vocabulary(tuple(rels))


def structure_from_dict(doc: dict) -> Structure:
    vocabulary = _vocabulary_from(doc)
    universe = doc.get("universe")
    if not isinstance(universe, list) or not all(isinstance(x, str) for x in universe):
        raise StructureError("'universe' must be a list of strings", "universe")
    relations = doc.get("relations", {})
    if not isinstance(relations, dict):
        raise StructureError("'relations' must be an object", "relations")
    rels = {}
    for name, tuples in relations.items():
        if not isinstance(tuples, list):
            raise StructureError("tuples must be a list", f"relations.{name}")
        for j, t in enumerate(tuples):
            if not isinstance(t, list):
                raise StructureError("tuple must be a list", f"relations.{name}[{j}]")
        rels[name] = [tuple(t) for t in tuples]
    return Structure(vocabulary, tuple(universe), rels)


def parse_structure(text: str) -> Structure:
    return structure_from_dict(_load(text))


def serialize_structure(S: Structure) -> str:
    return json.dumps(S.to_dict(), sort_keys=True)


def parse_template(text: str) -> LinearTemplate:
    """Parse a linear template document.

    The document carries ``modulus`` and ``linear``; ``vocabulary`` is
    optional but, when present, must agree with the coefficient lengths.
    """
    doc = _load(text)
    return template_from_dict(doc)


def template_from_dict(doc: dict) -> LinearTemplate:
    if "modulus" not in doc or "linear" not in doc:
        raise StructureError("template needs 'modulus' and 'linear'", "$")
    linear = doc["linear"]
    if not isinstance(linear, dict):
        raise StructureError("'linear' must be an object", "linear")
    rels = {}
    for name, spec in linear.items():
        if not isinstance(spec, dict) or "coeffs" not in spec or "const" not in spec:
            raise StructureError("needs 'coeffs' and 'const'", f"linear.{name}")
        rels[name] = (tuple(spec["coeffs"]), spec["const"])
    T = LinearTemplate(doc["modulus"], rels)
    if "vocabulary" in doc:
        voc = _vocabulary_from(doc)
        if dict(voc.relations) != dict(T.vocabulary.relations):
            raise StructureError("vocabulary disagrees with coefficient lengths", "vocabulary")
    return T


def serialize_template(T: LinearTemplate) -> str:
    doc = template_structure(T).to_dict()
    doc["modulus"] = T.modulus
    doc["linear"] = {name: {"coeffs": list(c), "const": b} for name, (c, b) in T.linear.items()}
    return json.dumps(doc, sort_keys=True)


# -- operations --------------------------------------------------------------


def induced_substructure(S: Structure, subset: Iterable[str]) -> Structure:
    keep = set(subset)
    unknown = keep - set(S.universe)
    if unknown:
        raise StructureError(f"element {sorted(unknown)[0]!r} outside universe", "subset")
    universe = tuple(x for x in S.universe if x in keep)
    rels = {name: frozenset(t for t in tuples if keep.issuperset(t)) for name, tuples in S.relations.items()}
    return Structure(S.vocabulary, universe, rels)


def check_section(A: Structure, B: Structure, s: Section, mode: Mode = "hom") -> bool:
    """Is ``s`` a partial homomorphism (``hom``) or partial isomorphism (``iso``)?"""
    ctx, vals = s
    if len(ctx) != len(vals):
        raise StructureError("context and values differ in length", "section")
    f = dict(zip(ctx, vals))
    if len(f) != len(ctx):
        raise StructureError("repeated context element", "section")
    if any(not 0 <= a < len(A) for a in ctx) or any(not 0 <= b < len(B) for b in vals):
        raise StructureError("section refers to elements outside the universes", "section")
    for name, t in A.all_tuples:
        if all(x in f for x in t) and tuple(f[x] for x in t) not in B.rel_idx[name]:
            return False
    if mode == "hom":
        return True
    if mode != "iso":
        raise ValueError(f"unknown mode {mode!r}")
    if len(set(vals)) != len(vals):
        return False
    inv = {b: a for a, b in f.items()}
    for name, t in B.all_tuples:
        if all(y in inv for y in t) and tuple(inv[y] for y in t) not in A.rel_idx[name]:
            return False
    return True


def brute_force(A: Structure, B: Structure, mode: MapMode = "hom", budget: int | None = None) -> list[tuple[int, ...]]:
    """Enumerate every total map A -> B of the given kind.

    Maps are value vectors aligned with ``A.universe`` (entries are B-indices),
    in lexicographic order.
    """
    if mode not in ("hom", "embed", "iso"):
        raise ValueError(f"unknown mode {mode!r}")
    if A.vocabulary != B.vocabulary:
        raise StructureError("structures have different vocabularies", "B")
    n, m = len(A), len(B)
    if mode == "iso" and n != m:
        return []
    ctx = tuple(range(n))
    tuples = A.all_tuples
    rel_b = B.rel_idx
    out = []
    if mode == "hom":
        check_budget("brute-force maps", m**n, budget)
        for vals in product(range(m), repeat=n):
            if all(tuple(vals[x] for x in t) in rel_b[name] for name, t in tuples):
                out.append(vals)
        return out
    # injective maps only, still in lexicographic order
    check_budget("brute-force maps", perm(m, n) if n <= m else 0, budget)
    for vals in permutations(range(m), n):
        if check_section(A, B, Section(ctx, vals), "iso"):
            out.append(vals)
    return out


# -- generators --------------------------------------------------------------

GRAPH = Vocabulary((("E", 2),))


def _names(n: int, names: Sequence[str] | None, prefix: str) -> tuple[str, ...]:
    if n < 1:
        raise StructureError(f"size must be at least 1, got {n}", "n")
    if names is None:
        return tuple(f"{prefix}{i}" for i in range(n))
    if len(names) != n:
        raise StructureError(f"expected {n} names, got {len(names)}", "names")
    return tuple(names)


def graph(universe: Sequence[str], edges: Iterable[tuple[str, str]]) -> Structure:
    """Undirected graph on ``universe``, stored with symmetric closure."""
    sym = set()
    for x, y in edges:
        sym.add((x, y))
        sym.add((y, x))
    return Structure(GRAPH, tuple(universe), {"E": frozenset(sym)})


def clique(n: int, names: Sequence[str] | None = None, prefix: str = "") -> Structure:
    u = _names(n, names, prefix)
    return graph(u, [(x, y) for i, x in enumerate(u) for y in u[i + 1:]])


def cycle(n: int, names: Sequence[str] | None = None, prefix: str = "") -> Structure:
    u = _names(n, names, prefix)
    if n < 3:
        raise StructureError("a cycle needs at least 3 vertices", "n")
    return graph(u, [(u[i], u[(i + 1) % n]) for i in range(n)])


def path(n: int, names: Sequence[str] | None = None, prefix: str = "") -> Structure:
    u = _names(n, names, prefix)
    return graph(u, [(u[i], u[i + 1]) for i in range(n - 1)])


def disjoint_union(S: Structure, T: Structure) -> Structure:
    """Disjoint union; element names are kept unless the universes overlap,
    in which case they become ``0.x`` and ``1.y``."""
    if S.vocabulary != T.vocabulary:
        raise StructureError("structures have different vocabularies", "T")
    if set(S.universe) & set(T.universe):
        left = {x: f"0.{x}" for x in S.universe}
        right = {y: f"1.{y}" for y in T.universe}
    else:
        left = {x: x for x in S.universe}
        right = {y: y for y in T.universe}
    rels = {}
    for name in S.vocabulary.names:
        rels[name] = frozenset(tuple(left[x] for x in t) for t in S.relations[name]) | frozenset(
            tuple(right[y] for y in t) for t in T.relations[name]
        )
    return Structure(S.vocabulary, tuple(left.values()) + tuple(right.values()), rels)


Equation = tuple[Sequence[str], Sequence[int], int]


def linear_relation_name(coeffs: Sequence[int], const: int) -> str:
    return "E_" + "_".join(str(c) for c in coeffs) + f"_c{const}"


def linear_instance(p: int, equations: Sequence[Equation], variables: Sequence[str] | None = None) -> tuple[Structure, LinearTemplate]:
    """Instance A and template for a system of equations over Z_p.

    Each equation ``(vars, coeffs, const)`` becomes one tuple of the relation
    ``E_{coeffs, const}``; the universe is ``variables`` or the variables in
    order of first appearance.
    """
    if not _is_prime(p):
        raise StructureError(f"modulus must be prime, got {p}", "p")
    linear: dict[str, tuple[tuple[int, ...], int]] = {}
    tuples: dict[str, set] = {}
    order: list[str] = list(variables) if variables is not None else []
    for i, (xs, coeffs, const) in enumerate(equations):
        xs = tuple(xs)
        coeffs = tuple(c % p for c in coeffs)
        if len(xs) != len(coeffs) or not xs:
            raise StructureError("variables and coefficients differ in length", f"equations[{i}]")
        if len(set(xs)) != len(xs):
            raise StructureError("variables in an equation must be distinct", f"equations[{i}]")
        name = linear_relation_name(coeffs, const % p)
        linear[name] = (coeffs, const % p)
        tuples.setdefault(name, set()).add(xs)
        if variables is None:
            order.extend(x for x in xs if x not in order)
    T = LinearTemplate(p, linear)
    A = Structure(T.vocabulary, tuple(order), {name: frozenset(ts) for name, ts in tuples.items()})
    return A, T


def generate(kind: str, *args, **kwargs):
    """Dispatch to a fixture generator by name (``clique``, ``cycle``,
    ``path``, ``union``/``disjoint_union``, ``linear``/``linear_instance``)."""
    table = {
        "clique": clique,
        "cycle": cycle,
        "path": path,
        "union": disjoint_union,
        "disjoint_union": disjoint_union,
        "linear": linear_instance,
        "linear_instance": linear_instance,
    }
    if kind not in table:
        raise StructureError(f"unknown generator kind {kind!r}", "kind")
    return table[kind](*args, **kwargs)
