"""Named fixtures and seeded random instance generators."""

from __future__ import annotations

import random
from typing import Sequence

from .structures import (
    GRAPH,
    LinearTemplate,
    Structure,
    clique,
    cycle,
    disjoint_union,
    graph,
    linear_instance,
    path,
)

DEFAULT_SEED = 20211

TRI_EQUATIONS = [(("x", "y"), (1, 1), 1), (("y", "z"), (1, 1), 1), (("x", "z"), (1, 1), 1)]


def tri() -> tuple[Structure, LinearTemplate]:
    return linear_instance(2, TRI_EQUATIONS)


def fixtures() -> dict[str, Structure]:
    """The desk-scale fixtures used throughout the tests."""
    return {
        "K2": clique(2),
        "K3": clique(3, names=["a", "b", "c"]),
        "C5": cycle(5, prefix="w"),
        "C6": cycle(6, prefix="v"),
        "2C3": disjoint_union(cycle(3, prefix="u"), cycle(3, names=["u3", "u4", "u5"])),
        "P6": path(6, prefix="p"),
        "TRI": tri()[0],
    }


def cube() -> Structure:
    u = [format(i, "03b") for i in range(8)]
    return graph(u, [(x, y) for x in u for y in u if x < y and sum(a != b for a, b in zip(x, y)) == 1])


def random_graph(n: int, edge_prob: float, rng: random.Random, prefix: str = "") -> Structure:
    u = [f"{prefix}{i}" for i in range(n)]
    return graph(u, [(x, y) for i, x in enumerate(u) for y in u[i + 1:] if rng.random() < edge_prob])


def random_digraph(n: int, edge_prob: float, rng: random.Random, loops: bool = False, prefix: str = "") -> Structure:
    u = [f"{prefix}{i}" for i in range(n)]
    edges = frozenset((x, y) for x in u for y in u if (loops or x != y) and rng.random() < edge_prob)
    return Structure(GRAPH, tuple(u), {"E": edges})


def permuted(S: Structure, rng: random.Random, prefix: str = "q") -> Structure:
    """An isomorphic copy with renamed, shuffled elements."""
    order = list(S.universe)
    rng.shuffle(order)
    rename = {x: f"{prefix}{i}" for i, x in enumerate(order)}
    rels = {n: frozenset(tuple(rename[x] for x in t) for t in ts) for n, ts in S.relations.items()}
    return Structure(S.vocabulary, tuple(rename[x] for x in S.universe), rels)


def random_structure_pair(rng: random.Random, max_a: int = 5, max_b: int = 5) -> tuple[Structure, Structure]:
    """A random pair of digraphs; B may carry loops, A does not."""
    A = random_digraph(rng.randint(2, max_a), rng.choice([0.2, 0.35, 0.5]), rng, prefix="a")
    B = random_digraph(rng.randint(2, max_b), rng.choice([0.3, 0.5, 0.7]), rng, loops=rng.random() < 0.3, prefix="b")
    return A, B


def random_linear_system(
    p: int,
    n_vars: int,
    n_eqs: int,
    rng: random.Random,
    arities: Sequence[int] = (2, 3),
) -> tuple[Structure, LinearTemplate]:
    variables = [f"x{i}" for i in range(n_vars)]
    eqs = []
    for _ in range(n_eqs):
        arity = min(rng.choice(arities), n_vars)
        xs = rng.sample(variables, arity)
        eqs.append((xs, [rng.randrange(1, p) for _ in xs], rng.randrange(p)))
    return linear_instance(p, eqs, variables=variables)


def equivalence_pairs(seed: int = DEFAULT_SEED, count: int = 100, max_n: int = 8) -> list[tuple[Structure, Structure]]:
    """Graph pairs mixing isomorphic copies, same-degree-sequence pairs and random pairs."""
    rng = random.Random(seed)
    f = fixtures()
    pairs = [(f["C6"], f["2C3"]), (f["C6"], f["P6"]), (f["K3"], f["K3"]), (f["C6"], f["C5"])]
    # regular graphs that colour refinement cannot tell apart
    pairs += [
        (cycle(7), disjoint_union(cycle(3), cycle(4, prefix="r"))),
        (cycle(8), disjoint_union(cycle(4), cycle(4, prefix="r"))),
        (cycle(8), disjoint_union(cycle(3), cycle(5, prefix="r"))),
        (cube(), disjoint_union(clique(4), clique(4, prefix="r"))),
    ]
    while len(pairs) < count:
        n = rng.randint(2, max_n)
        G = random_graph(n, rng.choice([0.3, 0.5, 0.7]), rng, prefix="g")
        kind = rng.random()
        if kind < 0.3:
            H = permuted(G, rng)
        elif kind < 0.6:
            H = random_graph(n, sum(1 for _ in G.relations["E"]) / max(1, n * (n - 1)), rng, prefix="h")
        else:
            H = random_graph(rng.randint(2, max_n), rng.choice([0.3, 0.5]), rng, prefix="h")
        pairs.append((G, H))
    return pairs
