import json
import random
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohcsp.corpus import random_digraph, random_structure_pair
from cohcsp.presheaf import (
    ContextPoset,
    GlobalSection,
    PresheafFamily,
    build_base,
    coflasquify,
    compatible_families,
    compose,
    dagger,
    down_step,
    extend_compatible_family,
    family_from_dump,
    global_sections,
    identity_family,
    is_closed,
    is_compatible_family,
    is_flasque,
    is_global_section,
    restrict,
    restrict_global_section,
    up_step,
)
from cohcsp.structures import Section, brute_force, check_section

from oracles import as_dict, flasque_closed_union_naive, naive_closed, naive_flasque


def ctx(A, *names):
    return tuple(sorted(A.index[x] for x in names))


def test_context_poset_shape():
    P = ContextPoset(4, 2)
    assert len(P.contexts) == 1 + 4 + 6
    assert len(P.maximal) == comb(4, 2)
    small = ContextPoset(2, 3)
    assert small.maximal == ((0, 1),)
    for c in P.contexts:
        assert any(set(c) <= set(m) for m in P.maximal)
        for f, _ in P.facets[c]:
            assert f in P.contexts


def test_build_base_examples(fx):
    K3, K2 = fx["K3"], fx["K2"]
    H = build_base(K3, K2, 2)
    for a in "abc":
        assert len(H[ctx(K3, a)]) == 2
    for pair in ["ab", "ac", "bc"]:
        assert H[ctx(K3, *pair)] == {(0, 1), (1, 0)}
    assert H[()] == {()}
    H3 = build_base(K3, K2, 3)
    assert H3[(0, 1, 2)] == frozenset()
    I = build_base(K2, K2, 2, "iso")
    assert I[(0, 1)] == {(0, 1), (1, 0)}


def test_build_base_requires_width(fx):
    from cohcsp.corpus import tri

    A, _ = tri()
    with pytest.raises(ValueError, match="width"):
        build_base(fx["K3"], fx["K2"], 1)
    assert build_base(A, A, 2).k == 2


def test_base_sections_are_valid(fx):
    for mode in ("hom", "iso"):
        F = build_base(fx["C6"], fx["2C3"], 2, mode)
        for s in F:
            assert check_section(F.A, F.B, s, mode)


def test_restrict(fx):
    s = Section((0, 1), (0, 1))
    assert restrict(s, [0]) == Section((0,), (0,))
    assert restrict(s, s.context) == s
    assert restrict(Section((0, 1, 2), (0, 1, 0)), [0, 2]) == Section((0, 2), (0, 0))
    with pytest.raises(ValueError):
        restrict(s, [2])


def test_up_step_examples(fx):
    K3, K2 = fx["K3"], fx["K2"]
    H2 = build_base(K3, K2, 2)
    assert up_step(H2) == H2
    H3 = build_base(K3, K2, 3)
    stepped = up_step(H3)
    assert all(not stepped[c] for c in stepped.poset.contexts if len(c) == 2)
    singles_only = H2.with_sections({c: v for c, v in H2.sections.items() if len(c) <= 1})
    assert not is_flasque(singles_only)
    assert all(not up_step(singles_only)[c] for c in H2.poset.contexts if len(c) == 1)


def test_down_step_examples(fx):
    K3, K2 = fx["K3"], fx["K2"]
    H2 = build_base(K3, K2, 2)
    assert down_step(H2) == H2
    assert down_step(up_step(H2)) == H2
    a, b = ctx(K3, "a"), ctx(K3, "a", "b")
    broken = H2.with_sections({**H2.sections, a: {(1,)}})
    out = down_step(broken)
    assert (0, 1) not in out[b] and (1, 0) in out[b]


def test_coflasquify_examples(fx):
    K3, K2 = fx["K3"], fx["K2"]
    H2 = build_base(K3, K2, 2)
    assert coflasquify(H2) == H2 and not H2.is_empty()
    assert coflasquify(build_base(K3, K2, 3)).is_empty()
    assert coflasquify(H2.empty()).is_empty()


def test_flasque_and_closed_predicates(fx):
    H2 = build_base(fx["K3"], fx["K2"], 2)
    assert is_closed(H2) and is_flasque(H2)
    A, B = random_structure_pair(random.Random(5))
    assert is_closed(build_base(A, B, 2))


def test_global_sections_examples(fx):
    K2, K3 = fx["K2"], fx["K3"]
    gs = global_sections(coflasquify(build_base(K2, K2, 2)))
    assert sorted(g.total_map() for g in gs) == brute_force(K2, K2)
    S = coflasquify(build_base(K3, K2, 2))
    assert not S.is_empty() and global_sections(S) == []
    assert global_sections(S.empty()) == []


def test_compose_examples(fx):
    K3, K2 = fx["K3"], fx["K2"]
    S = coflasquify(build_base(K3, K2, 2))
    assert compose(identity_family(K3, 2), S) == S
    T = compose(coflasquify(build_base(K3, K3, 2)), S)
    assert not T.is_empty()
    assert compose(S, build_base(K2, K2, 2).empty()).is_empty()


def test_dagger_examples(fx):
    K2, K3, C6, C3s = fx["K2"], fx["K3"], fx["C6"], fx["2C3"]
    assert dagger(build_base(K2, K3, 2, "iso")) == build_base(K3, K2, 2, "iso")
    S = coflasquify(build_base(C6, C3s, 2, "iso"))
    assert dagger(dagger(S)) == S
    assert dagger(S.empty()).is_empty()
    with pytest.raises(ValueError):
        dagger(build_base(K2, K2, 2))


def test_dump_round_trip(fx):
    S = coflasquify(build_base(fx["K3"], fx["K2"], 2))
    doc = json.loads(json.dumps(S.to_dump(rounds=1)))
    assert doc["k"] == 2 and doc["mode"] == "hom" and doc["rounds"] == 1
    assert doc["sections"]['["a", "b"]'] == [["0", "1"], ["1", "0"]]
    assert family_from_dump(S.A, S.B, doc) == S


# -- properties over seeded corpora -----------------------------------------------


def corpus(seed, count, max_a=5, max_b=4):
    rng = random.Random(seed)
    return [random_structure_pair(rng, max_a, max_b) for _ in range(count)]


def test_coflasquify_is_flasque_closed_idempotent(seed):
    for A, B in corpus(seed, 60):
        for k in (2, 3):
            H = build_base(A, B, k)
            S = coflasquify(H)
            assert S <= H
            assert naive_flasque(as_dict(S), len(A), k) and naive_closed(as_dict(S))
            assert coflasquify(S) == S


def test_local_inconsistency_propagates(seed):
    for A, B in corpus(seed + 1, 80):
        S = coflasquify(build_base(A, B, 2))
        if any(not S[c] for c in S.poset.contexts if c):
            assert S.is_empty()


def test_coflasquify_is_union_of_flasque_closed_subfamilies(seed):
    rng = random.Random(seed)
    checked = 0
    for _ in range(80):
        A = random_digraph(rng.randint(2, 3), 0.4, rng, prefix="a")
        B = random_digraph(rng.randint(1, 2), 0.6, rng, loops=rng.random() < 0.5, prefix="b")
        H = build_base(A, B, 2)
        union = flasque_closed_union_naive(H, limit=14)
        if union is not None:
            checked += 1
            assert union == as_dict(coflasquify(H))
    assert checked >= 20


def test_global_sections_match_brute_force(seed):
    for A, B in corpus(seed + 2, 60, max_a=5, max_b=3):
        for k in (2, 3):
            S = coflasquify(build_base(A, B, k))
            gs = global_sections(S)
            assert sorted(g.total_map() for g in gs) == brute_force(A, B)
            for g in gs:
                assert is_global_section(S, g)
                fam = restrict_global_section(S, g)
                assert is_compatible_family(S, fam)
                assert extend_compatible_family(S, fam) == g


def test_compatible_family_rejects_disagreement(fx):
    S = coflasquify(build_base(fx["K3"], fx["K2"], 2))
    fam = {c: min(S[c]) for c in S.poset.maximal}
    assert not is_compatible_family(S, fam)
    assert list(compatible_families(S)) == []
    assert not is_global_section(S, GlobalSection({}))


def test_compose_associative_and_monotone(seed):
    rng = random.Random(seed + 3)
    for _ in range(25):
        A = random_digraph(rng.randint(2, 4), 0.4, rng, prefix="a")
        B = random_digraph(rng.randint(2, 3), 0.5, rng, loops=True, prefix="b")
        C = random_digraph(rng.randint(2, 3), 0.6, rng, loops=True, prefix="c")
        D = random_digraph(2, 0.7, rng, loops=True, prefix="d")
        S, T, U = (coflasquify(build_base(X, Y, 2)) for X, Y in [(A, B), (B, C), (C, D)])
        assert compose(compose(S, T), U) == compose(S, compose(T, U))
        Sm = S.with_sections({c: set(sorted(v)[: len(v) // 2 + 1]) if len(c) == 2 else v for c, v in S.sections.items()})
        assert compose(Sm, T) <= compose(S, T)
        Tm = T.with_sections({c: set(sorted(v)[:1]) for c, v in T.sections.items()})
        assert compose(S, Tm) <= compose(S, T)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.floats(0.1, 0.9), st.integers(0, 2**16))
def test_dagger_is_involution(n, p, s):
    rng = random.Random(s)
    A = random_digraph(n, p, rng, prefix="a")
    B = random_digraph(n, p, rng, prefix="b")
    I = build_base(A, B, 2, "iso")
    assert dagger(dagger(I)) == I
    assert dagger(I) == build_base(B, A, 2, "iso")


def test_family_rejects_foreign_context(fx):
    with pytest.raises(ValueError):
        PresheafFamily(fx["K2"], fx["K2"], 1, "hom", {(0, 1): [(0, 1)]})
