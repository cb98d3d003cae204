"""Independent oracles used by the tests.

Nothing here calls the library's propagation or lattice code; families are
handled as plain dicts from context tuples to sets of value tuples.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

import numpy as np
import sympy


# -- families as dicts ---------------------------------------------------------------


def as_dict(F) -> dict[tuple, set]:
    return {c: set(v) for c, v in F.sections.items()}


def restrict_values(ctx, vals, sub):
    f = dict(zip(ctx, vals))
    return tuple(f[a] for a in sub)


def naive_closed(fam: dict) -> bool:
    for c, vals in fam.items():
        for i in range(len(c)):
            sub = c[:i] + c[i + 1:]
            if any(v[:i] + v[i + 1:] not in fam[sub] for v in vals):
                return False
    return True


def naive_flasque(fam: dict, n: int, k: int) -> bool:
    for c, vals in fam.items():
        if len(c) >= k:
            continue
        for a in range(n):
            if a in c:
                continue
            d = tuple(sorted(c + (a,)))
            below = {restrict_values(d, w, c) for w in fam[d]}
            if not vals <= below:
                return False
    return True


def down_closure(tops: list[tuple[tuple, tuple]], contexts) -> dict:
    fam = {c: set() for c in contexts}
    for ctx, vals in tops:
        for size in range(len(ctx) + 1):
            for sub in combinations(ctx, size):
                fam[sub].add(restrict_values(ctx, vals, sub))
    return fam


def flasque_closed_union_naive(F, limit: int = 16) -> dict | None:
    """Union of every flasque closed subfamily, by enumerating all subsets of
    all sections.  ``None`` when the family has more than ``limit`` sections."""
    items = [(c, v) for c in F.poset.contexts for v in sorted(F[c])]
    if len(items) > limit:
        return None
    n, k = len(F.A), F.k
    union = {c: set() for c in F.poset.contexts}
    for mask in range(1 << len(items)):
        fam = {c: set() for c in F.poset.contexts}
        for i, (c, v) in enumerate(items):
            if mask >> i & 1:
                fam[c].add(v)
        if naive_closed(fam) and naive_flasque(fam, n, k):
            for c in fam:
                union[c] |= fam[c]
    return union


def flasque_closed_union_tops(F, limit: int = 22) -> dict | None:
    """Same union, enumerating subsets of top-level sections only.

    With |A| >= k a flasque closed family is the downward closure of its
    sections at the k-element contexts, so subsets of those sections cover
    every candidate.  Masks are checked in bulk with numpy.
    """
    n, k = len(F.A), F.k
    if n < k:
        return None
    tops = [(c, v) for c in F.poset.contexts if len(c) == k for v in sorted(F[c])]
    if len(tops) > limit:
        return None
    full = down_closure(tops, F.poset.contexts)
    # tops whose closure leaves F can never be used
    allowed = 0
    for i, (c, v) in enumerate(tops):
        single = down_closure([(c, v)], F.poset.contexts)
        if all(single[d] <= F[d] for d in single):
            allowed |= 1 << i
    constraints = []
    for c in F.poset.contexts:
        if len(c) >= k:
            continue
        for sigma in full[c]:
            p = sum(1 << i for i, (t, v) in enumerate(tops) if set(c) <= set(t) and restrict_values(t, v, c) == sigma)
            for a in range(n):
                if a in c:
                    continue
                q = sum(
                    1 << i
                    for i, (t, v) in enumerate(tops)
                    if set(c) | {a} <= set(t) and restrict_values(t, v, c) == sigma
                )
                constraints.append((p, q))
    masks = np.arange(1 << len(tops), dtype=np.uint64)
    ok = (masks & np.uint64(~allowed & ((1 << len(tops)) - 1))) == 0
    for p, q in constraints:
        ok &= ((masks & np.uint64(p)) == 0) | ((masks & np.uint64(q)) != 0)
    best = int(np.bitwise_or.reduce(masks[ok])) if ok.any() else 0
    return down_closure([t for i, t in enumerate(tops) if best >> i & 1], F.poset.contexts)


# -- integer systems --------------------------------------------------------------------


def rationally_solvable(M: list[list[int]], b: list[int]) -> bool:
    A = sympy.Matrix(M)
    return A.rank() == A.row_join(sympy.Matrix(b)).rank()


def _independent_rows(M):
    rows, basis = [], sympy.zeros(0, len(M[0]))
    for i, r in enumerate(M):
        cand = basis.col_join(sympy.Matrix([r]))
        if cand.rank() > basis.rows:
            basis, rows = cand, rows + [i]
    return rows


def integer_solvable_residues(M: list[list[int]], b: list[int], max_cases: int = 2_000_000) -> bool:
    """Exact integer solvability by exhaustive residue enumeration.

    After keeping independent rows (rank r) and picking r pivot columns with
    the smallest non-zero determinant d, the pivot coordinates are
    ``adj(P) (b - F y) / d``; integrality depends on the free coordinates ``y``
    only modulo d, so every residue class in [0, d)^(n-r) is tried.
    """
    if not M or not M[0]:
        return all(x == 0 for x in b)
    if not rationally_solvable(M, b):
        return False
    rows = _independent_rows(M)
    r, n = len(rows), len(M[0])
    if r == 0:
        return True
    A = sympy.Matrix([M[i] for i in rows])
    bb = sympy.Matrix([b[i] for i in rows])
    best = None
    for cols in combinations(range(n), r):
        d = A[:, list(cols)].det()
        if d != 0 and (best is None or abs(d) < abs(best[1])):
            best = (cols, d)
            if abs(d) == 1:
                break
    cols, d = best
    free = [j for j in range(n) if j not in cols]
    d = int(d)
    if abs(d) == 1:
        return True
    adj = np.array(A[:, list(cols)].adjugate().tolist(), dtype=object)
    Fm = np.array(A[:, free].tolist(), dtype=object) if free else np.zeros((r, 0), dtype=object)
    bv = np.array(bb.tolist(), dtype=object).reshape(r)
    m = abs(d)
    if m ** len(free) > max_cases:
        raise RuntimeError(f"residue enumeration too large: {m}^{len(free)}")
    base = adj.dot(bv) % m
    step = [adj.dot(Fm[:, j]) % m for j in range(len(free))]
    for y in product(range(m), repeat=len(free)):
        acc = base.copy()
        for j, yj in enumerate(y):
            acc = acc - yj * step[j]
        if all(int(v) % m == 0 for v in acc):
            return True
    return False


def solution_bound(M: list[list[int]], b: list[int]) -> int:
    """Max |r x r minor| of the augmented matrix on independent rows: an integer
    solvable system has a solution with every entry within this bound."""
    rows = _independent_rows(M)
    if not rows:
        return 0
    aug = sympy.Matrix([M[i] + [b[i]] for i in rows])
    r = len(rows)
    return max(abs(int(aug[:, list(cols)].det())) for cols in combinations(range(aug.cols), r))


def integer_solvable_box(M: list[list[int]], b: list[int], bound: int) -> list[int] | None:
    """Exhaustive search over [-bound, bound]^n; returns a solution or None."""
    n = len(M[0])
    A = np.array(M, dtype=np.int64)
    target = np.array(b, dtype=np.int64)
    rng = np.arange(-bound, bound + 1, dtype=np.int64)
    grids = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    hits = np.all(grids @ A.T == target, axis=1)
    if hits.any():
        return grids[np.argmax(hits)].tolist()
    return None


def fraction_solution_exists(M, b) -> bool:
    """Rational consistency via Fraction Gauss-Jordan, independent of sympy."""
    rows = [[Fraction(x) for x in r] + [Fraction(y)] for r, y in zip(M, b)]
    ncols = len(M[0]) if M else 0
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
    return all(row[-1] == 0 for row in rows[r:])
