"""Exact linear algebra over Z and Z_p.

Everything is arbitrary-precision Python ``int`` (or ``Fraction`` in the
rational presolve); there are no tolerances anywhere in this module.

The workhorse is :func:`column_echelon`, a sparse column-style Hermite
reduction that optionally tracks the unimodular transform.  It backs
:func:`hermite_normal_form`, :func:`solve_integer`, :func:`integer_kernel`
and :class:`Lattice`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Sequence

from .structures import _is_prime

Vector = dict[int, int]


@dataclass
class SparseIntMatrix:
    rows: int
    cols: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), v in list(self.entries.items()):
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
            if v == 0:
                del self.entries[(i, j)]

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "SparseIntMatrix":
        ncols = cols if cols is not None else (len(rows[0]) if rows else 0)
        entries = {(i, j): int(v) for i, row in enumerate(rows) for j, v in enumerate(row) if v}
        return cls(len(rows), ncols, entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Vector], cols: int) -> "SparseIntMatrix":
        return cls(len(rows), cols, {(i, j): v for i, row in enumerate(rows) for j, v in row.items() if v})

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def row_dicts(self) -> list[Vector]:
        out: list[Vector] = [{} for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def col_dicts(self) -> list[Vector]:
        out: list[Vector] = [{} for _ in range(self.cols)]
        for (i, j), v in self.entries.items():
            out[j][i] = v
        return out

    def matvec(self, x: Sequence[int]) -> list[int]:
        out = [0] * self.rows
        for (i, j), v in self.entries.items():
            out[i] += v * x[j]
        return out

    def to_matrix_market(self, comment: str = "") -> str:
        lines = ["%%MatrixMarket matrix coordinate integer general"]
        if comment:
            lines.extend(f"% {line}" for line in comment.splitlines())
        lines.append(f"{self.rows} {self.cols} {len(self.entries)}")
        for (i, j), v in sorted(self.entries.items()):
            lines.append(f"{i + 1} {j + 1} {v}")
        return "\n".join(lines) + "\n"


def parse_matrix_market(text: str) -> SparseIntMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("%")]
    rows, cols, _ = (int(x) for x in lines[0].split())
    entries = {}
    for ln in lines[1:]:
        i, j, v = ln.split()
        entries[(int(i) - 1, int(j) - 1)] = int(v)
    return SparseIntMatrix(rows, cols, entries)


@dataclass(frozen=True)
class SolveResult:
    status: Literal["solvable", "unsolvable"]
    witness: tuple[int, ...] | None = None
    certificate: Literal["rational-infeasible", "lattice-infeasible"] | None = None

    @property
    def solvable(self) -> bool:
        return self.status == "solvable"

    def __bool__(self) -> bool:
        return self.solvable


# -- column echelon ------------------------------------------------------------


def _axpy(y: Vector, q: int, x: Vector) -> None:
    """y -= q * x, in place, dropping zeros."""
    for i, v in x.items():
        w = y.get(i, 0) - q * v
        if w:
            y[i] = w
        else:
            y.pop(i, None)


@dataclass
class Echelon:
    """Result of :func:`column_echelon`.

    ``columns[c]`` is column ``c`` of ``H = M U`` and ``transform[c]`` the
    matching column of ``U`` (when tracked).  Pivot ``t`` sits in row
    ``pivot_rows[t]`` of column ``pivot_cols[t]``; the ``free_cols`` are zero.
    """

    nrows: int
    ncols: int
    columns: dict[int, Vector]
    transform: dict[int, Vector] | None
    pivot_rows: list[int]
    pivot_cols: list[int]
    free_cols: list[int]

    @property
    def rank(self) -> int:
        return len(self.pivot_rows)

    def solve(self, b: Sequence[int]) -> list[int] | None:
        """Coefficients y over the pivot columns with ``H y = b``, or ``None``.

        Rows that carry no pivot must already be satisfied by the pivot part.
        """
        y: list[int] = []
        residual = {i: v for i, v in enumerate(b) if v}
        for t, (i, c) in enumerate(zip(self.pivot_rows, self.pivot_cols)):
            r = residual.get(i, 0)
            piv = self.columns[c][i]
            if r % piv:
                return None
            q = r // piv
            y.append(q)
            if q:
                _axpy(residual, q, self.columns[c])
        if residual:
            return None
        return y


def column_echelon(
    columns: list[Vector],
    nrows: int,
    track: bool = True,
    reduce: bool = True,
    row_order: Iterable[int] | None = None,
) -> Echelon:
    """Column-style Hermite reduction of the matrix with the given columns.

    Rows are processed in ``row_order`` (default top to bottom).  Within a
    row, Euclid's algorithm on the not-yet-pivoted columns leaves a single
    non-zero entry, which becomes a positive pivot.  With ``reduce`` the
    entries of earlier pivot columns in the pivot row are brought into
    ``[0, pivot)``.
    """
    ncols = len(columns)
    cols = {c: dict(v) for c, v in enumerate(columns)}
    trans = {c: {c: 1} for c in range(ncols)} if track else None
    free = set(range(ncols))
    # row -> free columns with a non-zero entry in that row
    index: dict[int, set[int]] = {}
    for c, col in cols.items():
        for i in col:
            index.setdefault(i, set()).add(c)
    pivot_rows: list[int] = []
    pivot_cols: list[int] = []

    def col_op(target: int, q: int, source: int) -> None:
        tcol, scol = cols[target], cols[source]
        for i, v in scol.items():
            w = tcol.get(i, 0) - q * v
            if w:
                if i not in tcol:
                    index.setdefault(i, set()).add(target)
                tcol[i] = w
            else:
                tcol.pop(i, None)
                index[i].discard(target)
        if trans is not None:
            _axpy(trans[target], q, trans[source])

    for i in row_order if row_order is not None else range(nrows):
        active = sorted(index.get(i, ()))
        if not active:
            continue
        while len(active) > 1:
            # smallest |entry| first, ties broken by sparsity then id
            active.sort(key=lambda c: (abs(cols[c][i]), len(cols[c]), c))
            p = active[0]
            e0 = cols[p][i]
            rest = []
            for c in active[1:]:
                q = cols[c][i] // e0
                col_op(c, q, p)
                if cols[c].get(i):
                    rest.append(c)
            active = [p] + rest
        p = active[0]
        if cols[p][i] < 0:
            cols[p] = {r: -v for r, v in cols[p].items()}
            if trans is not None:
                trans[p] = {r: -v for r, v in trans[p].items()}
        free.discard(p)
        for r in cols[p]:
            index[r].discard(p)
        if reduce:
            piv = cols[p][i]
            for c in pivot_cols:
                q = cols[c].get(i, 0) // piv
                if q:
                    _axpy(cols[c], q, cols[p])
                    if trans is not None:
                        _axpy(trans[c], q, trans[p])
        pivot_rows.append(i)
        pivot_cols.append(p)
    return Echelon(nrows, ncols, cols, trans, pivot_rows, pivot_cols, sorted(free))


def hermite_normal_form(M: SparseIntMatrix) -> tuple[list[list[int]], list[list[int]]]:
    """Column-style HNF ``H = M U`` with ``U`` unimodular.

    Columns of ``H`` are ordered pivots first (row profile strictly
    increasing, pivots positive, entries left of each pivot reduced modulo
    it), then the zero columns.
    """
    ech = column_echelon(M.col_dicts(), M.rows, track=True, reduce=True)
    order = ech.pivot_cols + ech.free_cols
    H = [[ech.columns[c].get(i, 0) for c in order] for i in range(M.rows)]
    U = [[ech.transform[c].get(r, 0) for c in order] for r in range(M.cols)]
    return H, U


# -- rational presolve -----------------------------------------------------------


def rational_presolve(rows: Sequence[Vector], rhs: Sequence[int]) -> tuple[bool, list[int]]:
    """Gauss-Jordan over Q on ``[M | b]``.

    Returns ``(consistent, independent)`` where ``independent`` lists the
    indices of a maximal set of linearly independent rows of ``M``.
    """
    pivots: dict[int, tuple[dict[int, Fraction], Fraction]] = {}
    independent = []
    for idx, (row, b) in enumerate(zip(rows, rhs)):
        r = {j: Fraction(v) for j, v in row.items() if v}
        rb = Fraction(b)
        for j in [j for j in r if j in pivots]:
            f = r.get(j)
            if not f:
                continue
            prow, pb = pivots[j]
            for jj, vv in prow.items():
                w = r.get(jj, 0) - f * vv
                if w:
                    r[jj] = w
                else:
                    r.pop(jj, None)
            rb -= f * pb
        if not r:
            if rb:
                return False, independent
            continue
        j0 = min(r)
        inv = 1 / r[j0]
        r = {jj: vv * inv for jj, vv in r.items()}
        rb *= inv
        for j, (prow, pb) in list(pivots.items()):
            f = prow.get(j0)
            if f:
                for jj, vv in r.items():
                    w = prow.get(jj, 0) - f * vv
                    if w:
                        prow[jj] = w
                    else:
                        prow.pop(jj, None)
                pivots[j] = (prow, pb - f * rb)
        pivots[j0] = (r, rb)
        independent.append(idx)
    return True, independent


# -- integer solving ---------------------------------------------------------------


def solve_integer(M: SparseIntMatrix, b: Sequence[int], presolve: bool = True) -> SolveResult:
    """Decide ``∃ x ∈ Z^cols. M x = b`` and produce a witness.

    A rational presolve rejects systems that are infeasible over Q and keeps
    only independent rows; the integer part then runs on the column HNF of
    those rows.
    """
    if len(b) != M.rows:
        raise ValueError(f"rhs has length {len(b)}, matrix has {M.rows} rows")
    rows = M.row_dicts()
    if presolve:
        ok, keep = rational_presolve(rows, b)
        if not ok:
            return SolveResult("unsolvable", certificate="rational-infeasible")
    else:
        keep = list(range(M.rows))
    sub_rows = [rows[i] for i in keep]
    sub_b = [b[i] for i in keep]
    sub = SparseIntMatrix.from_rows(sub_rows, M.cols)
    ech = column_echelon(sub.col_dicts(), len(sub_rows), track=True, reduce=True)
    y = ech.solve(sub_b)
    if y is None:
        # without presolve a leftover residual may also be rational infeasibility
        if not presolve and not rational_presolve(rows, b)[0]:
            return SolveResult("unsolvable", certificate="rational-infeasible")
        return SolveResult("unsolvable", certificate="lattice-infeasible")
    x: Vector = {}
    for q, c in zip(y, ech.pivot_cols):
        if q:
            _axpy(x, -q, ech.transform[c])
    witness = tuple(x.get(j, 0) for j in range(M.cols))
    if M.matvec(witness) != list(b):
        raise AssertionError("integer witness does not reproduce the right-hand side")
    return SolveResult("solvable", witness=witness)


def integer_kernel(M: SparseIntMatrix, row_order: Iterable[int] | None = None) -> list[Vector]:
    """A basis of the lattice ``{x ∈ Z^cols : M x = 0}`` as sparse vectors."""
    ech = column_echelon(M.col_dicts(), M.rows, track=True, reduce=False, row_order=row_order)
    return [ech.transform[c] for c in ech.free_cols]


class Lattice:
    """The sublattice of Z^dim spanned by the given generators, in HNF."""

    def __init__(self, dim: int, generators: Iterable[Vector]):
        self.dim = dim
        gens = [dict(g) for g in generators if g]
        self._ech = column_echelon(gens, dim, track=False, reduce=True)

    @property
    def rank(self) -> int:
        return self._ech.rank

    def basis(self) -> list[Vector]:
        return [self._ech.columns[c] for c in self._ech.pivot_cols]

    def __contains__(self, v: Sequence[int] | Vector) -> bool:
        if isinstance(v, dict):
            v = [v.get(i, 0) for i in range(self.dim)]
        return self._ech.solve(v) is not None


# -- prime fields -------------------------------------------------------------------


def solve_mod_p(M: SparseIntMatrix | Sequence[Sequence[int]], b: Sequence[int], p: int) -> SolveResult:
    """Gaussian elimination over Z_p; the witness sets free variables to 0."""
    if not _is_prime(p):
        raise ValueError(f"modulus must be prime, got {p}")
    if not isinstance(M, SparseIntMatrix):
        M = SparseIntMatrix.from_dense(M, cols=len(M[0]) if M else 0)
    if len(b) != M.rows:
        raise ValueError(f"rhs has length {len(b)}, matrix has {M.rows} rows")
    pivots: dict[int, tuple[dict[int, int], int]] = {}
    for row, rb in zip(M.row_dicts(), b):
        r = {j: v % p for j, v in row.items() if v % p}
        rb %= p
        for j in [j for j in r if j in pivots]:
            f = r.get(j)
            if not f:
                continue
            prow, pb = pivots[j]
            for jj, vv in prow.items():
                w = (r.get(jj, 0) - f * vv) % p
                if w:
                    r[jj] = w
                else:
                    r.pop(jj, None)
            rb = (rb - f * pb) % p
        if not r:
            if rb:
                return SolveResult("unsolvable", certificate="rational-infeasible")
            continue
        j0 = min(r)
        inv = pow(r[j0], -1, p)
        r = {jj: vv * inv % p for jj, vv in r.items()}
        rb = rb * inv % p
        for j, (prow, pb) in list(pivots.items()):
            f = prow.get(j0)
            if f:
                for jj, vv in r.items():
                    w = (prow.get(jj, 0) - f * vv) % p
                    if w:
                        prow[jj] = w
                    else:
                        prow.pop(jj, None)
                pivots[j] = (prow, (pb - f * rb) % p)
        pivots[j0] = (r, rb)
    x = [0] * M.cols
    for j, (_, pb) in pivots.items():
        x[j] = pb
    witness = tuple(x)
    if any((v - w) % p for v, w in zip(M.matvec(witness), b)):
        raise AssertionError("witness does not satisfy the system mod p")
    return SolveResult("solvable", witness=witness)
