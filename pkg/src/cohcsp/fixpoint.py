"""Greatest fixpoints of deflationary operators on subfamilies of a family."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Literal, TextIO

from .presheaf import Context, PresheafFamily, Values, down_step, up_step

Predicate = Callable[[PresheafFamily, Context, Values], bool]


class NonShrinkingError(RuntimeError):
    def __init__(self, operator: str, context: Context, values: Values):
        super().__init__(f"operator {operator!r} added section {values} at context {context}")
        self.operator = operator
        self.context = context
        self.values = values


@dataclass(frozen=True)
class DeflationaryOperator:
    name: str
    apply: Callable[[PresheafFamily], PresheafFamily]

    def __call__(self, F: PresheafFamily) -> PresheafFamily:
        return self.apply(F)

    def then(self, other: "DeflationaryOperator") -> "DeflationaryOperator":
        """The composite that applies ``self`` first, then ``other``."""
        return DeflationaryOperator(f"{other.name}∘{self.name}", lambda F: other.apply(self.apply(F)))


@dataclass
class FixpointReport:
    result: PresheafFamily
    rounds: int
    initial_total: int
    trace: list[int] = field(default_factory=list)
    per_context: list[dict[Context, int]] = field(default_factory=list, repr=False)
    initial: PresheafFamily | None = field(default=None, repr=False)

    def trace_records(self) -> list[dict]:
        res = self.result
        return [
            {
                "round": i + 1,
                "total_sections": total,
                "per_context_counts": {res.context_key(c): n for c, n in counts.items()},
            }
            for i, (total, counts) in enumerate(zip(self.trace, self.per_context))
        ]

    def write_trace(self, fh: TextIO) -> None:
        for rec in self.trace_records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _check_shrinking(name: str, before: PresheafFamily, after: PresheafFamily) -> None:
    for c, vals in after.sections.items():
        extra = vals - before.sections[c]
        if extra:
            raise NonShrinkingError(name, c, min(extra))


def greatest_fixpoint(initial: PresheafFamily, J: DeflationaryOperator, max_rounds: int | None = None) -> FixpointReport:
    """Iterate ``J`` from ``initial`` until it stops removing sections.

    ``rounds`` counts applications of ``J``, so an operator that is already
    the identity on ``initial`` takes one round.
    """
    F = initial
    report = FixpointReport(result=F, rounds=0, initial_total=F.total, initial=initial)
    limit = max_rounds if max_rounds is not None else initial.total + 1
    while True:
        G = J(F)
        _check_shrinking(J.name, F, G)
        report.rounds += 1
        report.trace.append(G.total)
        report.per_context.append(G.counts())
        if G.total == F.total:
            report.result = G
            return report
        if report.rounds >= limit:
            raise RuntimeError(f"{J.name} did not converge within {limit} rounds")
        F = G


def from_local_predicate(
    phi: Predicate,
    scope: Literal["all", "maximal"] | Callable[[PresheafFamily, Context], bool] = "all",
    name: str = "J_phi",
) -> DeflationaryOperator:
    """Operator keeping, at each in-scope context, the sections satisfying
    ``phi`` against the whole current family; other contexts pass through."""
    if scope == "all":
        in_scope = lambda F, c: True  # noqa: E731
    elif scope == "maximal":
        in_scope = lambda F, c: F.poset.is_maximal(c)  # noqa: E731
    elif callable(scope):
        in_scope = scope
    else:
        raise ValueError(f"unknown scope {scope!r}")

    def apply(F: PresheafFamily) -> PresheafFamily:
        return F.with_sections(
            {c: frozenset(v for v in vals if phi(F, c, v)) if in_scope(F, c) else vals for c, vals in F.sections.items()}
        )

    return DeflationaryOperator(name, apply)


UP = DeflationaryOperator("up", up_step)
DOWN = DeflationaryOperator("down", down_step)
UP_DOWN = UP.then(DOWN)
IDENTITY = DeflationaryOperator("identity", lambda F: F)
