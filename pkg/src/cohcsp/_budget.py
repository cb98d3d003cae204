import os

DEFAULT_BUDGET = 10**7
ENV_VAR = "COHCSP_BUDGET"


class BudgetExceeded(RuntimeError):
    """Raised when a combinatorial enumeration would exceed its budget.

    The caller is expected to shrink the instance (or raise the budget via
    the ``COHCSP_BUDGET`` environment variable).
    """

    def __init__(self, what: str, needed: int, budget: int):
        super().__init__(f"{what}: {needed} candidates exceeds budget {budget}")
        self.what = what
        self.needed = needed
        self.budget = budget


def get_budget(budget: int | None = None) -> int:
    if budget is not None:
        return budget
    raw = os.environ.get(ENV_VAR)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    return DEFAULT_BUDGET


def check_budget(what: str, needed: int, budget: int | None = None) -> None:
    limit = get_budget(budget)
    if needed > limit:
        raise BudgetExceeded(what, needed, limit)
