"""Exception types shared across the toolkit."""


class AplabError(ValueError):
    """Invalid input or a violated precondition."""


class BudgetExceeded(AplabError):
    """A requested computation would exceed its configured work budget."""
