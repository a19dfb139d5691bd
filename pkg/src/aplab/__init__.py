"""Desk-scale laboratory for primes in progressions, smooth shifted primes and exponent bookkeeping."""

from .errors import AplabError, BudgetExceeded

__version__ = "0.1.0"

__all__ = ["AplabError", "BudgetExceeded", "__version__"]
