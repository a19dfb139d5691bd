"""Exact bookkeeping for exponent inequalities with an infinitesimal slack."""
from .catalog import (
    ChainGroup,
    Finding,
    builtin_system,
    catalog_names,
    chain_groups,
    findings,
    run_chains,
)
from .constants import NamedConstant, constant_table, constants
from .eps import EPS, ZERO, EpsRational, eps_compare
from .solver import (
    Infeasible,
    Supremum,
    Unbounded,
    Verdict,
    check_point,
    entails,
    find_point,
    fm_eliminate,
    implies,
    maximize,
)
from .system import (
    ConstraintSystem,
    LinearConstraint,
    Substitution,
    parse_constraints,
    parse_linear,
)

__all__ = [
    "ChainGroup", "ConstraintSystem", "EPS", "EpsRational", "Finding", "Infeasible",
    "LinearConstraint", "NamedConstant", "Substitution", "Supremum", "Unbounded",
    "Verdict", "ZERO", "builtin_system", "catalog_names", "chain_groups", "check_point",
    "constant_table", "constants", "entails", "eps_compare", "find_point", "findings",
    "fm_eliminate", "implies", "maximize", "parse_constraints", "parse_linear", "run_chains",
]
