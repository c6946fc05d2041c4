"""High-temperature 1/N expansions of SK overlap moments.

The symbolic engine rewrites ``nu(prod eps_a eps_b R_ab)`` with cavity
transformations into exact rational functions of beta; the oracle checks
the coefficients against exact Gibbs enumeration at small N.
"""

from .algebra import BetaRational, QuarterOrder, format_latex, format_plain
from .engine import Expansion, evaluate_expansion, expand
from .errors import (
    BudgetRefused,
    DomainError,
    GuardError,
    ParseError,
    PoleError,
    RankDeficiencyError,
    SelfTermMismatch,
    SKOverlapError,
)
from .terms import FactorPair, Monomial, Term, canonicalize, epsilon_order, monomial

__version__ = "0.1.0"

__all__ = [
    "BetaRational",
    "BudgetRefused",
    "DomainError",
    "Expansion",
    "FactorPair",
    "GuardError",
    "Monomial",
    "ParseError",
    "PoleError",
    "QuarterOrder",
    "RankDeficiencyError",
    "SKOverlapError",
    "SelfTermMismatch",
    "Term",
    "canonicalize",
    "epsilon_order",
    "evaluate_expansion",
    "expand",
    "format_latex",
    "format_plain",
    "monomial",
]
