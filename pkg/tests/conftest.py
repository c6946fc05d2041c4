from __future__ import annotations

from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import settings

from skoverlap.algebra import BetaRational
from skoverlap.terms import FactorPair, canonicalize

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@st.composite
def raw_monomials(draw, max_replicas: int = 5, min_factors: int = 1, max_factors: int = 4, flags: bool = False):
    """Uncanonicalized factor tuples over replicas 1..max_replicas."""
    n = draw(st.integers(2, max_replicas))
    k = draw(st.integers(min_factors, max_factors))
    out = []
    for _ in range(k):
        a, b = draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
        t = draw(st.booleans()) if flags else False
        out.append(FactorPair(min(a, b), max(a, b), t))
    return tuple(out)


def monomials(**kw):
    return raw_monomials(**kw).map(canonicalize)


small_ints = st.integers(-6, 6)
rationals = st.fractions(min_value=-3, max_value=3, max_denominator=7)
betas = st.fractions(min_value=Fraction(-9, 10), max_value=Fraction(9, 10), max_denominator=20)


@st.composite
def beta_rationals(draw):
    num = draw(st.lists(small_ints, max_size=4))
    den = draw(st.lists(small_ints, min_size=1, max_size=3).filter(any))
    return BetaRational.from_parts(num, den)
