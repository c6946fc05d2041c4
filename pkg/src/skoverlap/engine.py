"""1/N expansion driver.

Each pending term ``c * N^-p * nu(M)`` is pushed through
a -> b -> c -> d.  When ``M`` has epsilon-order 0 or 2 the pipeline
regenerates a copy of ``M`` (up to the symmetry ``nu(M * R_xy) = nu(M)``)
weighted by exactly ``beta^2``; that copy is moved to the left-hand side
and the remaining output is divided by ``1 - beta^2``.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil

from .algebra import ONE, ONE_MINUS_BETA2, ZERO, BetaRational, format_plain
from .errors import BudgetRefused, DomainError, PoleError, SelfTermMismatch
from .terms import (
    Expression,
    FactorPair,
    Monomial,
    State,
    Term,
    canonicalize,
    epsilon_order,
    format_monomial,
    odd_replicas,
    order_units,
)
from .transforms import (
    PruneBudget,
    nu0_to_nu,
    prune,
    symmetry_reduce,
    taylor_at_zero,
    transform_a,
    transform_d,
)

log = logging.getLogger(__name__)

BETA2 = BetaRational.beta_power(2)


@dataclass(frozen=True)
class SelfTermReport:
    mono: Monomial
    coefficient: BetaRational
    resolved: bool


@dataclass
class Expansion:
    mono: Monomial
    m: int
    coeffs: dict[int, BetaRational]
    self_terms: list[SelfTermReport] = field(default_factory=list)
    processed: int = 0

    def coefficient(self, j: int) -> BetaRational:
        return self.coeffs.get(j, ZERO)

    def to_json(self) -> dict:
        return {
            "monomial": [[f.a, f.b] for f in self.mono],
            "order": self.m,
            "coefficients": [
                {"power": j, "value": self.coeffs[j].to_json(), "text": format_plain(self.coeffs[j])}
                for j in sorted(self.coeffs)
            ],
        }


def closing_pair(mono: Monomial) -> FactorPair:
    """The pair joining the two odd replicas of an epsilon-order-2 monomial."""
    x, y = odd_replicas(mono)
    return FactorPair(x, y, False)


def run_pipeline(t: Term, budget: PruneBudget) -> Expression:
    """a -> b -> c -> d for one untruncated nu-term; returns constants and nu-terms."""
    stage_a = transform_a(t, budget)
    stage_b = Expression()
    for u in stage_a:
        stage_b.extend(taylor_at_zero(u, budget))
    stage_c = nu0_to_nu(stage_b, budget)
    out = Expression()
    for u in stage_c:
        out.extend(transform_d(u, budget))
    return prune(out, budget)


def _priority(npow: int, mono: Monomial) -> tuple:
    # Children of equal order always have epsilon-order 0 and either come
    # from a parent of epsilon-order >= 2 or carry a larger N-power, so
    # (order, -lambda, npow) is a topological order of the rewriting.
    return (order_units(npow, mono), -epsilon_order(mono), npow, mono)


@lru_cache(maxsize=4096)
def _unit_pipeline(mono: Monomial, npow: int, kdes: int) -> Expression:
    return run_pipeline(Term(ONE, npow, State.NU, mono), PruneBudget(kdes))


def expand(mono: Monomial, m: int) -> Expansion:
    """Coefficients ``C_j(beta)``, ``1 <= j <= m``, of ``nu(mono)`` in powers of 1/N."""
    mono = canonicalize(mono)
    if not mono:
        raise ValueError("cannot expand the empty monomial")
    if any(f.truncated for f in mono):
        raise ValueError("input monomial must be untruncated")
    k = len(mono)
    if m < 1 or m < ceil(k / 2):
        raise BudgetRefused(f"order {m} is below the minimum {max(1, ceil(k / 2))} for {k} factors")
    budget = PruneBudget(m)

    coeffs: dict[int, BetaRational] = {j: ZERO for j in range(1, m + 1)}
    reports: list[SelfTermReport] = []
    pending: dict[tuple[int, Monomial], BetaRational] = {}
    heap: list = []
    seen: set = set()

    def push(npow: int, mono_: Monomial, coef: BetaRational):
        if not mono_:
            if npow == 0:
                raise AssertionError("order-0 constant generated")
            if npow <= m:
                coeffs[npow] = coeffs[npow] + coef
            return
        key = (npow, mono_)
        if key in pending:
            pending[key] = pending[key] + coef
            return
        if key in seen:
            raise AssertionError(f"term {format_monomial(mono_)} at N^-{npow} regenerated after processing")
        pending[key] = coef
        heapq.heappush(heap, _priority(npow, mono_))

    if budget.survives(0, mono):
        push(0, mono, ONE)

    processed = 0
    while heap:
        *_, npow, cur = heapq.heappop(heap)
        coef = pending.pop((npow, cur))
        seen.add((npow, cur))
        if coef.is_zero():
            continue
        processed += 1
        work = cur
        if epsilon_order(work) == 0:
            work = symmetry_reduce(Term(coef, npow, State.NU, work)).mono
        lam = epsilon_order(work)
        out = _unit_pipeline(work, npow, m)
        scale = coef
        if lam == 2:
            self_key = canonicalize(work + (closing_pair(work),))
            self_coef = out.get(State.NU, npow, self_key)
            ok = self_coef == BETA2
            reports.append(SelfTermReport(cur, self_coef, ok))
            if not ok:
                raise SelfTermMismatch(
                    f"self-term of {format_monomial(cur)} has coefficient {self_coef}, expected beta^2"
                )
            scale = coef / ONE_MINUS_BETA2
        for u in out:
            if lam == 2 and u.npow == npow and u.mono == self_key:
                continue
            if u.state is not State.NU:
                raise AssertionError("pipeline leaked a nu_0 term")
            push(u.npow, u.mono, u.coef * scale)

    log.debug("expanded %s to order %d: %d terms processed", format_monomial(mono), m, processed)
    return Expansion(mono, m, coeffs, reports, processed)


def evaluate_expansion(e: Expansion, beta, N: int) -> Fraction:
    """Exact ``sum_j C_j(beta) / N^j``."""
    beta = Fraction(beta)
    if abs(beta) >= 1:
        raise PoleError(f"|beta| = {abs(beta)} is outside the high-temperature region")
    if N < 1:
        raise DomainError("N must be a positive integer")
    total = Fraction(0)
    for j, c in e.coeffs.items():
        total += c.evaluate(beta) / Fraction(N) ** j
    return total
