"""The cavity rewriting steps: R -> R^-, Taylor expansion around the
decoupled system, its inverse, R^- -> R, plus pruning.

Derivative chains only ever multiply coefficients by ``beta^2`` times an
integer, so chains are carried with plain Fraction weights and the beta
power is attached when a level is emitted.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial

from .algebra import BetaRational, QuarterOrder
from .terms import (
    Expression,
    FactorPair,
    Monomial,
    State,
    Term,
    canonicalize,
    epsilon_order,
    order_units,
    replicas,
)


@dataclass(frozen=True)
class PruneBudget:
    """Target order ``kdes``; a term survives iff its order is below ``kdes + 1/2``."""

    kdes: int

    @property
    def keep_below(self) -> QuarterOrder:
        return QuarterOrder(4 * self.kdes + 2)

    def survives(self, npow: int, mono: Monomial) -> bool:
        return order_units(npow, mono) < 4 * self.kdes + 2

    def derivative_count(self, k: int, npow: int) -> int:
        """Taylor terms needed so the remainder is ``O(N^-(kdes + 1/2))``."""
        return 2 * self.kdes - k - 2 * npow


def prune(e: Expression, budget: PruneBudget) -> Expression:
    out = Expression()
    for t in e:
        if t.state is State.NU0 and epsilon_order(t.mono) > 0:
            continue
        if budget.survives(t.npow, t.mono):
            out.merge(t)
    return out


def _expand_subsets(t: Term, budget: PruneBudget, sign: int, truncated: bool) -> Expression:
    m = t.mono
    k = len(m)
    out = Expression()
    for r in range(k + 1):
        npow = t.npow + k - r
        coef = t.coef if sign > 0 or (k - r) % 2 == 0 else -t.coef
        for kept in combinations(range(k), r):
            mono = canonicalize(FactorPair(m[i].a, m[i].b, truncated) for i in kept)
            if budget.survives(npow, mono):
                out.add(State.NU, npow, mono, coef)
    return out


def transform_a(t: Term, budget: PruneBudget) -> Expression:
    """``eps eps R = eps eps R^- + 1/N`` applied to every factor."""
    if t.state is not State.NU or any(f.truncated for f in t.mono):
        raise ValueError("transform_a expects an untruncated nu-term")
    return _expand_subsets(t, budget, +1, truncated=True)


def transform_d(t: Term, budget: PruneBudget) -> Expression:
    """``eps eps R^- = eps eps R - 1/N`` applied to every factor."""
    if t.state is not State.NU or not all(f.truncated for f in t.mono):
        raise ValueError("transform_d expects a fully truncated nu-term")
    return _expand_subsets(t, budget, -1, truncated=False)


@lru_cache(maxsize=1 << 16)
def _derivative_weights(mono: Monomial, n: int) -> tuple[tuple[Monomial, int], ...]:
    """One t-derivative as ``{monomial: integer weight}``; the common beta^2 is implicit."""
    acc: dict[Monomial, int] = defaultdict(int)

    def put(a: int, b: int, w: int):
        if w:
            acc[canonicalize(mono + (FactorPair(a, b, True),))] += w

    for l in range(1, n + 1):
        for lp in range(l + 1, n + 1):
            put(l, lp, 1)
    for l in range(1, n + 1):
        put(l, n + 1, -n)
    put(n + 1, n + 2, n * (n + 1) // 2)
    return tuple((m, w) for m, w in acc.items() if w)


def replica_count(mono: Monomial) -> int:
    return len(replicas(mono))


def derivative(t: Term, n: int | None = None) -> Expression:
    """d/dt of ``nu_t(f)`` for ``f`` living on ``n`` replicas (default: those used by ``f``).

    Appended overlaps are truncated; state and prefactor are unchanged and
    no pruning is applied.
    """
    if n is None:
        n = replica_count(t.mono)
    out = Expression()
    b2 = BetaRational.beta_power(2)
    for mono, w in _derivative_weights(t.mono, n):
        out.add(t.state, t.npow, mono, t.coef * b2 * w)
    return out


def _chain_step(chain: dict[Monomial, Fraction], remaining: int) -> dict[Monomial, Fraction]:
    # A term whose epsilon-order exceeds 2*remaining cannot reach order 0
    # within the remaining derivatives, so it only feeds vanishing nu_0 terms.
    nxt: dict[Monomial, Fraction] = defaultdict(Fraction)
    for mono, c in chain.items():
        for m2, w in _derivative_weights(mono, replica_count(mono)):
            nxt[m2] += c * w
    return {m: c for m, c in nxt.items() if c and epsilon_order(m) <= 2 * remaining}


def _decoupled_derivatives(mono: Monomial, count: int):
    """Yield ``(j, {monomial: weight / j!})`` for ``j = 0..count``, keeping only
    epsilon-order-0 monomials (the others vanish under nu_0)."""
    chain = {mono: Fraction(1)} if epsilon_order(mono) <= 2 * count else {}
    for j in range(count + 1):
        if j:
            chain = _chain_step(chain, count - j)
        if not chain:
            return
        fj = factorial(j)
        level = {m: c / fj for m, c in chain.items() if epsilon_order(m) == 0}
        if level:
            yield j, level


def taylor_at_zero(t: Term, budget: PruneBudget) -> Expression:
    """``nu(f) = sum_j nu_0^(j)(f) / j!`` up to the budget, as nu_0 terms."""
    if t.state is not State.NU or not all(f.truncated for f in t.mono):
        raise ValueError("taylor_at_zero expects a fully truncated nu-term")
    out = Expression()
    if not t.mono:
        if budget.survives(t.npow, t.mono):
            out.add(State.NU0, t.npow, (), t.coef)
        return out
    D = budget.derivative_count(len(t.mono), t.npow)
    if D < 0:
        return out
    for j, level in _decoupled_derivatives(t.mono, D):
        bj = BetaRational.beta_power(2 * j)
        for mono, c in level.items():
            out.add(State.NU0, t.npow, mono, t.coef * bj * c)
    return prune(out, budget)


def nu0_to_nu(t: Term | Expression, budget: PruneBudget) -> Expression:
    """Rewrite nu_0 terms as nu terms: ``nu_0(f) = nu(f) - sum_{j>=1} nu_0^(j)(f)/j!``.

    The generated nu_0 terms are rewritten in turn (lowest order first) until
    none remain.  Each generated term carries more factors than its parent,
    so the worklist terminates.
    """
    src = t if isinstance(t, Expression) else Expression([t])
    work: dict[tuple[int, Monomial], BetaRational] = {}
    heap: list = []
    for term in src:
        if term.state is not State.NU0:
            raise ValueError("nu0_to_nu expects nu_0 terms")
        if epsilon_order(term.mono) or not budget.survives(term.npow, term.mono):
            continue
        key = (term.npow, term.mono)
        if key not in work:
            heapq.heappush(heap, (order_units(*key), key))
            work[key] = term.coef
        else:
            work[key] = work[key] + term.coef

    out = Expression()
    done: set = set()
    while heap:
        _, key = heapq.heappop(heap)
        coef = work.pop(key)
        assert key not in done, "nu_0 worklist revisited a key"
        done.add(key)
        if coef.is_zero():
            continue
        npow, mono = key
        out.add(State.NU, npow, mono, coef)
        if not mono:
            continue
        D = budget.derivative_count(len(mono), npow)
        for j, level in _decoupled_derivatives(mono, D):
            if j == 0:
                continue
            bj = BetaRational.beta_power(2 * j)
            for m2, c in level.items():
                if not budget.survives(npow, m2):
                    continue
                k2 = (npow, m2)
                delta = coef * bj * (-c)
                if k2 in work:
                    work[k2] = work[k2] + delta
                else:
                    work[k2] = delta
                    heapq.heappush(heap, (order_units(*k2), k2))
    return prune(out, budget)


def symmetry_reduce(t: Term) -> Term:
    """``nu(prod_k eps eps R) = nu(prod_{k-1} eps eps R)`` for epsilon-order 0.

    Drops the canonically last factor.  Exact by site symmetry.
    """
    if t.state is not State.NU or any(f.truncated for f in t.mono):
        raise ValueError("symmetry_reduce expects an untruncated nu-term")
    if not t.mono or epsilon_order(t.mono) != 0:
        raise ValueError(f"symmetry_reduce needs epsilon-order 0, got {epsilon_order(t.mono)}")
    return Term(t.coef, t.npow, t.state, canonicalize(t.mono[:-1]))
