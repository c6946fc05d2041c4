"""Overlap monomials, terms and expressions.

A monomial is a sorted tuple of :class:`FactorPair`; each pair ``(a, b)``
stands for ``eps_a eps_b R_{a,b}`` (or the truncated ``R^-`` when the flag
is set), so the epsilon content is always implicit in the factor list.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple

from .algebra import ZERO, BetaRational, QuarterOrder


class FactorPair(NamedTuple):
    a: int
    b: int
    truncated: bool = False


Monomial = tuple[FactorPair, ...]


class State(str, enum.Enum):
    NU = "nu"
    NU0 = "nu0"


def monomial(pairs: Iterable, truncated: bool = False) -> Monomial:
    """Build a canonical monomial from ``[(a, b), ...]`` or ``[(a, b, flag), ...]``."""
    factors = []
    for p in pairs:
        a, b = int(p[0]), int(p[1])
        flag = bool(p[2]) if len(p) > 2 else truncated
        if a == b or a < 1 or b < 1:
            raise ValueError(f"invalid replica pair {(a, b)}")
        if a > b:
            a, b = b, a
        factors.append(FactorPair(a, b, flag))
    return canonicalize(tuple(factors))


def replicas(m: Monomial) -> set[int]:
    return {x for f in m for x in (f.a, f.b)}


def odd_replicas(m: Monomial) -> list[int]:
    """Replica indices touched an odd number of times, ascending."""
    counts = Counter()
    for f in m:
        counts[f.a] += 1
        counts[f.b] += 1
    return sorted(r for r, c in counts.items() if c % 2)


@lru_cache(maxsize=1 << 18)
def epsilon_order(m: Monomial) -> int:
    """Number of replica indices with odd total multiplicity over all endpoints."""
    return len(odd_replicas(m))


def canonicalize(m: Iterable) -> Monomial:
    return _canonicalize(tuple(FactorPair(*f) for f in m))


@lru_cache(maxsize=1 << 18)
def _canonicalize(m: tuple) -> Monomial:
    if not m:
        return ()
    verts = sorted(replicas(m))
    n = len(verts)
    # mult[u][v] = (-untruncated count, -truncated count): smaller is better
    mult: dict[int, dict[int, tuple[int, int]]] = {v: {} for v in verts}
    for a, b, t in m:
        f, tr = mult[a].get(b, (0, 0))
        w = (f, tr - 1) if t else (f - 1, tr)
        mult[a][b] = w
        mult[b][a] = w
    best: list = [None]

    def relabel_sorted(label: dict) -> list:
        out = []
        for a, b, t in m:
            x, y = label[a], label[b]
            out.append((x, y, t) if x < y else (y, x, t))
        out.sort()
        return out

    def lower_bound(label: dict, j: int) -> list:
        # Unlabeled endpoints get the smallest label still free; sorting an
        # elementwise-smaller multiset gives an elementwise-smaller list.
        out = []
        for a, b, t in m:
            x, y = label.get(a), label.get(b)
            if x is not None and y is not None:
                out.append((x, y, t) if x < y else (y, x, t))
            elif x is not None or y is not None:
                out.append((x if x is not None else y, j + 1, False))
            else:
                out.append((j + 1, j + 2, False))
        out.sort()
        return out

    def candidates(order: list, label: dict) -> list:
        # Label j+1 goes to an unlabeled neighbour of the smallest labelled
        # replica that has one, and among those to one with the most
        # (untruncated, then truncated) factors towards it; any other choice
        # loses at the next position of the sorted list.
        for v in order:
            nb = [(w, mult[v][w]) for w in mult[v] if w not in label]
            if nb:
                top = min(x for _, x in nb)
                return sorted(w for w, x in nb if x == top)
        # new component: start at an endpoint of a heaviest free pair
        free = [(mult[u][w], u) for u in verts if u not in label for w in mult[u]]
        top = min(x for x, _ in free)
        return sorted({u for x, u in free if x == top})

    def _twins(u: int, w: int) -> bool:
        # swapping u and w is an automorphism fixing every other replica
        mu, mw = mult[u], mult[w]
        keys = (set(mu) | set(mw)) - {u, w}
        return all(mu.get(x) == mw.get(x) for x in keys)

    def search(order: list, label: dict):
        j = len(order)
        if j == n:
            form = relabel_sorted(label)
            if best[0] is None or form < best[0]:
                best[0] = form
            return
        if best[0] is not None and j > 0 and lower_bound(label, j) >= best[0]:
            return
        tried: list[int] = []
        for c in candidates(order, label):
            if any(_twins(c, u) for u in tried):
                continue
            tried.append(c)
            label[c] = j + 1
            order.append(c)
            search(order, label)
            order.pop()
            del label[c]

    search([], {})
    return tuple(FactorPair(*f) for f in best[0])


def relabel(m: Monomial, perm: dict[int, int]) -> Monomial:
    """Apply a replica relabeling without canonicalizing."""
    out = []
    for a, b, t in m:
        x, y = perm.get(a, a), perm.get(b, b)
        out.append(FactorPair(min(x, y), max(x, y), t))
    return tuple(sorted(out))


def untruncate(m: Monomial) -> Monomial:
    return canonicalize((a, b, False) for a, b, _ in m)


def order_units(npow: int, m: Monomial) -> int:
    """Order of ``N^-npow * nu(m)`` in quarter-units: ``4p + 2k + lambda``."""
    return 4 * npow + 2 * len(m) + epsilon_order(m)


@dataclass(frozen=True)
class Term:
    coef: BetaRational
    npow: int
    state: State
    mono: Monomial

    @property
    def key(self) -> tuple:
        return (self.state, self.npow, self.mono)


def order(t: Term) -> QuarterOrder:
    return QuarterOrder(order_units(t.npow, t.mono))


def format_monomial(m: Monomial, debug: bool = False) -> str:
    """``[[1,2],[1,3]]``; with ``debug`` truncated factors render as ``[1,2,"-"]``."""
    parts = []
    for a, b, t in m:
        parts.append(f'[{a},{b},"-"]' if (t and debug) else f"[{a},{b}]")
    return "[" + ",".join(parts) + "]"


class Expression:
    """Sum of terms with like terms merged; zero coefficients never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[Term] = ()):
        self._terms: dict[tuple, BetaRational] = {}
        for t in terms:
            self.merge(t)

    def merge(self, t: Term) -> "Expression":
        self.add(t.state, t.npow, t.mono, t.coef)
        return self

    def add(self, state: State, npow: int, mono: Monomial, coef: BetaRational) -> None:
        if coef.is_zero():
            return
        key = (state, npow, mono)
        old = self._terms.get(key)
        new = coef if old is None else old + coef
        if new.is_zero():
            self._terms.pop(key, None)
        else:
            self._terms[key] = new

    def extend(self, other: "Expression", factor: BetaRational | None = None) -> "Expression":
        for (s, p, m), c in other._terms.items():
            self.add(s, p, m, c if factor is None else c * factor)
        return self

    def get(self, state: State, npow: int, mono: Monomial) -> BetaRational:
        return self._terms.get((state, npow, mono), ZERO)

    def pop(self, state: State, npow: int, mono: Monomial) -> BetaRational:
        return self._terms.pop((state, npow, mono), ZERO)

    def __iter__(self) -> Iterator[Term]:
        for (s, p, m), c in self._terms.items():
            yield Term(c, p, s, m)

    def terms(self) -> list[Term]:
        """Terms in a deterministic order (order, then key)."""
        return sorted(self, key=lambda t: (order_units(t.npow, t.mono), t.state.value, t.npow, t.mono))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expression):
            return NotImplemented
        return self._terms == other._terms

    def __repr__(self) -> str:
        body = " + ".join(
            f"({t.coef})*N^-{t.npow}*{t.state.value}{format_monomial(t.mono, debug=True)}" for t in self.terms()
        )
        return f"Expression({body or '0'})"


def merge(e: Expression, t: Term) -> Expression:
    """Return a new expression equal to ``e + t``."""
    out = Expression()
    out.extend(e)
    return out.merge(t)
