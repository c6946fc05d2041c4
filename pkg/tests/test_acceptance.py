"""Acceptance criteria, one test (and one printed PASS/FAIL line) each.

Run ``pytest tests/test_acceptance.py -v`` to see the criterion lines; the
Monte Carlo criteria (5, 6, 7) take a few minutes on one core.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from math import ceil

import numpy as np
import pytest

from skoverlap.algebra import ONE, ONE_MINUS_BETA2, ZERO, BetaRational
from skoverlap.engine import _unit_pipeline, closing_pair, evaluate_expansion, expand
from skoverlap.oracle import ModelInstance, fit_series, gibbs_moment, nu_estimate
from skoverlap.terms import (
    Expression,
    FactorPair,
    State,
    Term,
    canonicalize,
    epsilon_order,
    monomial,
    order_units,
    relabel,
    replicas,
)
from skoverlap.transforms import PruneBudget, derivative, prune, symmetry_reduce, transform_a, transform_d
from skoverlap.verify import judge, verify, z_score

B2 = BetaRational.beta_power(2)
INV = ONE / ONE_MINUS_BETA2
BETA = Fraction(1, 5)
SIZES = (6, 8, 10, 12)
SEED = 1
R2 = monomial([(1, 2), (1, 2)])


@pytest.fixture
def emit(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _emit(n: int, ok: bool, detail: str):
        line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        assert ok, line

    return _emit


def _poly(*coeffs) -> BetaRational:
    return BetaRational.from_parts(coeffs)


def _trunc(*pairs):
    return canonicalize(FactorPair(a, b, True) for a, b in pairs)


def _untrunc(*pairs):
    return canonicalize(FactorPair(a, b, False) for a, b in pairs)


def _nth_derivative(mono, j):
    e = Expression([Term(ONE, 0, State.NU0, mono)])
    for _ in range(j):
        nxt = Expression()
        for t in e:
            nxt.extend(derivative(t))
        e = nxt
    return {t.mono: t.coef for t in e if epsilon_order(t.mono) == 0}


def _random_monomial(rng: random.Random, max_replicas: int, max_factors: int, flags: bool = False):
    n = rng.randint(2, max_replicas)
    out = []
    for _ in range(rng.randint(1, max_factors)):
        a, b = rng.sample(range(1, n + 1), 2)
        out.append(FactorPair(min(a, b), max(a, b), flags and rng.random() < 0.4))
    return tuple(out)


def test_criterion_1_first_two_coefficients(emit):
    t0 = time.perf_counter()
    e = expand(R2, 2)
    dt = time.perf_counter() - t0
    c2 = -(B2 * _poly(1, 0, 1)) / ONE_MINUS_BETA2**4
    ok = e.coeffs[1] == INV and e.coeffs[2] == c2 and dt < 1.0
    emit(1, ok, f"C1 = {e.coeffs[1]}, C2 = {e.coeffs[2]} in {dt:.2f}s")


def test_criterion_2_intermediate_identities(emit):
    t0 = time.perf_counter()
    budget = PruneBudget(2)
    p1 = {(t.npow, t.mono): t.coef for t in transform_a(Term(ONE, 0, State.NU, _untrunc((1, 2))), budget)}
    p4 = {(t.npow, t.mono): t.coef for t in transform_d(Term(ONE, 0, State.NU, _trunc((1, 2), (1, 2))), budget)}
    p7 = _nth_derivative(_trunc((1, 2)), 2)
    p8 = _nth_derivative(_trunc((1, 2)), 3)
    checks = {
        "p1": p1 == {(1, ()): ONE, (0, _trunc((1, 2))): ONE},
        "p4": p4 == {(0, _untrunc((1, 2), (1, 2))): ONE, (1, _untrunc((1, 2))): -2 * ONE, (2, ()): ONE},
        "p7": p7 == {_trunc((1, 2), (1, 3), (2, 3)): BetaRational.beta_power(4, -4)},
        "p8": p8
        == {
            _trunc((1, 2), (1, 2), (1, 2), (1, 2)): BetaRational.beta_power(6, 1),
            _trunc((1, 2), (1, 2), (2, 3), (2, 3)): BetaRational.beta_power(6, -12),
            _trunc((1, 2), (1, 2), (3, 4), (3, 4)): BetaRational.beta_power(6, 9),
            _trunc((1, 2), (1, 3), (2, 4), (3, 4)): BetaRational.beta_power(6, 36),
        },
    }
    dt = time.perf_counter() - t0
    emit(2, all(checks.values()) and dt < 1.0, f"{checks} in {dt:.2f}s")


def test_criterion_3_second_order_examples(emit):
    t0 = time.perf_counter()
    cases = {
        "[[1,2],[1,3]]": (monomial([(1, 2), (1, 3)]), INV**3),
        "[[1,2],[3,4]]": (monomial([(1, 2), (3, 4)]), INV**2),
        "R12^4": (monomial([(1, 2)] * 4), 3 * INV**2),
        "R12 R13 R23": (monomial([(1, 2), (1, 3), (2, 3)]), INV**3),
    }
    got = {name: expand(m, 2).coeffs for name, (m, _) in cases.items()}
    dt = time.perf_counter() - t0
    ok = all(got[n] == {1: ZERO, 2: want} for n, (_, want) in cases.items()) and dt < 1.0
    emit(3, ok, "; ".join(f"{n}: C2 = {got[n][2]}" for n in cases) + f" in {dt:.2f}s")


def test_criterion_4_beta_zero(emit):
    t0 = time.perf_counter()
    symbolic = all(
        evaluate_expansion(expand(R2, m), 0, n) == Fraction(1, n) for m in (1, 2, 3, 4) for n in (1, 2, 5, 12, 1000)
    )
    numeric = []
    for n in SIZES:
        est = nu_estimate(R2, 0.0, n, samples=8, seed=SEED)
        numeric.append(est.stderr == 0.0 and abs(est.mean - 1 / n) <= 1e-15)
    dt = time.perf_counter() - t0
    emit(4, symbolic and all(numeric) and dt < 60, f"symbolic m<=4 exact: {symbolic}; oracle 1/N, stderr 0: {numeric}")


def test_criterion_5_third_coefficient(emit):
    t0 = time.perf_counter()
    e = expand(R2, 3)
    c3 = e.coeffs[3]
    literal = _poly(12, 0, 38, 0, 8, 0, -10) / (3 * ONE_MINUS_BETA2**7)  # (2/3)(6+19b^2+4b^4-5b^6)/(1-b^2)^7
    structural = c3.evaluate(0) == 0 and c3 == B2 * B2 * literal
    r = verify(R2, 3, BETA, sizes=SIZES, samples=80_000, seed=SEED, expansion=e)
    v = r.verdict(3)
    lit = float(literal.evaluate(BETA))
    z_lit = z_score(v.fitted, lit, v.stderr)
    dt = time.perf_counter() - t0
    detail = (
        f"C3(0) = 0: {c3.evaluate(0) == 0}; engine C3 = beta^4 * literal C3: {c3 == B2 * B2 * literal}; "
        f"fit c3 = {v.fitted:.4f} +/- {v.stderr:.4f}, engine {v.engine:.4f} (z = {v.z:+.2f}), "
        f"literal {lit:.4f} (z = {z_lit:+.2f}, {'consistent' if abs(z_lit) <= 3 else 'rejected'}); {dt:.0f}s"
    )
    emit(5, structural and v.passed and dt < 900, detail)


def test_criterion_6_fourth_moment_readings(emit):
    t0 = time.perf_counter()
    printed = _poly(1, 1) * INV**5  # the displayed (1+beta)/(1-beta^2)^5
    even = _poly(1, 0, 1) * INV**5
    ok = True
    parts = []
    for pairs in ([(1, 2), (1, 3), (2, 3), (2, 4)], [(1, 2), (1, 3), (2, 4), (3, 4)]):
        mono = monomial(pairs)
        e = expand(mono, 5)
        r = verify(mono, 3, BETA, sizes=SIZES, samples=20_000, seed=SEED, tail=5, pinned=True, expansion=e)
        v = r.verdict(3)
        raw = fit_series(r.estimates, 3)
        z_raw = z_score(raw.chat[2], v.engine, raw.stderr[2])
        z_printed = z_score(v.pinned.fitted, float(printed.evaluate(BETA)), v.pinned.stderr)
        ok = ok and r.passed
        parts.append(
            f"{pairs}: C3 = {e.coeffs[3]} (equals (1+beta^2)/(1-beta^2)^5: {e.coeffs[3] == even}), "
            f"fit {v.fitted:.4f} +/- {v.total_error:.4f} vs engine {v.engine:.4f} z = {v.z:+.2f}, "
            f"pinned {v.pinned.fitted:.5f} +/- {v.pinned.stderr:.5f} z = {v.pinned.z:+.2f} "
            f"(plain fit z = {z_raw:+.1f}), printed (1+beta) value z = {z_printed:+.0f}"
        )
    dt = time.perf_counter() - t0
    emit(6, ok and dt < 1800, " | ".join(parts) + f"; {dt:.0f}s")


def test_criterion_7_first_coefficient_monte_carlo(emit):
    t0 = time.perf_counter()
    r = verify(R2, 1, BETA, sizes=SIZES, samples=20_000, seed=SEED, rel_tol=0.02)
    v = r.verdict(1)
    ok = judge(v.fitted, 25 / 24, v.stderr, 3.0, 0.02)
    dt = time.perf_counter() - t0
    emit(7, ok and dt < 600, f"c1 = {v.fitted:.5f} +/- {v.stderr:.5f} vs 25/24 = {25 / 24:.5f}; {dt:.0f}s")


def test_criterion_8_property_suites(emit):
    t0 = time.perf_counter()
    rng = random.Random(8)
    cases = 120
    results = {}

    ok = True
    for _ in range(cases):
        n = rng.randint(1, 5)
        coef = BetaRational.beta_power(2 * rng.randint(0, 3), Fraction(rng.randint(-9, 9) or 1, rng.randint(1, 9)))
        ok &= len(derivative(Term(coef, rng.randint(0, 3), State.NU0, ()), n=n)) == 0
    results["derivative of constant"] = ok

    ok = True
    for _ in range(cases):
        mono = canonicalize(_random_monomial(rng, 5, 4))
        m = rng.randint(1, 3)
        budget = PruneBudget(m)
        src = transform_a(Term(ONE, rng.randint(0, 1), State.NU, mono), PruneBudget(m + 3))
        for t in list(src):
            src.extend(derivative(Term(t.coef, t.npow, State.NU0, t.mono)))
        kept = {t.key for t in prune(src, budget)}
        for t in src:
            too_high = order_units(t.npow, t.mono) >= 4 * m + 2
            vanishing = t.state is State.NU0 and epsilon_order(t.mono) > 0
            ok &= (t.key in kept) != (too_high or vanishing)
    results["pruning bound"] = ok

    ok = True
    for _ in range(cases):
        mono = canonicalize(_random_monomial(rng, 5, 4))
        lam = epsilon_order(mono)
        if lam == 0:
            mono = symmetry_reduce(Term(ONE, 0, State.NU, mono)).mono
        elif lam != 2:
            continue
        out = _unit_pipeline(mono, 0, len(mono) // 2 + 1)
        ok &= out.get(State.NU, 0, canonicalize(mono + (closing_pair(mono),))) == B2
    results["self-term beta^2"] = ok

    ok_relabel = ok_mono = ok_half = True
    for _ in range(cases):
        mono = canonicalize(_random_monomial(rng, 4, 3))
        m = max(1, ceil(len(mono) / 2))
        reps = sorted(replicas(mono))
        img = rng.sample(range(1, 9), len(reps))
        base, finer = expand(mono, m), expand(mono, m + 1)
        ok_relabel &= expand(relabel(mono, dict(zip(reps, img))), m).coeffs == base.coeffs
        ok_mono &= all(finer.coeffs[j] == base.coeffs[j] for j in range(1, m + 1))
        ok_half &= sorted(finer.coeffs) == list(range(1, m + 2)) and all(c.is_even() for c in finer.coeffs.values())
        for t in _unit_pipeline(mono, 0, m + 1):
            ok_half &= isinstance(t.npow, int)
    results["relabeling invariance"] = ok_relabel
    results["monotone refinement"] = ok_mono
    results["integral N-powers"] = ok_half

    ok = True
    for _ in range(cases):
        raw = _random_monomial(rng, 6, 5, flags=True)
        c = canonicalize(raw)
        ok &= epsilon_order(raw) % 2 == 0 and epsilon_order(c) == epsilon_order(raw) and canonicalize(c) == c
    results["epsilon parity / idempotence"] = ok

    ok = True
    for i in range(cases):
        mono = canonicalize(_random_monomial(rng, 4, 3))
        N = rng.randint(3, 7)
        inst = ModelInstance.sample(N, rng.uniform(0, 0.95), np.random.default_rng([SEED, i]))
        f, rest = mono[0], mono[1:]
        diff = gibbs_moment(inst, mono) - gibbs_moment(inst, (FactorPair(f.a, f.b, True),) + rest)
        ok &= abs(diff - gibbs_moment(inst, rest) / N) <= 1e-12
    results["truncation identity"] = ok

    dt = time.perf_counter() - t0
    emit(8, all(results.values()) and dt < 60, f"{cases} cases each: {results}; {dt:.1f}s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
