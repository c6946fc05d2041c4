"""Compare engine coefficients with Monte Carlo fits of exact Gibbs averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .engine import Expansion, expand
from .errors import DomainError
from .oracle import NuEstimate, SeriesFit, fit_powers, fit_series, leakage, nu_estimate
from .terms import Monomial, canonicalize

DEFAULT_SIZES = (6, 8, 10, 12)


@dataclass(frozen=True)
class PinnedCheck:
    """Fit of one coefficient with every other engine coefficient held fixed."""

    fitted: float
    stderr: float
    z: float | None
    passed: bool


@dataclass(frozen=True)
class CoefficientVerdict:
    power: int
    engine: float
    fitted: float
    stderr: float
    z: float | None
    passed: bool
    systematic: float = 0.0
    pinned: PinnedCheck | None = None

    @property
    def total_error(self) -> float:
        return math.hypot(self.stderr, self.systematic)

    def to_json(self) -> dict:
        out = {
            "power": self.power,
            "engine": self.engine,
            "fitted": self.fitted,
            "stderr": self.stderr,
            "systematic": self.systematic,
            "z": self.z,
            "pass": self.passed,
        }
        if self.pinned is not None:
            out["pinned"] = {
                "fitted": self.pinned.fitted,
                "stderr": self.pinned.stderr,
                "z": self.pinned.z,
                "pass": self.pinned.passed,
            }
        return out


@dataclass
class VerificationReport:
    mono: Monomial
    beta: Fraction
    order: int
    tail: int
    sizes: list[int]
    samples: int
    seed: int
    estimates: list[NuEstimate]
    fit: SeriesFit
    engine_coeffs: list[float]
    verdicts: list[CoefficientVerdict]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, power: int) -> CoefficientVerdict:
        return self.verdicts[power - 1]

    def to_json(self) -> dict:
        return {
            "monomial": [[f.a, f.b] for f in self.mono],
            "beta": str(self.beta),
            "order": self.order,
            "tail": self.tail,
            "sizes": self.sizes,
            "samples": self.samples,
            "seed": self.seed,
            "estimates": [{"N": e.N, "mean": e.mean, "stderr": e.stderr} for e in self.estimates],
            "fit": {"chat": self.fit.chat, "stderr": self.fit.stderr},
            "engine": {"coeffs_at_beta": self.engine_coeffs},
            "verdict": [v.to_json() for v in self.verdicts],
            "passed": self.passed,
        }


def z_score(fitted: float, reference: float, stderr: float, abs_tol: float = 1e-9) -> float | None:
    """Signed ``(fitted - reference) / stderr``; ``None`` when stderr is 0 and the values differ."""
    diff = fitted - reference
    if stderr > 0:
        return diff / stderr
    return 0.0 if abs(diff) <= abs_tol else None


def judge(
    fitted: float, reference: float, stderr: float, z_tol: float = 3.0, rel_tol: float = 0.0, abs_tol: float = 1e-9
) -> bool:
    return abs(fitted - reference) <= max(z_tol * stderr, rel_tol * abs(reference), abs_tol)


def _subtract_tail(est: NuEstimate, tail: dict[int, float]) -> NuEstimate:
    shift = math.fsum(c / est.N**j for j, c in tail.items())
    return NuEstimate(est.mono, est.N, est.beta, est.samples, est.mean - shift, est.stderr, est.seed)


def _pinned_check(
    raw: list[NuEstimate], j: int, coeffs: list[float], tail: int, z_tol: float, abs_tol: float
) -> PinnedCheck:
    others = {i: coeffs[i - 1] for i in range(1, tail + 1) if i != j}
    fit = fit_powers([_subtract_tail(e, others) for e in raw], [j, tail + 1])
    chat, se = fit.chat[0], fit.stderr[0]
    c = coeffs[j - 1]
    return PinnedCheck(chat, se, z_score(chat, c, se, abs_tol), judge(chat, c, se, z_tol, 0.0, abs_tol))


def verify(
    mono: Monomial,
    order: int,
    beta,
    sizes: Sequence[int] = DEFAULT_SIZES,
    samples: int = 20000,
    seed: int = 0,
    *,
    tail: int | None = None,
    pinned: bool = False,
    z_tol: float = 3.0,
    rel_tol: float = 0.0,
    abs_tol: float = 1e-9,
    workers: int = 1,
    expansion: Expansion | None = None,
) -> VerificationReport:
    """Fit ``sum_{j<=order} c_j / N^j`` to oracle means and judge every ``c_j``.

    With ``tail > order`` the engine's coefficients ``order < j <= tail`` are
    subtracted from the means before fitting, so that a large higher-order
    tail does not leak into the fitted coefficients at small ``N``.  The
    unknown remainder is budgeted as a systematic error equal to the shift
    the last subtracted term would have caused, added in quadrature.

    With ``pinned`` each ``c_j`` is also refitted alone (plus a nuisance
    ``N^-(tail+1)`` term) after subtracting every other engine coefficient;
    that check must pass too.
    """
    mono = canonicalize(mono)
    beta = Fraction(beta)
    if not 0 <= beta < 1:
        raise DomainError(f"beta={beta} is outside the high-temperature range [0, 1)")
    tail = order if tail is None else tail
    if tail < order:
        raise ValueError("tail order must be at least the fit order")
    if expansion is None or expansion.m < tail:
        expansion = expand(mono, tail)
    coeffs = [float(expansion.coefficient(j).evaluate(beta)) for j in range(1, tail + 1)]
    raw = [nu_estimate(mono, float(beta), N, samples, seed, workers) for N in sizes]
    shifts = {j: coeffs[j - 1] for j in range(order + 1, tail + 1)}
    fit = fit_series([_subtract_tail(e, shifts) for e in raw] if shifts else raw, order)

    systematic = [0.0] * order
    if shifts:
        leak = leakage(raw, range(1, order + 1), tail)
        systematic = [abs(v * coeffs[tail - 1]) for v in leak]

    verdicts = []
    for j in range(1, order + 1):
        c, chat = coeffs[j - 1], fit.chat[j - 1]
        err = math.hypot(fit.stderr[j - 1], systematic[j - 1])
        check = None
        if pinned:
            check = _pinned_check(raw, j, coeffs, tail, z_tol, abs_tol)
        ok = judge(chat, c, err, z_tol, rel_tol, abs_tol) and (check is None or check.passed)
        verdicts.append(
            CoefficientVerdict(j, c, chat, fit.stderr[j - 1], z_score(chat, c, err, abs_tol), ok, systematic[j - 1], check)
        )
    return VerificationReport(
        mono, beta, order, tail, list(sizes), samples, seed, raw, fit, coeffs[:order], verdicts
    )


def format_report(report: VerificationReport) -> str:
    lines = [
        f"monomial {[[f.a, f.b] for f in report.mono]}  beta={report.beta}  sizes={report.sizes}  "
        f"samples={report.samples}  seed={report.seed}"
    ]
    if report.tail > report.order:
        lines.append(f"engine tail through N^-{report.tail} subtracted before fitting")
    for v in report.verdicts:
        z = "n/a" if v.z is None else f"{v.z:+.2f}"
        sys_part = f" (+/- {v.systematic:.2g} truncation)" if v.systematic else ""
        line = f"C{v.power}: engine={v.engine:.6g} fitted={v.fitted:.6g} +/- {v.stderr:.2g}{sys_part} z={z}"
        if v.pinned is not None:
            pz = "n/a" if v.pinned.z is None else f"{v.pinned.z:+.2f}"
            line += f" pinned={v.pinned.fitted:.6g} +/- {v.pinned.stderr:.2g} z={pz}"
        lines.append(f"{line} {'PASS' if v.passed else 'FAIL'}")
    return "\n".join(lines)
