"""Exact Gibbs enumeration and disorder Monte Carlo for small SK systems.

Sites are numbered ``1..N`` in the public API; site ``N`` is the cavity
spin that carries the implicit ``eps_a eps_b`` of every overlap factor.
Internally configuration ``c`` has spin ``s`` (0-based) equal to
``1 - 2 * ((c >> s) & 1)``, so single-replica correlators are the
Walsh-Hadamard transform of the Gibbs weights.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import GuardError, RankDeficiencyError
from .terms import Monomial, canonicalize, format_monomial, replicas

MAX_ENUM_N = 22
MAX_TUPLES = 20_000_000
BATCH = 256
_CHUNK = 1 << 14


@dataclass(frozen=True)
class ModelInstance:
    """One disorder draw: ``couplings[idx(i, j)] = g_ij`` for ``i < j`` in row-major order."""

    N: int
    beta: float
    couplings: np.ndarray

    def __post_init__(self):
        if self.couplings.shape != (self.N * (self.N - 1) // 2,):
            raise ValueError("couplings must hold N(N-1)/2 entries")

    @classmethod
    def sample(cls, N: int, beta: float, rng: np.random.Generator) -> "ModelInstance":
        return cls(N, float(beta), rng.standard_normal(N * (N - 1) // 2))


def instance_rng(seed: int, N: int, index: int) -> np.random.Generator:
    """Generator for disorder sample ``index``; independent across sizes and indices."""
    return np.random.default_rng([seed, N, index])


@dataclass
class CorrelatorTable:
    """``<prod_{s in S} sigma_s>`` for site subsets ``S`` (1-based sites)."""

    N: int
    values: dict[frozenset, float] = field(default_factory=dict)

    def __getitem__(self, sites: Iterable[int]) -> float:
        return self.values[frozenset(sites)]


@dataclass(frozen=True)
class NuEstimate:
    mono: Monomial
    N: int
    beta: float
    samples: int
    mean: float
    stderr: float
    seed: int


@dataclass(frozen=True)
class SeriesFit:
    sizes: list[int]
    values: list[NuEstimate]
    m: int
    chat: list[float]
    cov_diag: list[float]
    powers: list[int] = field(default_factory=list)

    @property
    def stderr(self) -> list[float]:
        return [math.sqrt(v) for v in self.cov_diag]


# -- enumeration ------------------------------------------------------------

@lru_cache(maxsize=32)
def _pair_index(N: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(N, k=1)


def _spins(N: int, start: int, stop: int) -> np.ndarray:
    c = np.arange(start, stop, dtype=np.int64)[:, None]
    return (1 - 2 * ((c >> np.arange(N)) & 1)).astype(np.float64)


@lru_cache(maxsize=16)
def _pair_products(N: int) -> np.ndarray:
    iu, ju = _pair_index(N)
    s = _spins(N, 0, 1 << N)
    return np.ascontiguousarray((s[:, iu] * s[:, ju]).T)


def _field_energies(N: int, couplings: np.ndarray) -> np.ndarray:
    """``sum_{i<j} g_ij s_i s_j`` for every configuration; shape (B, 2^N)."""
    if N <= 14:
        return couplings @ _pair_products(N)
    iu, ju = _pair_index(N)
    out = np.empty((couplings.shape[0], 1 << N))
    for start in range(0, 1 << N, _CHUNK):
        stop = min(start + _CHUNK, 1 << N)
        s = _spins(N, start, stop)
        out[:, start:stop] = couplings @ (s[:, iu] * s[:, ju]).T
    return out


def gibbs_weights(N: int, beta: float, couplings: np.ndarray) -> np.ndarray:
    """Normalized Gibbs probabilities, shape (B, 2^N), for a batch of coupling vectors."""
    couplings = np.atleast_2d(couplings)
    x = (beta / math.sqrt(N)) * _field_energies(N, couplings)
    x -= x.max(axis=1, keepdims=True)
    w = np.exp(x)
    # numpy's pairwise summation keeps the error O(log 2^N) and the order fixed
    return w / w.sum(axis=1, keepdims=True)


def walsh_hadamard(p: np.ndarray) -> np.ndarray:
    """All subset correlators: ``out[..., S] = sum_c p[c] * (-1)^popcount(c & S)``."""
    B, size = p.shape
    N = size.bit_length() - 1
    h = np.array(p, dtype=np.float64, copy=True)
    for s in range(N):
        v = h.reshape(B, -1, 2, 1 << s)
        lo = v[:, :, 0, :].copy()
        hi = v[:, :, 1, :]
        v[:, :, 0, :] += hi
        np.subtract(lo, hi, out=hi)
    return h


def _check_size(N: int):
    if N < 2:
        raise GuardError("need at least two sites")
    if N > MAX_ENUM_N:
        raise GuardError(f"N={N} exceeds the enumeration limit {MAX_ENUM_N}")


def _mask(sites: Iterable[int], N: int) -> int:
    m = 0
    for s in sites:
        if not 1 <= s <= N:
            raise ValueError(f"site {s} outside 1..{N}")
        m ^= 1 << (s - 1)
    return m


def gibbs_correlators(inst: ModelInstance, subsets: Iterable[Iterable[int]]) -> CorrelatorTable:
    """Exact single-replica correlators for the requested site subsets."""
    _check_size(inst.N)
    corr = walsh_hadamard(gibbs_weights(inst.N, inst.beta, inst.couplings))[0]
    table = CorrelatorTable(inst.N)
    for S in subsets:
        S = frozenset(S)
        table.values[S] = float(corr[_mask(S, inst.N)])
    return table


@lru_cache(maxsize=64)
def _moment_plan(N: int, mono: Monomial) -> tuple[np.ndarray, np.ndarray, int]:
    """Distinct per-tuple parity masks (sorted within each row) with multiplicities."""
    k = len(mono)
    if N ** k > MAX_TUPLES:
        raise GuardError(f"{N}^{k} site tuples exceed the cost limit")
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64), np.ones(1), 1
    reps = sorted(replicas(mono))
    col = {r: i for i, r in enumerate(reps)}
    cav = 1 << (N - 1)
    ranges = [np.arange(N - 1 if f.truncated else N, dtype=np.int64) for f in mono]
    grids = np.meshgrid(*ranges, indexing="ij")
    masks = np.zeros((grids[0].size, len(reps)), dtype=np.int64)
    for i, f in enumerate(mono):
        bits = (np.int64(1) << grids[i].ravel()) ^ cav
        masks[:, col[f.a]] ^= bits
        masks[:, col[f.b]] ^= bits
    masks.sort(axis=1)
    rows, counts = np.unique(masks, axis=0, return_counts=True)
    return rows, counts.astype(np.float64), N ** k


def _moments_from_correlators(corr: np.ndarray, plan) -> np.ndarray:
    rows, counts, norm = plan
    vals = np.ones((corr.shape[0], rows.shape[0]))
    for r in range(rows.shape[1]):
        vals *= corr[:, rows[:, r]]
    return (vals @ counts) / norm


def gibbs_moment(inst: ModelInstance, mono: Monomial) -> float:
    """``<prod_i eps_a eps_b R_ab>`` (or ``R^-`` for truncated factors) for one instance."""
    _check_size(inst.N)
    plan = _moment_plan(inst.N, tuple(mono))
    corr = walsh_hadamard(gibbs_weights(inst.N, inst.beta, inst.couplings))
    return float(_moments_from_correlators(corr, plan)[0])


def sample_moments(
    mono: Monomial, beta: float, N: int, samples: int, seed: int, workers: int = 1
) -> np.ndarray:
    """Per-sample Gibbs moments for disorder draws ``0..samples-1``, in index order."""
    _check_size(N)
    mono = canonicalize(mono)
    plan = _moment_plan(N, mono)
    npairs = N * (N - 1) // 2

    def run(start: int) -> np.ndarray:
        stop = min(start + BATCH, samples)
        g = np.empty((stop - start, npairs))
        for i in range(start, stop):
            g[i - start] = instance_rng(seed, N, i).standard_normal(npairs)
        corr = walsh_hadamard(gibbs_weights(N, beta, g))
        return _moments_from_correlators(corr, plan)

    starts = range(0, samples, BATCH)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return np.concatenate(parts) if parts else np.empty(0)


def nu_estimate(
    mono: Monomial, beta: float, N: int, samples: int, seed: int, workers: int = 1
) -> NuEstimate:
    """Disorder average of the Gibbs moment with its standard error."""
    if samples < 2:
        raise ValueError("need at least two disorder samples")
    mono = canonicalize(mono)
    vals = sample_moments(mono, beta, N, samples, seed, workers)
    if np.all(vals == vals[0]):
        mean, se = float(vals[0]), 0.0
    else:
        mean = math.fsum(vals) / samples
        var = math.fsum((v - mean) ** 2 for v in vals) / (samples - 1)
        se = math.sqrt(var / samples)
    return NuEstimate(mono, N, float(beta), samples, mean, se, seed)


def _weighted_design(estimates: Sequence[NuEstimate], powers: Sequence[int]):
    n = np.array([e.N for e in estimates], dtype=np.float64)
    X = n[:, None] ** -np.array(powers, dtype=np.float64)[None, :]
    se = np.array([e.stderr for e in estimates])
    exact = bool(np.all(se == 0))
    w = np.ones_like(se) if exact or np.any(se == 0) else 1.0 / se
    return X, w, exact


def fit_powers(estimates: Sequence[NuEstimate], powers: Sequence[int]) -> SeriesFit:
    """Weighted least squares of the means against ``N^-p`` for ``p`` in ``powers``."""
    powers = list(powers)
    m = len(powers)
    sizes = [e.N for e in estimates]
    if len(set(sizes)) < m + 1:
        raise RankDeficiencyError(f"{len(set(sizes))} distinct sizes cannot fit {m} coefficients (need {m + 1})")
    X, w, exact = _weighted_design(estimates, powers)
    y = np.array([e.mean for e in estimates])
    Xw, yw = X * w[:, None], y * w
    if np.linalg.matrix_rank(Xw) < m:
        raise RankDeficiencyError("design matrix is rank deficient")
    chat, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    cov = np.zeros(m) if exact else np.diag(np.linalg.inv(Xw.T @ Xw))
    return SeriesFit(sizes, list(estimates), m, [float(c) for c in chat], [float(c) for c in cov], powers)


def fit_series(estimates: Sequence[NuEstimate], m: int) -> SeriesFit:
    """Weighted least squares of the means against ``N^-1 .. N^-m``.

    Weights are ``1/stderr^2``; when any stderr is zero (exact inputs) the
    weights are uniform and the reported covariance is zero.
    """
    return fit_powers(estimates, range(1, m + 1))


def leakage(estimates: Sequence[NuEstimate], powers: Sequence[int], extra: int) -> list[float]:
    """How much a unit ``N^-extra`` term in the data shifts each fitted coefficient."""
    X, w, _ = _weighted_design(estimates, list(powers))
    n = np.array([e.N for e in estimates], dtype=np.float64)
    shift, *_ = np.linalg.lstsq(X * w[:, None], n**-float(extra) * w, rcond=None)
    return [float(v) for v in shift]


def describe(est: NuEstimate) -> str:
    return f"nu{format_monomial(est.mono)} N={est.N} beta={est.beta}: {est.mean:.6g} +/- {est.stderr:.2g}"
