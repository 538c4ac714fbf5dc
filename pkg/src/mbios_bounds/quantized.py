"""Rate and density bounds obtained by quantizing the LLR to 2^d levels."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .channels import (
    INF, BEC, Channel, QuantizerLevels, TransitionProbs, capacity, cell_masses, error_weight,
    llr_density,
)
from .ensembles import MAX_DEGREE, CheckDegreeDistribution
from .numerics import LN2, DomainError, Interval, ToleranceSpec, h2, maximize

SUPPORTED_D = (2, 3, 4)
MAX_COMPOSITIONS = 5_000_000


@dataclass(frozen=True)
class DensityBoundCoefficients:
    k1: float
    k2: float
    method: str
    d: int | None = None
    x: float | None = None


@dataclass(frozen=True)
class DensityBound:
    """Lower bound on the asymptotic parity-check density at a given gap to capacity."""

    value: float
    trivial: bool
    epsilon: float
    coefficients: DensityBoundCoefficients


@dataclass(frozen=True)
class LevelOptimum:
    levels: QuantizerLevels
    probs: TransitionProbs
    chi: float


def _pair_terms(probs) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(probs, dtype=float)
    half = len(p) // 2
    good, bad = p[:half], p[::-1][:half]
    s = good + bad
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(s > 0, (good - bad) / np.where(s > 0, s, 1.0), 0.0)
    return s, r


def _chi(probs) -> float:
    n = len(probs)
    total = 0.0
    for i in range(n // 2):
        a, b = probs[i], probs[n - 1 - i]
        if a + b > 0:
            total += (a - b) ** 2 / (a + b)
    return total


def chi_objective(probs: TransitionProbs) -> float:
    """Sum over output pairs of (p_i - p_mirror)^2 / (p_i + p_mirror)."""
    return _chi(probs.probs)


def _levels_from_params(x) -> list[float]:
    levels = [x[0]]
    for u in x[1:]:
        levels.append(levels[-1] * u)
    return levels


def _params_from_levels(levels) -> list[float]:
    x = [levels[0]]
    for prev, cur in zip(levels, levels[1:]):
        x.append(cur / prev if prev > 0 else 0.5)
    return x


def _atomic_optimum(dens, d: int) -> list[float]:
    # chi is piecewise constant in the levels; only the atom magnitudes matter
    mags = sorted({abs(loc) for loc, _ in dens.atoms if math.isfinite(loc)} | {0.0}, reverse=True)
    n = 2 ** (d - 1) - 1
    best, best_levels = -1.0, None
    for combo in itertools.combinations_with_replacement(mags, n):
        levels = sorted(combo, reverse=True)
        val = _chi(cell_masses(dens, levels))
        if val > best + 1e-15:
            best, best_levels = val, levels
    return best_levels


@lru_cache(maxsize=4096)
def optimize_levels(channel: Channel, d: int, seed: int | None = None) -> LevelOptimum:
    """Quantizer levels maximizing the chi objective.

    Levels are searched as l_1 in (0, mean + 10 std) and l_i = l_{i-1} u_i with
    u_i in (0, 1). For d >= 3 the optimal (d-1)-level quantizer, refined by
    interleaving extra levels, is one of the starting points, so chi never
    decreases with d.
    """
    if d not in SUPPORTED_D:
        raise DomainError(f"quantizer depth d={d} not in {SUPPORTED_D}")
    dens = llr_density(channel)
    n = 2 ** (d - 1) - 1
    if dens.continuous is None:
        levels = _atomic_optimum(dens, d)
    else:
        mean, std = dens.finite_moments()
        lmax = max(mean + 10.0 * std, 1.0)
        box = [Interval(0.0, lmax)] + [Interval(0.0, 1.0)] * (n - 1)
        extra = []
        if d > 2:
            coarse = optimize_levels(channel, d - 1, seed).levels.levels
            refined = [min(coarse[0] * 1.5 + 0.5, lmax)]
            for j, m in enumerate(coarse):
                nxt = coarse[j + 1] if j + 1 < len(coarse) else 0.0
                refined += [m, 0.5 * (m + nxt)]
            extra.append(_params_from_levels(refined))
        f = lambda x: _chi(cell_masses(dens, _levels_from_params(x)))
        x, _ = maximize(f, box, ToleranceSpec(abs_tol=1e-14), seed=seed, extra_starts=extra)
        levels = _levels_from_params(x)
    q = QuantizerLevels(tuple(levels), d)
    probs = TransitionProbs(tuple(cell_masses(dens, levels)), d)
    return LevelOptimum(q, probs, _chi(probs.probs))


def stationarity_residual(channel: Channel, level: float) -> float:
    """Residual of the first-order optimality condition of a 4-level quantizer."""
    p0, p1, p2, p3 = cell_masses(llr_density(channel), [level])
    e = math.exp(-level)
    return abs((p2**2 + e * p1**2) / (p1 + p2) ** 2 - (p3**2 + e * p0**2) / (p0 + p3) ** 2)


@lru_cache(maxsize=256)
def compositions(k: int, parts: int) -> tuple[np.ndarray, np.ndarray]:
    """All compositions of k into ``parts`` non-negative parts, with log multinomials."""
    count = math.comb(k + parts - 1, parts - 1)
    if count > MAX_COMPOSITIONS:
        raise DomainError(f"{count} compositions of {k} into {parts} parts is too many")
    rows = []
    for bars in itertools.combinations(range(k + parts - 1), parts - 1):
        prev, row = -1, []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(k + parts - 2 - prev)
        rows.append(row)
    comp = np.array(rows, dtype=np.int64).reshape(count, parts)
    logm = gammaln(k + 1) - gammaln(comp + 1).sum(axis=1)
    comp.setflags(write=False)
    logm.setflags(write=False)
    return comp, logm


def _h2_or_series(x: np.ndarray, series_p: int | None) -> np.ndarray:
    if series_p is None:
        return h2(np.clip(x, 0.0, 1.0))
    y = (1.0 - 2.0 * x) ** 2
    s = sum(y**p / (p * (2 * p - 1)) for p in range(1, series_p + 1))
    return 1.0 - s / (2.0 * LN2)


def entropy_sum_quantized(dk: CheckDegreeDistribution, probs: TransitionProbs | tuple,
                          series_p: int | None = None) -> float:
    """Lower bound on the per-check conditional entropy of a quantized channel.

    Sum over k of d_k times the exact composition sum of
    multinomial * prod s_i^{k_i} * h2((1 - prod r_i^{k_i}) / 2), where s_i and
    r_i are the sum and normalized difference of an output pair. With
    ``series_p`` the binary entropy is replaced by its power series truncated
    after that many terms.
    """
    raw = probs.probs if isinstance(probs, TransitionProbs) else tuple(probs)
    s, r = _pair_terms(raw)
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    total = 0.0
    for k, frac in dk.dk:
        if k > MAX_DEGREE:
            raise DomainError(f"check degree {k} exceeds {MAX_DEGREE}")
        comp, logm = compositions(k, len(s))
        used = comp > 0
        logw = logm + np.where(used, comp * np.where(np.isfinite(logs), logs, 0.0), 0.0).sum(axis=1)
        dead = np.any(used & ~np.isfinite(logs), axis=1)
        w = np.where(dead, 0.0, np.exp(logw))
        prod = np.prod(r**comp, axis=1)
        total += frac * float(np.dot(w, _h2_or_series(0.5 * (1.0 - prod), series_p)))
    return total


def rate_upper_bound_2level(channel: Channel, dk: CheckDegreeDistribution) -> float:
    """Upper bound on achievable rate using only the hard-decision error weight."""
    c = capacity(channel)
    x = 1.0 - 2.0 * error_weight(channel)
    denom = sum(v * h2(0.5 * (1.0 - x**k)) for k, v in dk.dk)
    if denom <= 0.0:
        return 1.0
    return 1.0 - (1.0 - c) / denom


def _erasure_term(e: float, dk: CheckDegreeDistribution) -> float:
    if e <= 0.0:
        return 0.0
    return e / (1.0 - dk.polynomial(1.0 - e))


def rate_bound_from_probs(channel: Channel, dk: CheckDegreeDistribution, probs: TransitionProbs,
                          series_p: int | None = None) -> float:
    """Rate upper bound for a given quantizer output distribution."""
    c = capacity(channel)
    ent = entropy_sum_quantized(dk, probs, series_p)
    first = (1.0 - c) / ent if ent > 0 else 0.0
    e = 2.0 * math.fsum(probs.probs[len(probs.probs) // 2:])
    return 1.0 - max(first, _erasure_term(e, dk))


def rate_upper_bound_quantized(channel: Channel, dk: CheckDegreeDistribution, d: int,
                               seed: int | None = None, series_p: int | None = None) -> float:
    """Upper bound on achievable rate through a chi-optimal 2^d-level quantizer."""
    return rate_bound_from_probs(channel, dk, optimize_levels(channel, d, seed).probs, series_p)


def _require_noisy(c: float):
    if not 0.0 < c < 1.0:
        raise DomainError(f"density bounds need 0 < C < 1, got C = {c}")


def density_bound_coeffs(channel: Channel, method: str, d: int | None = None,
                         seed: int | None = None) -> DensityBoundCoefficients:
    """Coefficients K1, K2 of a parity-check density lower bound.

    ``method`` is ``two_level``, ``two_level_bec`` (erasure channels only) or
    ``quantized`` (with ``d``).
    """
    c = capacity(channel)
    _require_noisy(c)
    ratio = (1.0 - c) / c
    if method == "two_level":
        x = 1.0 - 2.0 * error_weight(channel)
        if not 0.0 < x < 1.0:
            raise DomainError("degenerate channel: hard-decision error weight is 0 or 1/2")
        k2 = ratio / (2.0 * math.log(1.0 / x))
        return DensityBoundCoefficients(k2 * math.log(ratio / (2.0 * LN2)), k2, method)
    if method == "two_level_bec":
        dens = llr_density(channel)
        if not dens.is_erasure:
            raise DomainError("two_level_bec applies only to erasure channels")
        p = dens.atom_mass(0.0)
        k2 = p / ((1.0 - p) * math.log(1.0 / (1.0 - p)))
        return DensityBoundCoefficients(k2 * math.log(p / (1.0 - p)), k2, method)
    if method == "quantized":
        if d is None:
            raise DomainError("quantized density bound needs d")
        chi = optimize_levels(channel, d, seed).chi
        if not 0.0 < chi < 1.0:
            raise DomainError(f"degenerate channel: chi = {chi}")
        k2 = -ratio / math.log(chi)
        return DensityBoundCoefficients(k2 * math.log(ratio / (2.0 * LN2)), k2, method, d=d)
    raise DomainError(f"unknown density-bound method {method!r}")


def density_lower_bound(coeffs: DensityBoundCoefficients, epsilon: float) -> DensityBound:
    """(K1 + K2 ln(1/eps)) / (1 - eps); non-positive values are flagged trivial."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"gap to capacity {epsilon} outside (0, 1)")
    value = (coeffs.k1 + coeffs.k2 * math.log(1.0 / epsilon)) / (1.0 - epsilon)
    return DensityBound(value, value <= 0.0, epsilon, coeffs)
