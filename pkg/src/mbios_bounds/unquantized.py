"""Bounds that use the full LLR density through its tanh moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channels import Channel, capacity, error_weight, llr_density, quantity_a, tanh_moment
from .ensembles import CheckDegreeDistribution
from .numerics import LN2, DomainError, Interval, ToleranceSpec, h2_inverse_low, solve_root
from .quantized import DensityBound, DensityBoundCoefficients, density_lower_bound


@dataclass(frozen=True)
class SeriesConfig:
    """Number of terms kept from the power series of the binary entropy."""

    truncation_p: int = 10

    def __post_init__(self):
        if int(self.truncation_p) != self.truncation_p or self.truncation_p < 1:
            raise DomainError(f"series truncation {self.truncation_p} must be a positive integer")


@dataclass(frozen=True)
class DegreeProfile:
    dk: CheckDegreeDistribution


@dataclass(frozen=True)
class Normalized:
    t: float

    def __post_init__(self):
        if not self.t >= 1.0:
            raise DomainError(f"normalized density t = {self.t} must be at least 1")


@dataclass(frozen=True)
class BerBoundInput:
    rate: float
    channel: Channel
    shape: DegreeProfile | Normalized

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise DomainError(f"rate {self.rate} outside (0, 1)")


@dataclass(frozen=True)
class BerBound:
    h2_pb: float
    pb: float
    trivial: bool


def _alpha(p: int) -> float:
    return 1.0 / (2.0 * LN2 * p * (2 * p - 1))


def series_b(channel: Channel, dk: CheckDegreeDistribution, cfg: SeriesConfig = SeriesConfig()) -> float:
    """Truncated series sum_p alpha_p sum_k d_k g_p^k with alpha_p = 1/(2 ln2 p(2p-1))."""
    terms = []
    for p in range(1, cfg.truncation_p + 1):
        g = tanh_moment(channel, p)
        terms.append(_alpha(p) * dk.polynomial(g))
    return math.fsum(terms)


def rate_upper_bound_unquantized(channel: Channel, dk: CheckDegreeDistribution,
                                 cfg: SeriesConfig = SeriesConfig()) -> float:
    """Upper bound on achievable rate from the exact LLR density."""
    denom = 1.0 - series_b(channel, dk, cfg)
    if denom <= 0.0:
        return 1.0
    return 1.0 - (1.0 - capacity(channel)) / denom


def density_lower_bound_unquantized(channel: Channel, epsilon: float) -> DensityBound:
    """Parity-check density lower bound from the full LLR density.

    The supremum over x is taken at its maximizer: x = A with xi = 1/(2 ln 2)
    in general, x = 1 - p with xi = 1 for an erasure channel.
    """
    c = capacity(channel)
    if not 0.0 < c < 1.0:
        raise DomainError(f"density bounds need 0 < C < 1, got C = {c}")
    if llr_density(channel).is_erasure:
        x, xi = 1.0 - llr_density(channel).atom_mass(0.0), 1.0
    else:
        x, xi = quantity_a(channel), 1.0 / (2.0 * LN2)
    if not 0.0 < x < 1.0:
        raise DomainError(f"degenerate channel: x = {x}")
    ratio = (1.0 - c) / c
    k2 = ratio / math.log(1.0 / x)
    coeffs = DensityBoundCoefficients(k2 * math.log(xi * ratio), k2, "unquantized", x=x)
    return density_lower_bound(coeffs, epsilon)


def _finish(y: float) -> BerBound:
    if y <= 0.0:
        return BerBound(y, 0.0, True)
    return BerBound(y, h2_inverse_low(min(y, 1.0)), False)


def _normalized_series(channel: Channel, exponent: float, cfg: SeriesConfig) -> float:
    return math.fsum(_alpha(p) * tanh_moment(channel, p) ** exponent
                     for p in range(1, cfg.truncation_p + 1))


def ber_lower_bound(inp: BerBoundInput, cfg: SeriesConfig = SeriesConfig()) -> BerBound:
    """Lower bound on the bit error probability of a code of rate R on the channel.

    For a degree profile the bound is
    h2(Pb) >= 1 - C/R + ((1-R)/R) sum_p alpha_p sum_k d_k g_p^k; for a
    normalized density t the inner sum becomes g_p^((2-R)t/(1-R)).
    """
    r, c = inp.rate, capacity(inp.channel)
    if isinstance(inp.shape, DegreeProfile):
        s = series_b(inp.channel, inp.shape.dk, cfg)
    else:
        s = _normalized_series(inp.channel, (2.0 - r) * inp.shape.t / (1.0 - r), cfg)
    return _finish(1.0 - c / r + (1.0 - r) / r * s)


def legacy_ber_bound(inp: BerBoundInput) -> BerBound:
    """Earlier, looser bound using only the hard-decision error weight.

    Reconstructed as h2(Pb) >= R - C + ((1-R)/(2 ln 2)) (1-2w)^(2(2-R)t/(1-R)).
    """
    if not isinstance(inp.shape, Normalized):
        raise DomainError("legacy bound needs a normalized density")
    r, c = inp.rate, capacity(inp.channel)
    x = 1.0 - 2.0 * error_weight(inp.channel)
    term = x ** (2.0 * (2.0 - r) * inp.shape.t / (1.0 - r)) / (2.0 * LN2)
    return _finish(r - c + (1.0 - r) * term)


def epsilon0_degree(channel: Channel, dk: CheckDegreeDistribution,
                    cfg: SeriesConfig = SeriesConfig()) -> float:
    """Largest gap to capacity at which the degree-profile BER bound is non-trivial."""
    c = capacity(channel)
    if not 0.0 < c < 1.0:
        raise DomainError(f"needs 0 < C < 1, got C = {c}")
    b = series_b(channel, dk, cfg)
    if b >= 1.0:
        raise DomainError("degenerate channel: series sum reaches 1")
    return (1.0 - c) * b / (c * (1.0 - b))


def epsilon0_normalized_objective(channel: Channel, t: float, eps: float,
                                  cfg: SeriesConfig = SeriesConfig()) -> float:
    c = capacity(channel)
    r = (1.0 - eps) * c
    return -eps * c + (1.0 - r) * _normalized_series(channel, (2.0 - r) * t / (1.0 - r), cfg)


def epsilon0_normalized(channel: Channel, t: float, cfg: SeriesConfig = SeriesConfig()) -> float:
    """Largest gap to capacity at which the normalized-density BER bound is non-trivial."""
    Normalized(t)
    c = capacity(channel)
    if not 0.0 < c < 1.0:
        raise DomainError(f"needs 0 < C < 1, got C = {c}")
    f = lambda e: epsilon0_normalized_objective(channel, t, e, cfg)
    return solve_root(f, Interval(0.0, 1.0), ToleranceSpec(abs_tol=1e-13))
