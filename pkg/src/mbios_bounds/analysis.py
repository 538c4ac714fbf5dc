"""Eb/N0 threshold searches, table regeneration and parameter sweeps."""

from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import BIAWGN, Channel, biawgn_for_capacity, biawgn_from_ebn0, capacity
from .ensembles import (
    TABLES, CheckDegreeDistribution, EnsembleSpec, density_from_normalized, get_builtin,
    right_regular,
)
from .numerics import (
    BracketError, DomainError, Interval, NumericalError, ToleranceSpec, h2, solve_root,
)
from .quantized import (
    DensityBound, density_bound_coeffs, density_lower_bound, rate_upper_bound_2level,
    rate_upper_bound_quantized,
)
from .unquantized import (
    BerBoundInput, Normalized, SeriesConfig, ber_lower_bound, density_lower_bound_unquantized,
    legacy_ber_bound, rate_upper_bound_unquantized,
)

SCAN_POINTS = 16
PROBE_TOL = 1e-6
MAX_TRUNCATION = 640


@dataclass(frozen=True)
class Method:
    """A bounding technique: capacity_limit, two_level, quantized (with d) or unquantized."""

    kind: str
    d: int | None = None

    def __post_init__(self):
        if self.kind not in ("capacity_limit", "two_level", "quantized", "unquantized"):
            raise DomainError(f"unknown method {self.kind!r}")
        if (self.kind == "quantized") != (self.d is not None):
            raise DomainError("quantized methods, and only they, take a depth d")

    @property
    def label(self) -> str:
        return f"quantized({self.d})" if self.kind == "quantized" else self.kind

    @property
    def short(self) -> str:
        return {"capacity_limit": "cap", "two_level": "2level", "unquantized": "unq"}.get(
            self.kind, f"q{2 ** (self.d or 0)}")


CAPACITY_LIMIT = Method("capacity_limit")
TWO_LEVEL = Method("two_level")
UNQUANTIZED = Method("unquantized")
TABLE_METHODS = (CAPACITY_LIMIT, TWO_LEVEL, Method("quantized", 2), Method("quantized", 3), UNQUANTIZED)


def parse_method(text: str) -> Method:
    """Accepts cap, 2level, q4, q8, q16, unq or the long labels."""
    t = text.strip().lower()
    aliases = {"cap": CAPACITY_LIMIT, "capacity_limit": CAPACITY_LIMIT, "2level": TWO_LEVEL,
               "two_level": TWO_LEVEL, "unq": UNQUANTIZED, "unquantized": UNQUANTIZED}
    if t in aliases:
        return aliases[t]
    m = re.fullmatch(r"q(\d+)", t)
    if m:
        levels = int(m.group(1))
        d = levels.bit_length() - 1
        if levels >= 4 and 2**d == levels:
            return Method("quantized", d)
    m = re.fullmatch(r"quantized\((\d)\)", t)
    if m:
        return Method("quantized", int(m.group(1)))
    raise DomainError(f"method: unknown value {text!r} (use cap, 2level, q4, q8, q16 or unq)")


def rate_bound(method: Method, channel: Channel, dk: CheckDegreeDistribution,
               series: SeriesConfig = SeriesConfig(), seed: int | None = None) -> float:
    """Upper bound on achievable rate (capacity for the capacity limit)."""
    if method.kind == "capacity_limit":
        return capacity(channel)
    if method.kind == "two_level":
        return rate_upper_bound_2level(channel, dk)
    if method.kind == "quantized":
        return rate_upper_bound_quantized(channel, dk, method.d, seed)
    return rate_upper_bound_unquantized(channel, dk, series)


@dataclass(frozen=True)
class ThresholdQuery:
    ensemble: EnsembleSpec
    method: Method
    bracket_db: Interval = Interval(-3.0, 5.0)
    tol_db: float = 1e-3
    series: SeriesConfig = SeriesConfig()
    seed: int | None = None

    def __post_init__(self):
        if not self.bracket_db.width > 0:
            raise DomainError("threshold bracket is empty")
        if not self.tol_db > 0:
            raise DomainError("threshold tolerance must be positive")


def threshold_ebn0(q: ThresholdQuery) -> float:
    """Smallest Eb/N0 (dB) at which the chosen rate bound reaches the design rate.

    A 16-point scan locates the first crossing and checks monotonicity; the
    crossing is then refined by a bracketed root search. When the scan is not
    monotone a denser scan is used to find the earliest crossing.
    """
    rate = q.ensemble.design_rate
    dk = q.ensemble.dk
    g = lambda db: rate_bound(q.method, biawgn_from_ebn0(db, rate), dk, q.series, q.seed) - rate
    grid = np.linspace(q.bracket_db.lo, q.bracket_db.hi, SCAN_POINTS)
    vals = [g(float(x)) for x in grid]
    if vals[-1] < 0:
        raise BracketError(
            f"{q.method.label} bound stays below the design rate on "
            f"[{q.bracket_db.lo}, {q.bracket_db.hi}] dB (gap {vals[0]:.3g} .. {vals[-1]:.3g})")
    if vals[0] >= 0:
        raise BracketError(
            f"{q.method.label} bound already reaches the design rate at {q.bracket_db.lo} dB")
    if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
        grid = np.linspace(q.bracket_db.lo, q.bracket_db.hi, 4 * SCAN_POINTS)
        vals = [g(float(x)) for x in grid]
    j = next(i for i, v in enumerate(vals) if v >= 0)
    return solve_root(g, Interval(float(grid[j - 1]), float(grid[j])),
                      ToleranceSpec(abs_tol=q.tol_db / 4))


@dataclass(frozen=True)
class TableRow:
    ensemble: str
    design_rate: float
    thresholds: tuple[tuple[str, float], ...]
    references: tuple[tuple[str, float], ...] = ()
    renormalization: tuple[tuple[str, float], ...] = ()

    def threshold(self, label: str) -> float:
        return dict(self.thresholds)[label]


def _probe_series(ens: EnsembleSpec, db: float, series: SeriesConfig) -> bool:
    """True when doubling the truncation moves the rate bound at ``db`` by less than PROBE_TOL."""
    ch = biawgn_from_ebn0(db, ens.design_rate)
    a = rate_upper_bound_unquantized(ch, ens.dk, series)
    b = rate_upper_bound_unquantized(ch, ens.dk, SeriesConfig(2 * series.truncation_p))
    return abs(a - b) < PROBE_TOL


def _threshold_task(args) -> float:
    name, method, series, seed = args
    ens = get_builtin(name)
    value = threshold_ebn0(ThresholdQuery(ens, method, series=series, seed=seed))
    if method.kind != "unquantized":
        return value
    # table-quality output: keep doubling the truncation until the probe passes
    while not _probe_series(ens, value, series):
        if series.truncation_p >= MAX_TRUNCATION:
            raise NumericalError(f"series truncation not converged for {ens.name} at P={series.truncation_p}")
        series = SeriesConfig(2 * series.truncation_p)
        value = threshold_ebn0(ThresholdQuery(ens, method, series=series, seed=seed))
    return value


def reproduce_table(table_id: int, series: SeriesConfig = SeriesConfig(), seed: int | None = None,
                    workers: int = 1) -> list[TableRow]:
    """Recompute every bound-derived threshold column of a built-in table."""
    if table_id not in TABLES:
        raise DomainError(f"table id {table_id} not in {sorted(TABLES)}")
    names = TABLES[table_id]
    tasks = [(n, m, series, seed) for n in names for m in TABLE_METHODS]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_threshold_task, tasks))
    else:
        values = [_threshold_task(t) for t in tasks]
    rows = []
    for i, name in enumerate(names):
        ens = get_builtin(name)
        chunk = values[i * len(TABLE_METHODS):(i + 1) * len(TABLE_METHODS)]
        rows.append(TableRow(name, ens.design_rate,
                             tuple((m.label, v) for m, v in zip(TABLE_METHODS, chunk)),
                             ens.references, ens.renormalization))
    return rows


@dataclass(frozen=True)
class DensityPoint:
    ebn0_db: float
    epsilon: float | None
    value: float | None
    trivial: bool
    beyond_capacity: bool


def density_bound(method: Method, channel: Channel, epsilon: float,
                  seed: int | None = None) -> DensityBound:
    if method.kind == "two_level":
        return density_lower_bound(density_bound_coeffs(channel, "two_level"), epsilon)
    if method.kind == "quantized":
        return density_lower_bound(density_bound_coeffs(channel, "quantized", method.d, seed), epsilon)
    if method.kind == "unquantized":
        return density_lower_bound_unquantized(channel, epsilon)
    raise DomainError(f"no density bound for method {method.label}")


def sweep_density_bound(rate: float, method: Method, ebn0_grid, seed: int | None = None) -> list[DensityPoint]:
    """Density lower bound along an Eb/N0 grid for codes of the given rate."""
    out = []
    for db in ebn0_grid:
        ch = biawgn_from_ebn0(float(db), rate)
        c = capacity(ch)
        if rate >= c:
            out.append(DensityPoint(float(db), None, None, False, True))
            continue
        eps = 1.0 - rate / c
        b = density_bound(method, ch, eps, seed)
        out.append(DensityPoint(float(db), eps, b.value, b.trivial, False))
    return out


@dataclass(frozen=True)
class RegularThresholdPoint:
    rate: float
    method: str
    threshold_db: float


def sweep_right_regular_threshold(a_r: int, rate_grid, methods, series: SeriesConfig = SeriesConfig(),
                                  seed: int | None = None) -> list[RegularThresholdPoint]:
    """Thresholds of right-regular ensembles (all checks of degree a_R) versus rate."""
    if a_r < 2:
        raise DomainError("right degree must be at least 2")
    out = []
    for rate in sorted(float(r) for r in rate_grid):
        ens = right_regular(a_r, rate)
        for m in methods:
            thr = threshold_ebn0(ThresholdQuery(ens, m, bracket_db=Interval(-6.0, 8.0),
                                                series=series, seed=seed))
            out.append(RegularThresholdPoint(rate, m.label, thr))
    return out


@dataclass(frozen=True)
class BerPoint:
    epsilon: float
    t: float
    pb: float
    pb_trivial: bool
    pb_legacy: float
    legacy_trivial: bool


def sweep_ber_bound(c_target: float, epsilons, t_grid, series: SeriesConfig = SeriesConfig()) -> list[BerPoint]:
    """Bit error probability lower bounds versus normalized density at fixed capacity."""
    ch = biawgn_for_capacity(c_target)
    out = []
    for eps in epsilons:
        rate = (1.0 - float(eps)) * c_target
        for t in t_grid:
            inp = BerBoundInput(rate, ch, Normalized(float(t)))
            new, old = ber_lower_bound(inp, series), legacy_ber_bound(inp)
            out.append(BerPoint(float(eps), float(t), new.pb, new.trivial, old.pb, old.trivial))
    return out


@dataclass(frozen=True)
class MinimalDensity:
    t_min: float
    density_min: float
    rate: float
    legacy: bool


def min_normalized_density(channel: Channel, rate: float, pb_target: float, legacy: bool = False,
                           series: SeriesConfig = SeriesConfig()) -> MinimalDensity:
    """Smallest normalized density t compatible with a bit error probability ``pb_target``."""
    if not 0.0 < pb_target < 0.5:
        raise DomainError(f"target bit error probability {pb_target} outside (0, 1/2)")
    target = h2(pb_target)

    def bound(t: float) -> float:
        inp = BerBoundInput(rate, channel, Normalized(t))
        return (legacy_ber_bound(inp) if legacy else ber_lower_bound(inp, series)).h2_pb

    if bound(1.0) <= target:
        t = 1.0
    else:
        hi = 2.0
        while bound(hi) > target:
            hi *= 2.0
            if hi > 1e9:
                raise NumericalError("bit error bound never drops below the target")
        t = solve_root(lambda x: bound(x) - target, Interval(1.0, hi), ToleranceSpec(abs_tol=1e-10))
    return MinimalDensity(t, density_from_normalized(t, rate), rate, legacy)
