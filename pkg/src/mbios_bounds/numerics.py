"""Numerical primitives: quadrature, bracketed roots, box maximization, binary entropy."""

from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

LN2 = math.log(2.0)
DEFAULT_SEED = 20070101
SEED_ENV = "MBIOS_BOUNDS_SEED"


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its tolerance."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class BracketError(NumericalError):
    """The supplied bracket does not contain a sign change."""


class DomainError(ValueError):
    """An argument lies outside the function's domain."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DomainError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ToleranceSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2**20


def default_seed() -> int:
    """Maximizer seed, overridable through the MBIOS_BOUNDS_SEED environment variable."""
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise DomainError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


# Gauss-Kronrod 7/15 nodes and weights (positive half, centre last).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:7:2] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[9:15:2] = _WG[:3][::-1]
_EPS = np.finfo(float).eps


def _vectorize(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    probe = np.array([0.25, 0.5])
    try:
        out = np.asarray(f(probe), dtype=float)
        if out.shape == probe.shape:
            return lambda x: np.asarray(f(x), dtype=float)
    except Exception:
        pass
    return lambda x: np.array([float(f(float(v))) for v in x])


def _transform(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float):
    """Map an (semi-)infinite range onto a finite one."""
    if math.isfinite(lo) and math.isfinite(hi):
        return f, lo, hi
    if math.isfinite(lo):
        def g(t):
            return f(lo + t / (1.0 - t)) / (1.0 - t) ** 2
        return g, 0.0, 1.0
    if math.isfinite(hi):
        def g(t):
            return f(hi - t / (1.0 - t)) / (1.0 - t) ** 2
        return g, 0.0, 1.0

    def g(t):
        return f(t / (1.0 - t * t)) * (1.0 + t * t) / (1.0 - t * t) ** 2
    return g, -1.0, 1.0


def _gk15(g, a: float, b: float) -> tuple[float, float]:
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fv = g(centre + half * _NODES)
    if not np.all(np.isfinite(fv)):
        raise NumericalError(f"integrand not finite on [{a}, {b}]")
    resk = float(np.dot(_WK, fv)) * half
    resg = float(np.dot(_WG_FULL, fv)) * half
    resabs = float(np.dot(_WK, np.abs(fv))) * abs(half)
    mean = resk / (2.0 * half) if half != 0 else 0.0
    resasc = float(np.dot(_WK, np.abs(fv - mean))) * abs(half)
    err = abs(resk - resg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return resk, err


def integrate(f: Callable, interval: Interval, tol: ToleranceSpec = ToleranceSpec()) -> float:
    """Globally adaptive Gauss-Kronrod 7/15 quadrature.

    Infinite endpoints are handled by a rational change of variables. The
    integrand may be vectorized; scalar integrands are wrapped automatically.
    Raises ``NumericalError`` (carrying the best estimate) when the error
    estimate cannot be brought under ``max(abs_tol, rel_tol * |I|)`` within
    ``max_subdivisions`` intervals.
    """
    if interval.lo == interval.hi:
        return 0.0
    g, a, b = _transform(_vectorize(f), interval.lo, interval.hi)
    total, err = _gk15(g, a, b)
    heap = [(-err, a, b, total, err)]
    total_err = err
    n = 1
    while total_err > max(tol.abs_tol, tol.rel_tol * abs(total)):
        if n >= tol.max_subdivisions:
            raise NumericalError(
                f"quadrature did not converge within {tol.max_subdivisions} subdivisions "
                f"(estimate {total}, error {total_err})",
                estimate=total,
            )
        _, lo, hi, val, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # interval cannot be split further in floating point
            if total_err - e <= max(tol.abs_tol, tol.rel_tol * abs(total)) or not heap:
                break
            heapq.heappush(heap, (0.0, lo, hi, val, 0.0))
            total_err -= e
            continue
        v1, e1 = _gk15(g, lo, mid)
        v2, e2 = _gk15(g, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
        total += v1 + v2 - val
        total_err += e1 + e2 - e
        n += 1
    # re-sum to limit drift from the incremental updates
    return math.fsum(item[3] for item in heap)


def solve_root(f: Callable[[float], float], bracket: Interval,
               tol: ToleranceSpec = ToleranceSpec()) -> float:
    """Root of ``f`` inside a sign-changing bracket (Brent's method)."""
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0.0:
        return bracket.lo
    if fhi == 0.0:
        return bracket.hi
    if math.isnan(flo) or math.isnan(fhi) or flo * fhi > 0:
        raise BracketError(
            f"no sign change on [{bracket.lo}, {bracket.hi}] (f = {flo}, {fhi})"
        )
    return brentq(f, bracket.lo, bracket.hi, xtol=tol.abs_tol, rtol=4 * _EPS, maxiter=1000)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(phi: Callable[[float], float], lo: float, hi: float, xtol: float):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = phi(d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize(f: Callable[[Sequence[float]], float], box: Sequence[Interval],
             tol: ToleranceSpec = ToleranceSpec(), seed: int | None = None,
             starts: int = 8, extra_starts: Sequence[Sequence[float]] = (),
             max_sweeps: int = 200) -> tuple[list[float], float]:
    """Multi-start coordinate ascent with golden-section line searches.

    Each start sweeps the coordinates in turn, maximizing along the full box
    range of one coordinate, until a sweep improves the objective by less than
    ``tol.abs_tol``. Starts are the box centre, seeded uniform draws, and any
    ``extra_starts``. Returns the best point and its value.
    """
    if not box:
        raise DomainError("maximize needs at least one coordinate")
    for iv in box:
        if not (math.isfinite(iv.lo) and math.isfinite(iv.hi)):
            raise DomainError("maximize needs a finite box")
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    points = [[0.5 * (iv.lo + iv.hi) for iv in box]]
    for _ in range(max(starts, 8) - 1):
        points.append([float(rng.uniform(iv.lo, iv.hi)) for iv in box])
    points.extend([min(max(float(v), iv.lo), iv.hi) for v, iv in zip(p, box)]
                  for p in extra_starts)

    best_x: list[float] | None = None
    best_v = -math.inf
    for x in points:
        x = list(x)
        val = f(x)
        for _ in range(max_sweeps):
            before = val
            for i, iv in enumerate(box):
                def phi(t, i=i):
                    y = list(x)
                    y[i] = t
                    return f(y)
                t, v = _golden_max(phi, iv.lo, iv.hi, max(iv.width * 1e-11, 1e-300))
                if v > val:
                    x[i], val = t, v
            if val - before <= tol.abs_tol:
                break
        if val > best_v:
            best_x, best_v = x, val
    assert best_x is not None
    return best_x, best_v


def h2(x):
    """Binary entropy in bits; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"h2 argument {x} outside [0, 1]")
        if x == 0.0 or x == 1.0:
            return 0.0
        return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("h2 argument outside [0, 1]")
    out = np.zeros_like(arr)
    m = (arr > 0.0) & (arr < 1.0)
    v = arr[m]
    out[m] = -(v * np.log2(v) + (1.0 - v) * np.log2(1.0 - v))
    return out


def h2_series_truncated(x: float, m: int) -> float:
    """Power-series form of h2 around 1/2, truncated after ``m`` terms."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"h2 argument {x} outside [0, 1]")
    if m < 1:
        raise DomainError("series truncation must be at least 1")
    y = (1.0 - 2.0 * x) ** 2
    s = math.fsum(y**p / (p * (2 * p - 1)) for p in range(1, m + 1))
    return 1.0 - s / (2.0 * LN2)


def h2_inverse_low(y: float) -> float:
    """The inverse of h2 on [0, 1/2]."""
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"h2 value {y} outside [0, 1]")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    return brentq(lambda x: h2(x) - y, 0.0, 0.5, xtol=1e-300, rtol=4 * _EPS, maxiter=2000)
