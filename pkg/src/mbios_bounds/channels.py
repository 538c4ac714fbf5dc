"""MBIOS channels described by their log-likelihood-ratio densities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .numerics import DomainError, Interval, ToleranceSpec, integrate

INF = math.inf
GAUSS_CLAMP = 12.0  # standard deviations kept on each side of a Gaussian law


@dataclass(frozen=True)
class GaussianPart:
    """Continuous LLR part proportional to N(mean, var); ``weight`` is its total mass."""

    mean: float
    var: float
    weight: float = 1.0

    def __post_init__(self):
        if not (self.var > 0 and math.isfinite(self.var) and math.isfinite(self.mean)):
            raise DomainError("gaussian part needs finite mean and positive variance")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        return self.weight * np.exp(-0.5 * z * z) / (self.std * math.sqrt(2 * math.pi))

    def cdf(self, x: float) -> float:
        if x == INF:
            return self.weight
        if x == -INF:
            return 0.0
        return 0.5 * self.weight * math.erfc(-(x - self.mean) / (self.std * math.sqrt(2.0)))

    def sf(self, x: float) -> float:
        if x == INF:
            return 0.0
        if x == -INF:
            return self.weight
        return 0.5 * self.weight * math.erfc((x - self.mean) / (self.std * math.sqrt(2.0)))

    def abs_range(self) -> float:
        return abs(self.mean) + GAUSS_CLAMP * self.std

    def moments(self) -> tuple[float, float]:
        return self.mean, self.var


@dataclass(frozen=True)
class TabulatedPart:
    """Continuous LLR part given by samples, linearly interpolated, zero outside.

    The table is rescaled so that its integral equals ``weight``.
    """

    points: tuple[tuple[float, float], ...]
    weight: float = 1.0
    _xs: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _ys: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(self.points) < 2:
            raise DomainError("tabulated density needs at least two points")
        xs = np.array([p[0] for p in self.points], dtype=float)
        ys = np.array([p[1] for p in self.points], dtype=float)
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DomainError("tabulated density has non-finite entries")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("tabulated density abscissae must be strictly increasing")
        if np.any(ys < 0):
            raise DomainError("tabulated density has negative values")
        seg = 0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)
        total = seg.sum()
        if total <= 0:
            raise DomainError("tabulated density integrates to zero")
        ys = ys * (self.weight / total)
        cum = np.concatenate([[0.0], np.cumsum(seg * (self.weight / total))])
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        object.__setattr__(self, "_cum", cum)

    def pdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self._xs, self._ys, left=0.0, right=0.0)

    def cdf(self, x: float) -> float:
        xs, ys = self._xs, self._ys
        if x <= xs[0]:
            return 0.0
        if x >= xs[-1]:
            return self.weight
        j = int(np.searchsorted(xs, x, side="right")) - 1
        h = x - xs[j]
        slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j])
        return float(self._cum[j] + ys[j] * h + 0.5 * slope * h * h)

    def sf(self, x: float) -> float:
        return self.weight - self.cdf(x)

    def abs_range(self) -> float:
        return float(max(abs(self._xs[0]), abs(self._xs[-1])))

    def moments(self) -> tuple[float, float]:
        iv = Interval(float(self._xs[0]), float(self._xs[-1]))
        tol = ToleranceSpec(abs_tol=1e-12, rel_tol=1e-9)
        m = integrate(lambda x: x * self.pdf(x), iv, tol) / self.weight
        v = integrate(lambda x: (x - m) ** 2 * self.pdf(x), iv, tol) / self.weight
        return m, v


ContinuousPart = Union[GaussianPart, TabulatedPart]


@dataclass(frozen=True)
class LlrDensity:
    """Law of the LLR given that zero was sent: point masses plus an optional density.

    Atom locations may be ``+inf``. Construction checks normalization and the
    symmetry a(l) = e^l a(-l).
    """

    atoms: tuple[tuple[float, float], ...] = ()
    continuous: ContinuousPart | None = None
    symmetry_rtol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        merged: dict[float, float] = {}
        for loc, mass in self.atoms:
            loc, mass = float(loc), float(mass)
            if math.isnan(loc) or math.isnan(mass) or mass < 0:
                raise DomainError(f"invalid atom ({loc}, {mass})")
            if loc == -INF and mass > 0:
                raise DomainError("an atom at -inf violates symmetry")
            if mass > 0:
                merged[loc] = merged.get(loc, 0.0) + mass
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))
        total = sum(merged.values()) + (self.continuous.weight if self.continuous else 0.0)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"LLR density has total mass {total}, expected 1")
        self._check_symmetry()

    def _check_symmetry(self):
        amap = dict(self.atoms)
        for loc, mass in self.atoms:
            if loc == 0.0 or loc == INF:
                continue
            if loc < 0 and -loc in amap:
                continue
            pos = abs(loc)
            if loc > 0:
                expected, other = mass * math.exp(-pos), amap.get(-pos, 0.0)
            else:
                expected, other = 0.0, mass
            if not math.isclose(other, expected, rel_tol=1e-9, abs_tol=1e-15):
                raise DomainError(f"atoms at +-{pos} violate a(l) = e^l a(-l)")
        part = self.continuous
        if isinstance(part, GaussianPart):
            if abs(part.var - 2.0 * part.mean) > 1e-9 * max(1.0, part.var):
                raise DomainError("gaussian LLR part must have variance twice its mean")
        elif part is not None:
            top = part.abs_range()
            ls = np.linspace(top / 65.0, top, 64)
            lhs = part.pdf(ls)
            rhs = np.exp(ls) * part.pdf(-ls)
            scale = max(float(np.max(lhs)), 1e-300)
            if np.any(np.abs(lhs - rhs) > self.symmetry_rtol * np.maximum(lhs, scale * 1e-6)):
                raise DomainError("continuous LLR part violates a(l) = e^l a(-l)")

    @property
    def is_erasure(self) -> bool:
        """True when all mass sits at 0 and +inf."""
        return self.continuous is None and all(loc in (0.0, INF) for loc, _ in self.atoms)

    def expect_abs(self, phi: Callable, tol: ToleranceSpec = ToleranceSpec()) -> float:
        """E[phi(|L|)] with phi vectorized on [0, inf]."""
        total = 0.0
        for loc, mass in self.atoms:
            total += mass * float(phi(np.array([abs(loc)]))[0])
        part = self.continuous
        if part is not None:
            top = part.abs_range()
            fold = lambda l: (part.pdf(l) + part.pdf(-l)) * phi(l)
            if isinstance(part, GaussianPart) and 0 < part.mean < top:
                total += integrate(fold, Interval(0.0, part.mean), tol)
                total += integrate(fold, Interval(part.mean, top), tol)
            else:
                total += integrate(fold, Interval(0.0, top), tol)
        return total

    def mass_below(self, x: float) -> float:
        """Pr(L < x)."""
        m = sum(mass for loc, mass in self.atoms if loc < x)
        if self.continuous is not None:
            m += self.continuous.cdf(x)
        return m

    def mass_above(self, x: float) -> float:
        """Pr(L > x)."""
        m = sum(mass for loc, mass in self.atoms if loc > x)
        if self.continuous is not None:
            m += self.continuous.sf(x)
        return m

    def atom_mass(self, x: float) -> float:
        return dict(self.atoms).get(x, 0.0)

    def finite_moments(self) -> tuple[float, float]:
        """Mean and standard deviation of the finite part of the law."""
        ws, ms, vs = [], [], []
        for loc, mass in self.atoms:
            if math.isfinite(loc):
                ws.append(mass), ms.append(loc), vs.append(0.0)
        if self.continuous is not None:
            m, v = self.continuous.moments()
            ws.append(self.continuous.weight), ms.append(m), vs.append(v)
        wt = sum(ws)
        if wt == 0:
            return 0.0, 0.0
        mean = sum(w * m for w, m in zip(ws, ms)) / wt
        var = sum(w * (v + (m - mean) ** 2) for w, m, v in zip(ws, ms, vs)) / wt
        return mean, math.sqrt(var)


@dataclass(frozen=True)
class BEC:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"BEC erasure probability {self.p} outside [0, 1]")


@dataclass(frozen=True)
class BSC:
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 0.5:
            raise DomainError(f"BSC crossover probability {self.eps} outside [0, 1/2]")


@dataclass(frozen=True)
class BIAWGN:
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"BIAWGN noise deviation {self.sigma} must be positive")


@dataclass(frozen=True)
class Custom:
    density: LlrDensity
    label: str = "custom"


Channel = Union[BEC, BSC, BIAWGN, Custom]


@dataclass(frozen=True)
class QuantizerLevels:
    """Positive thresholds l_1 >= ... >= l_{2^(d-1)-1} of a 2^d-level quantizer."""

    levels: tuple[float, ...]
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("quantizer needs d >= 1")
        if len(self.levels) != 2 ** (self.d - 1) - 1:
            raise DomainError(f"{2 ** self.d}-level quantizer needs {2 ** (self.d - 1) - 1} levels")
        prev = INF
        for l in self.levels:
            if not (0.0 <= l < INF) or l > prev:
                raise DomainError("quantizer levels must be finite, non-negative and non-increasing")
            prev = l


@dataclass(frozen=True)
class TransitionProbs:
    """Probabilities p_0..p_{2^d-1} of the quantized outputs; p_i pairs with p_{2^d-1-i}."""

    probs: tuple[float, ...]
    d: int

    def pairs(self):
        n = len(self.probs)
        return [(self.probs[i], self.probs[n - 1 - i]) for i in range(n // 2)]


@lru_cache(maxsize=4096)
def llr_density(channel: Channel) -> LlrDensity:
    if isinstance(channel, BEC):
        return LlrDensity(atoms=((0.0, channel.p), (INF, 1.0 - channel.p)))
    if isinstance(channel, BSC):
        e = channel.eps
        if e == 0.0:
            return LlrDensity(atoms=((INF, 1.0),))
        if e == 0.5:
            return LlrDensity(atoms=((0.0, 1.0),))
        l0 = math.log((1.0 - e) / e)
        return LlrDensity(atoms=((l0, 1.0 - e), (-l0, e)))
    if isinstance(channel, BIAWGN):
        s2 = channel.sigma ** 2
        return LlrDensity(continuous=GaussianPart(2.0 / s2, 4.0 / s2))
    if isinstance(channel, Custom):
        return channel.density
    raise DomainError(f"unknown channel {channel!r}")


def _capacity_phi(l):
    l = np.asarray(l, dtype=float)
    out = np.ones_like(l)
    fin = np.isfinite(l)
    lf = l[fin]
    e = np.exp(-lf)
    ent = (np.log1p(e) + lf * e / (1.0 + e)) / math.log(2.0)
    out[fin] = 1.0 - ent
    return out


@lru_cache(maxsize=4096)
def capacity(channel: Channel) -> float:
    """Capacity in bits per channel use."""
    if isinstance(channel, BEC):
        return 1.0 - channel.p
    return min(1.0, max(0.0, llr_density(channel).expect_abs(_capacity_phi)))


@lru_cache(maxsize=4096)
def error_weight(channel: Channel) -> float:
    """w = Pr(L < 0) + Pr(L = 0) / 2."""
    dens = llr_density(channel)
    return dens.mass_below(0.0) + 0.5 * dens.atom_mass(0.0)


@lru_cache(maxsize=65536)
def tanh_moment(channel: Channel, p: int) -> float:
    """g_p = E[tanh^(2p)(|L|/2)]."""
    if p < 1:
        raise DomainError("tanh moment order must be at least 1")
    if isinstance(channel, BEC):
        return 1.0 - channel.p
    if isinstance(channel, BSC):
        return (1.0 - 2.0 * channel.eps) ** (2 * p)

    def phi(l):
        l = np.asarray(l, dtype=float)
        return np.where(np.isfinite(l), np.tanh(np.minimum(l, 1e300) / 2.0), 1.0) ** (2 * p)

    return llr_density(channel).expect_abs(phi)


def quantity_a(channel: Channel) -> float:
    """A = g_1 = E[tanh^2(L/2)]."""
    return tanh_moment(channel, 1)


def cell_masses(dens: LlrDensity, levels) -> list[float]:
    """Quantized output probabilities for a raw, already-ordered level sequence."""
    edges = (INF,) + tuple(levels) + (0.0,)
    n = len(edges) - 1
    pos = [0.0] * n
    neg = [0.0] * n
    part = dens.continuous
    if part is not None:
        sf, cdf = part.sf, part.cdf
        upper = [sf(e) for e in edges]
        lower = [cdf(-e) for e in edges]
        for i in range(n):
            pos[i] = max(upper[i + 1] - upper[i], 0.0)
            neg[i] = max(lower[i + 1] - lower[i], 0.0)
    for loc, mass in dens.atoms:
        if loc == 0.0:
            pos[n - 1] += 0.5 * mass
            neg[n - 1] += 0.5 * mass
            continue
        a = abs(loc)
        for i in range(n):
            if edges[i + 1] < a <= edges[i] or (i == 0 and a == INF):
                if loc > 0:
                    pos[i] += mass
                else:
                    neg[i] += mass
                break
    neg.reverse()
    return pos + neg


def cell_probabilities(channel: Channel | LlrDensity, q: QuantizerLevels) -> TransitionProbs:
    """Output probabilities of the symmetric 2^d-level quantizer.

    Positive cells are (l_{i+1}, l_i] and negative cells their mirrors
    [-l_i, -l_{i+1}); an atom at zero is split evenly between the two cells
    adjacent to zero.
    """
    dens = channel if isinstance(channel, LlrDensity) else llr_density(channel)
    return TransitionProbs(tuple(cell_masses(dens, q.levels)), q.d)


def biawgn_from_ebn0(ebn0_db: float, rate: float) -> BIAWGN:
    """BIAWGN channel at the given Eb/N0 for a code of the given rate."""
    if not 0.0 < rate <= 1.0:
        raise DomainError(f"rate {rate} outside (0, 1]")
    if not math.isfinite(ebn0_db):
        raise DomainError("Eb/N0 must be finite")
    return BIAWGN(math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))))


def ebn0_from_sigma(sigma: float, rate: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma * sigma))


def biawgn_for_capacity(target: float) -> BIAWGN:
    """BIAWGN channel whose capacity equals ``target``."""
    from .numerics import solve_root

    if not 0.0 < target < 1.0:
        raise DomainError(f"capacity {target} outside (0, 1)")
    # capacity decreases in log(sigma)
    f = lambda s: capacity(BIAWGN(math.exp(s))) - target
    s = solve_root(f, Interval(-6.0, 8.0), ToleranceSpec(abs_tol=1e-13))
    return BIAWGN(math.exp(s))


def density_from_dict(data: dict) -> LlrDensity:
    """Build an LLR density from a JSON-style mapping.

    ``{"atoms": [[loc, mass], ...], "continuous": {"type": "gaussian", "mean": m,
    "var": v, "weight": w} | {"type": "tabulated", "points": [[l, a], ...],
    "weight": w}, "symmetry_rtol": r}``. Locations may be ``"inf"``.
    """
    if not isinstance(data, dict):
        raise DomainError("custom density must be a JSON object")
    atoms = []
    for item in data.get("atoms", []):
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise DomainError(f"atoms: entry {item!r} is not a [location, mass] pair")
        loc, mass = item
        atoms.append((float(loc) if not isinstance(loc, str) else float(loc.replace("+", "")), float(mass)))
    cont = data.get("continuous")
    part = None
    if cont is not None:
        kind = cont.get("type")
        weight = float(cont.get("weight", 1.0 - sum(m for _, m in atoms)))
        if kind == "gaussian":
            part = GaussianPart(float(cont["mean"]), float(cont["var"]), weight)
        elif kind == "tabulated":
            part = TabulatedPart(tuple((float(a), float(b)) for a, b in cont["points"]), weight)
        else:
            raise DomainError(f"continuous.type: unknown kind {kind!r}")
    return LlrDensity(tuple(atoms), part, float(data.get("symmetry_rtol", 1e-3 if isinstance(part, TabulatedPart) else 1e-9)))


def load_custom_channel(path: str | Path) -> Custom:
    with open(path) as fh:
        data = json.load(fh)
    return Custom(density_from_dict(data), label=str(data.get("label", Path(path).stem)))
