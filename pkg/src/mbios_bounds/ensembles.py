"""Degree distributions of LDPC ensembles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .numerics import DomainError

MAX_DEGREE = 64


def _as_items(coeffs) -> tuple[tuple[int, float], ...]:
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    out: dict[int, float] = {}
    for deg, c in items:
        if isinstance(deg, float) and not deg.is_integer():
            raise DomainError(f"degree {deg} is not an integer")
        deg, c = int(deg), float(c)
        if math.isnan(c) or c < 0:
            raise DomainError(f"coefficient of degree {deg} must be non-negative")
        if c > 0:
            out[deg] = out.get(deg, 0.0) + c
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class EdgePolynomial:
    """Edge-perspective degree distribution: coeffs[i] multiplies x^(i-1)."""

    coeffs: tuple[tuple[int, float], ...]

    def __post_init__(self):
        items = _as_items(self.coeffs)
        if not items:
            raise DomainError("degree distribution is empty")
        for deg, c in items:
            if deg < 2:
                raise DomainError(f"edge degree {deg} must be at least 2")
            if c > 1.0 + 1e-10:
                raise DomainError(f"coefficient of degree {deg} exceeds 1")
        total = sum(c for _, c in items)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"coefficients sum to {total}, expected 1")
        object.__setattr__(self, "coeffs", items)

    @classmethod
    def normalized(cls, coeffs) -> tuple["EdgePolynomial", float]:
        """Rescale possibly rounded coefficients to sum to one; returns the factor applied."""
        items = _as_items(coeffs)
        total = sum(c for _, c in items)
        if total <= 0:
            raise DomainError("degree distribution is empty")
        return cls(tuple((d, c / total) for d, c in items)), 1.0 / total

    @classmethod
    def regular(cls, degree: int) -> "EdgePolynomial":
        return cls(((degree, 1.0),))

    def integral(self) -> float:
        """Integral of the polynomial over [0, 1]."""
        return sum(c / d for d, c in self.coeffs)

    def as_dict(self) -> dict[int, float]:
        return dict(self.coeffs)


@dataclass(frozen=True)
class CheckDegreeDistribution:
    """Fractions d_k of parity checks with degree k."""

    dk: tuple[tuple[int, float], ...]

    def __post_init__(self):
        items = _as_items(self.dk)
        if not items:
            raise DomainError("check degree distribution is empty")
        for k, v in items:
            if k < 1:
                raise DomainError(f"check degree {k} must be at least 1")
            if k > MAX_DEGREE:
                raise DomainError(f"check degree {k} exceeds the supported maximum {MAX_DEGREE}")
        total = sum(v for _, v in items)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"check fractions sum to {total}, expected 1")
        object.__setattr__(self, "dk", items)

    @property
    def a_r(self) -> float:
        """Average right degree."""
        return sum(k * v for k, v in self.dk)

    def polynomial(self, x: float) -> float:
        """sum_k d_k x^k."""
        return sum(v * x**k for k, v in self.dk)

    @classmethod
    def regular(cls, k: int) -> "CheckDegreeDistribution":
        return cls(((k, 1.0),))


def dk_from_rho(rho: EdgePolynomial) -> CheckDegreeDistribution:
    """Node-perspective check fractions from the edge-perspective ``rho``."""
    total = rho.integral()
    return CheckDegreeDistribution(tuple((k, (c / k) / total) for k, c in rho.coeffs))


def design_rate(lam: EdgePolynomial, rho: EdgePolynomial) -> float:
    il = lam.integral()
    if il <= 0:
        raise DomainError("lambda integrates to zero")
    return 1.0 - rho.integral() / il


def _check_rate(rate: float):
    if not 0.0 < rate < 1.0:
        raise DomainError(f"rate {rate} outside (0, 1)")


def density_from_ar(a_r: float, rate: float) -> float:
    """Parity-check density (ones per information bit) from the average right degree."""
    _check_rate(rate)
    return (1.0 - rate) / rate * a_r


def normalized_density(a_r: float, rate: float) -> float:
    _check_rate(rate)
    return (1.0 - rate) / (2.0 - rate) * a_r


def density_from_normalized(t: float, rate: float) -> float:
    _check_rate(rate)
    return (2.0 - rate) * t / rate


@dataclass(frozen=True)
class EnsembleSpec:
    name: str
    lam: EdgePolynomial | None = None
    rho: EdgePolynomial | None = None
    dk_direct: CheckDegreeDistribution | None = None
    design_rate: float = math.nan
    renormalization: tuple[tuple[str, float], ...] = ()
    references: tuple[tuple[str, float], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.rho is None and self.dk_direct is None:
            raise DomainError(f"ensemble {self.name!r} needs rho or dk")
        rate = self.design_rate
        if self.lam is not None and self.rho is not None:
            computed = design_rate(self.lam, self.rho)
            if math.isnan(rate):
                object.__setattr__(self, "design_rate", computed)
            elif abs(rate - computed) > 1e-9:
                raise DomainError(f"design rate {rate} disagrees with lambda/rho ({computed})")
        elif math.isnan(rate):
            raise DomainError(f"ensemble {self.name!r} needs a design rate")
        _check_rate(self.design_rate)

    @property
    def dk(self) -> CheckDegreeDistribution:
        return self.dk_direct if self.dk_direct is not None else dk_from_rho(self.rho)

    @property
    def a_r(self) -> float:
        return self.dk.a_r


def ensemble_from_coefficients(name: str, lam, rho, references: Iterable = ()) -> EnsembleSpec:
    """Ensemble from rounded coefficients, renormalized on load."""
    lpoly, lf = EdgePolynomial.normalized(lam)
    rpoly, rf = EdgePolynomial.normalized(rho)
    return EnsembleSpec(name, lpoly, rpoly, renormalization=(("lambda", lf), ("rho", rf)),
                        references=tuple(references))


def right_regular(a_r: int, rate: float, name: str | None = None) -> EnsembleSpec:
    """Ensemble known only through a right-regular check degree and a rate."""
    return EnsembleSpec(name or f"right_regular_{a_r}", dk_direct=CheckDegreeDistribution.regular(a_r),
                        design_rate=rate)


# Rounded coefficients keyed by edge degree (x^(i-1) has degree i).
_COEFFICIENTS = {
    "gallager_3_6": ({3: 1.0}, {6: 1.0}, {"typical_pairs_db": 0.673, "de_threshold_db": 1.110}),
    "gallager_4_6": ({4: 1.0}, {6: 1.0}, {"typical_pairs_db": -0.423, "de_threshold_db": 1.674}),
    "gallager_3_4": ({3: 1.0}, {4: 1.0}, {"typical_pairs_db": -0.510, "de_threshold_db": 1.003}),
    "table2_row1": ({2: 0.38354, 3: 0.04237, 4: 0.57409}, {5: 0.24123, 6: 0.75877},
                    {"de_threshold_db": 0.809}),
    "table2_row2": ({2: 0.23802, 3: 0.20997, 4: 0.03492, 5: 0.12015, 7: 0.01587, 14: 0.00480,
                     15: 0.37627}, {8: 0.98013, 9: 0.01987}, {"de_threshold_db": 0.335}),
    "table2_row3": ({2: 0.21991, 3: 0.23328, 4: 0.02058, 6: 0.08543, 7: 0.06540, 8: 0.04767,
                     9: 0.01912, 19: 0.08064, 20: 0.22798}, {8: 0.64854, 9: 0.34747, 10: 0.00399},
                    {"de_threshold_db": 0.310}),
    "table2_row4": ({2: 0.19606, 3: 0.24039, 6: 0.00228, 7: 0.05516, 8: 0.16602, 9: 0.04088,
                     10: 0.01064, 28: 0.00221, 30: 0.28636}, {8: 0.00749, 9: 0.99101, 10: 0.00150},
                    {"de_threshold_db": 0.274}),
    "table3_row1": ({2: 0.302468, 3: 0.319447, 5: 0.378085}, {12: 1.0}, {"de_threshold_db": 2.049}),
    "table3_row2": ({2: 0.244067, 3: 0.292375, 7: 0.463558}, {14: 1.0}, {"de_threshold_db": 1.874}),
    "table3_row3": ({2: 0.205439, 3: 0.255432, 5: 0.0751187, 6: 0.1013440, 12: 0.3626670},
                    {16: 1.0}, {"de_threshold_db": 1.763}),
}

TABLES = {
    1: ("gallager_3_6", "gallager_4_6", "gallager_3_4"),
    2: ("table2_row1", "table2_row2", "table2_row3", "table2_row4"),
    3: ("table3_row1", "table3_row2", "table3_row3"),
}

BUILTIN: dict[str, EnsembleSpec] = {
    name: ensemble_from_coefficients(name, lam, rho, refs.items())
    for name, (lam, rho, refs) in _COEFFICIENTS.items()
}


def get_builtin(name: str) -> EnsembleSpec:
    try:
        return BUILTIN[name]
    except KeyError:
        raise DomainError(f"unknown built-in ensemble {name!r}; choose from {sorted(BUILTIN)}") from None


def ensemble_from_dict(data: dict) -> EnsembleSpec:
    if not isinstance(data, dict):
        raise DomainError("ensemble must be a JSON object")
    name = str(data.get("name", "custom"))
    if "dk" in data:
        if "design_rate" not in data:
            raise DomainError("design_rate: required together with dk")
        dk = CheckDegreeDistribution(tuple((d, v) for d, v in data["dk"]))
        return EnsembleSpec(name, dk_direct=dk, design_rate=float(data["design_rate"]))
    for key in ("lambda", "rho"):
        if key not in data:
            raise DomainError(f"{key}: missing from ensemble description")
    return ensemble_from_coefficients(name, [tuple(x) for x in data["lambda"]],
                                 [tuple(x) for x in data["rho"]])


def load_ensemble(path: str | Path) -> EnsembleSpec:
    with open(path) as fh:
        return ensemble_from_dict(json.load(fh))
