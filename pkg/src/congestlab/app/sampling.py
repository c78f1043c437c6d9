# src/congestlab/app/sampling.py
# Version: 1.1.0
# Changelog: 1.1.0 — seeded random block densities for the property suites; density specs from
#   `uniform:<a>,<b>` strings and breakpoints/values mappings.
# Changelog: 1.0.0 — macroscopic density, exact quantile, particle sampling at s = i/N and the
#   exact L¹ sampling error.
"""Initial data: a piecewise-constant density ρ⁰, its quantile X⁰ and the particles x_i = X⁰(i/N)."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import InputError
from .jko import ParticleConfig
from .quadrature import PiecewiseLinear, lp_distance_pow

log = logging.getLogger(__name__)

MASS_TOL = 1e-12
HEIGHT_TOL = 1e-12

PIECEWISE_CONSTANT = "piecewise-constant"
PIECEWISE_LINEAR = "piecewise-linear"


@dataclass(frozen=True)
class MacroDensity:
    """ρ⁰ = values[j] on [breakpoints[j], breakpoints[j+1]), zero elsewhere."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        b = np.array(self.breakpoints, dtype=float)
        v = np.array(self.values, dtype=float)
        if b.ndim != 1 or b.size < 2 or v.shape != (b.size - 1,):
            raise InputError("density needs M+1 breakpoints and M values")
        if not np.all(np.isfinite(b)) or not np.all(np.isfinite(v)):
            raise InputError("density breakpoints/values must be finite")
        if np.any(np.diff(b) <= 0):
            raise InputError("density breakpoints must be strictly increasing")
        if np.any(v < 0) or np.any(v > 1 + HEIGHT_TOL):
            raise InputError("density values must lie in [0, 1]")
        mass = float(np.sum(v * np.diff(b)))
        if mass <= 0:
            raise InputError("density has zero mass")
        if abs(mass - 1.0) > MASS_TOL:
            raise InputError(f"density mass is {mass!r}, expected 1")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, a: float, b: float) -> MacroDensity:
        if not b - a >= 1.0:
            raise InputError(f"uniform density on [{a}, {b}] would exceed 1 (need b - a >= 1)")
        return cls(np.array([a, b]), np.array([1.0 / (b - a)]))

    @property
    def masses(self) -> np.ndarray:
        return self.values * np.diff(self.breakpoints)

    @property
    def xi_left(self) -> float:
        return float(self.breakpoints[np.flatnonzero(self.values > 0)[0]])

    @property
    def xi_right(self) -> float:
        return float(self.breakpoints[np.flatnonzero(self.values > 0)[-1] + 1])

    def as_field(self) -> PiecewiseLinear:
        return PiecewiseLinear.constant_cells(self.breakpoints, self.values)

    def to_dict(self) -> dict[str, Any]:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class QuantileFn:
    """Monotone map [0,1] → ℝ, left-continuous (the infimum convention of a pseudo-inverse)."""

    kind: str
    fn: PiecewiseLinear

    @classmethod
    def piecewise_constant(cls, knots, values) -> QuantileFn:
        return cls(PIECEWISE_CONSTANT, PiecewiseLinear.constant_cells(knots, values))

    @classmethod
    def piecewise_linear(cls, knots, values) -> QuantileFn:
        return cls(PIECEWISE_LINEAR, PiecewiseLinear.continuous(knots, values))

    @classmethod
    def from_cells(cls, knots, start, end) -> QuantileFn:
        return cls(PIECEWISE_LINEAR, PiecewiseLinear(knots, start, end))

    @property
    def knots(self) -> np.ndarray:
        return self.fn.knots

    def __call__(self, s):
        return self.fn(s)

    def is_monotone(self, tol: float = 0.0) -> bool:
        return self.fn.is_monotone(tol)

    def has_unit_slope(self, tol: float = 1e-12) -> bool:
        """Every cell rises at least as fast as s: end - start >= width - tol."""
        return bool(np.all(self.fn.end - self.fn.start >= self.fn.widths - tol))


def quantile_of_density(rho0: MacroDensity) -> QuantileFn:
    """X⁰(s) = inf{x : F(x) >= s}, exact.

    Linear in s across each positive cell, jumping over zero-density gaps; X⁰(0) = ξ_L.

    Raises:
        InputError: the density carries no mass.
    """
    pos = np.flatnonzero(rho0.values > 0)
    if pos.size == 0:
        raise InputError("density has zero mass")
    masses = rho0.masses[pos]
    knots = np.concatenate([[0.0], np.cumsum(masses)])
    knots[-1] = 1.0
    start = rho0.breakpoints[pos]
    end = rho0.breakpoints[pos + 1]
    return QuantileFn.from_cells(knots, start, end)


def sample_particles(X0: QuantileFn, N: int) -> ParticleConfig:
    """x_i = X⁰(i/N), i = 1..N.

    Raises:
        InputError: N < 2, or the samples leave K_N (only possible when ρ⁰ exceeds 1).
    """
    if N < 2:
        raise InputError(f"sampling needs N >= 2, got {N}")
    s = np.arange(1, N + 1, dtype=float) / N
    x = np.asarray(X0(s), dtype=float)
    return ParticleConfig.from_positions(x)


def sampling_error_bound_check(X0: QuantileFn, XN0: ParticleConfig) -> float:
    """‖X_N⁰ - X⁰‖ in L¹(0,1), where X_N⁰ = x_i on ((i-1)/N, i/N]. Exact."""
    n = XN0.n
    step = PiecewiseLinear.constant_cells(np.arange(n + 1, dtype=float) / n, XN0.positions)
    return lp_distance_pow(step, X0.fn, 1)


def sampling_bound(rho0: MacroDensity, N: int) -> float:
    """(ξ_R - ξ_L)/N."""
    return (rho0.xi_right - rho0.xi_left) / N


# ── density inputs ────────────────────────────────────────────────────────────
def density_from_mapping(data: Mapping[str, Any]) -> MacroDensity:
    try:
        return MacroDensity(np.asarray(data["breakpoints"]), np.asarray(data["values"]))
    except KeyError as e:
        raise InputError("density needs `breakpoints` and `values`") from e


def parse_uniform_spec(text: str) -> MacroDensity | None:
    """`uniform:<a>,<b>` → uniform density; None if `text` is not of that form."""
    if not text.startswith("uniform:"):
        return None
    try:
        a, b = (float(t) for t in text.split(":", 1)[1].split(","))
    except ValueError as e:
        raise InputError(f"bad uniform spec {text!r}; expected uniform:<a>,<b>") from e
    return MacroDensity.uniform(a, b)


def random_density(
    rng: np.random.Generator, *, max_blocks: int = 5, min_height: float = 0.25
) -> MacroDensity:
    """1..max_blocks blocks with heights in [min_height, 1], separated by random gaps, mass 1."""
    k = int(rng.integers(1, max_blocks + 1))
    masses = rng.dirichlet(np.ones(k))
    heights = rng.uniform(min_height, 1.0, size=k)
    gaps = rng.uniform(0.0, 1.0, size=k - 1) * (rng.random(k - 1) < 0.7)

    edges = [float(rng.uniform(-2.0, 0.0))]
    values: list[float] = []
    for j in range(k):
        edges.append(edges[-1] + masses[j] / heights[j])
        values.append(float(heights[j]))
        if j < k - 1 and gaps[j] > 0:
            edges.append(edges[-1] + float(gaps[j]))
            values.append(0.0)

    b = np.asarray(edges)
    v = np.asarray(values)
    # re-derive heights from the rounded edges so the mass is 1 to rounding
    pos = v > 0
    widths = np.diff(b)
    v[pos] = masses / widths[pos]
    v = np.minimum(v, 1.0)
    mass = float(np.sum(v * widths))
    v[pos] /= mass
    return MacroDensity(b, np.minimum(v, 1.0))
