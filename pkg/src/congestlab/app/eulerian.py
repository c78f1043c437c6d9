# src/congestlab/app/eulerian.py
# Version: 1.1.0
# Changelog: 1.1.0 — pressure L² identity, p_N vs p̃_N gap, time-aggregated weak-form residual.
# Changelog: 1.0.0 — empirical / histogram densities, constant and ramped pressures, saturation
#   product, weak-form residual against polynomial bump test functions.
"""Eulerian reconstruction of a particle state.

With the ghost particle x_0 = x_1 - 2/N and r = 1/(2N):

    ρ_N  = (1/N) Σ δ_{x_i}
    ρ̃_N  = 1/(N (x_{i+1} - x_i))   on [x_i, x_{i+1}),  i = 0..N-1
    p_N  = λ_i                     on [x_i, x_{i+1}),  i = 0..N-1
    p̃_N  linear from λ_{i-1} to λ_i on [x_i - r, x_i + r], holding λ_i up to the next ramp,
          zero outside [x_1 - r, x_N + r]

The printed histogram formula lists the cell endpoints in reverse order; [x_i, x_{i+1}) is the
reading that gives a positive density of unit mass.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InputError
from .jko import MultiplierVector, ParticleConfig
from .potential import interaction_force
from .quadrature import PiecewiseLinear, sup_abs_difference
from .trajectory import Trajectory

DENSITY_HISTOGRAM = "density-histogram"
PRESSURE_CONSTANT = "pressure-constant"
PRESSURE_LINEAR = "pressure-linear"
EMPIRICAL = "empirical"


@dataclass(frozen=True, eq=False)
class PiecewiseField:
    """A field on ℝ: piecewise-linear cells (`fn`) or weighted atoms, zero elsewhere."""

    kind: str
    fn: PiecewiseLinear | None = None
    atom_locations: np.ndarray | None = None
    atom_masses: np.ndarray | None = None

    @property
    def breakpoints(self) -> np.ndarray:
        if self.fn is None:
            raise InputError(f"{self.kind} field has no cells")
        return self.fn.knots

    @property
    def is_atomic(self) -> bool:
        return self.atom_locations is not None

    def mass(self) -> float:
        if self.is_atomic:
            return float(np.sum(self.atom_masses))
        return self.fn.integral()

    def __call__(self, x):
        if self.fn is None:
            raise InputError("point values of an atomic measure are undefined")
        return self.fn(x, right_continuous=True)


def empirical_measure(X: ParticleConfig) -> PiecewiseField:
    n = X.n
    return PiecewiseField(
        EMPIRICAL, atom_locations=X.positions.copy(), atom_masses=np.full(n, 1.0 / n)
    )


def histogram_density(X: ParticleConfig) -> PiecewiseField:
    """ρ̃_N: cell mass 1/N between consecutive (extended) particles.

    Raises:
        InputError: X outside K_N.
    """
    if not X.in_cone():
        raise InputError("histogram density needs a configuration in K_N")
    ext = X.extended()
    values = 1.0 / (X.n * np.diff(ext))
    return PiecewiseField(DENSITY_HISTOGRAM, PiecewiseLinear.constant_cells(ext, values))


def pressure_fields(X: ParticleConfig, L: MultiplierVector) -> tuple[PiecewiseField, PiecewiseField]:
    """(p_N, p̃_N) for one state."""
    if L.n != X.n:
        raise InputError("multiplier vector does not match the configuration size")
    n = X.n
    lam = L.values
    ext = X.extended()
    p_const = PiecewiseField(PRESSURE_CONSTANT, PiecewiseLinear.constant_cells(ext, lam[:-1]))

    r = 0.5 / n
    x = X.positions
    ramp_lo = x - r
    ramp_hi = x + r
    # ramps of touching particles meet exactly; keep knots ordered under rounding
    ramp_lo[1:] = np.maximum(ramp_lo[1:], ramp_hi[:-1])
    knots = np.empty(2 * n)
    knots[0::2] = ramp_lo
    knots[1::2] = ramp_hi
    start = np.empty(2 * n - 1)
    end = np.empty(2 * n - 1)
    start[0::2], end[0::2] = lam[:-1], lam[1:]  # ramps
    start[1::2] = end[1::2] = lam[1:-1]  # plateaus
    p_lin = PiecewiseField(PRESSURE_LINEAR, PiecewiseLinear(knots, start, end))
    return p_const, p_lin


def saturation_check(rho: PiecewiseField, pN: PiecewiseField) -> float:
    """sup over cells of |p_N (1 - ρ̃_N)|; both fields must share breakpoints."""
    if rho.kind != DENSITY_HISTOGRAM or pN.kind != PRESSURE_CONSTANT:
        raise InputError("saturation_check takes a histogram density and a constant pressure")
    if rho.breakpoints.shape != pN.breakpoints.shape or not np.allclose(
        rho.breakpoints, pN.breakpoints, rtol=0.0, atol=1e-14
    ):
        raise InputError("density and pressure are not on the same breakpoints")
    return float(np.max(np.abs(pN.fn.start * (1.0 - rho.fn.start))))


# ── test functions ────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class _PolyOnInterval:
    """A polynomial restricted to [lo, hi], zero outside."""

    poly: Polynomial
    lo: float
    hi: float

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.where((xa >= self.lo) & (xa <= self.hi), self.poly(xa), 0.0)
        return out if out.ndim else float(out)

    def pair_cells(self, left, right, a, b) -> float:
        """Σ_j ∫_{left_j}^{right_j} (a_j + b_j x) P(x) dx over the support, exact."""
        lo = np.clip(np.asarray(left, dtype=float), self.lo, self.hi)
        hi = np.clip(np.asarray(right, dtype=float), self.lo, self.hi)
        i0 = self.poly.integ()
        i1 = (Polynomial([0.0, 1.0]) * self.poly).integ()
        return float(np.sum(np.asarray(a) * (i0(hi) - i0(lo)) + np.asarray(b) * (i1(hi) - i1(lo))))


@dataclass(frozen=True)
class TestFunction:
    """ψ with compact support [lo, hi], given with ψ' and ψ''; C² across the support ends."""

    name: str
    value: _PolyOnInterval
    d1: _PolyOnInterval
    d2: _PolyOnInterval

    __test__ = False  # not a pytest class

    @classmethod
    def from_polynomial(cls, name: str, poly: Polynomial, lo: float, hi: float) -> TestFunction:
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise InputError(f"test function {name} needs a bounded support, got [{lo}, {hi}]")
        return cls(
            name,
            _PolyOnInterval(poly, lo, hi),
            _PolyOnInterval(poly.deriv(1), lo, hi),
            _PolyOnInterval(poly.deriv(2), lo, hi),
        )

    @property
    def support(self) -> tuple[float, float]:
        return self.value.lo, self.value.hi

    def pair(self, field: PiecewiseField) -> float:
        """⟨ψ, field⟩, exact."""
        if field.is_atomic:
            return float(np.sum(field.atom_masses * self.value(field.atom_locations)))
        return _pair_linear_cells(self.value, field.fn)

    def pair_second_derivative(self, field: PiecewiseField) -> float:
        """∫ ψ'' field dx, exact."""
        if field.is_atomic:
            return float(np.sum(field.atom_masses * self.d2(field.atom_locations)))
        return _pair_linear_cells(self.d2, field.fn)


def _pair_linear_cells(poly: _PolyOnInterval, fn: PiecewiseLinear) -> float:
    left, right = fn.knots[:-1], fn.knots[1:]
    slope = fn.slopes()
    intercept = fn.start - slope * left
    return poly.pair_cells(left, right, intercept, slope)


def bump(center: float, radius: float, power: int = 0) -> TestFunction:
    """x^power · (1 - ((x - center)/radius)²)³ on |x - center| < radius."""
    if not radius > 0:
        raise InputError("bump radius must be > 0")
    u = Polynomial([-center / radius, 1.0 / radius])
    poly = Polynomial([0.0, 1.0]) ** power * (1.0 - u * u) ** 3
    return TestFunction.from_polynomial(
        f"bump{power}(c={center:g},R={radius:g})", poly, center - radius, center + radius
    )


def bump_family(center: float, radius: float) -> list[TestFunction]:
    """b, x·b and x²·b for the bump b centered at `center`."""
    return [bump(center, radius, k) for k in (0, 1, 2)]


# ── weak formulation ──────────────────────────────────────────────────────────
def _weak_form_terms(traj: Trajectory, psi: TestFunction, k: int) -> tuple[float, float, float]:
    x0 = traj.states[k].positions
    x1 = traj.states[k + 1].positions
    n = traj.n
    time_term = (float(np.sum(psi.value(x1))) - float(np.sum(psi.value(x0)))) / (n * traj.tau)
    force = np.asarray(traj.potential.grad(x1), dtype=float) + interaction_force(
        traj.interaction, x1
    )
    drift_term = float(np.sum(psi.d1(x1) * force)) / n
    p_const, _ = pressure_fields(traj.states[k + 1], traj.multipliers[k + 1])
    pressure_term = psi.pair_second_derivative(p_const)
    return time_term, drift_term, pressure_term


def weak_form_residual(traj: Trajectory, psi: TestFunction, k: int) -> float:
    """|Δ_t⟨ψ, ρ_N⟩/τ + (1/N) Σ ψ'(x_i) φ'(x_i) - ∫ ψ'' p_N dx| on step k → k+1.

    Drift and pressure are taken at the end of the step. With an interaction kernel the drift
    includes (1/N) Σ_j W'(x_i - x_j).
    """
    if not isinstance(psi, TestFunction):
        raise InputError("weak_form_residual needs a compactly supported TestFunction")
    if not 0 <= k < traj.steps:
        raise InputError(f"step index {k} outside 0..{traj.steps - 1}")
    time_term, drift_term, pressure_term = _weak_form_terms(traj, psi, k)
    return abs(time_term + drift_term - pressure_term)


def weak_form_residual_integrated(traj: Trajectory, family: Sequence[TestFunction]) -> float:
    """Σ_k τ · max_ψ residual_k: an L¹-in-time residual norm over the family."""
    total = 0.0
    for k in range(traj.steps):
        total += max(weak_form_residual(traj, psi, k) for psi in family)
    return traj.tau * total


def pressure_l2_identity(traj: Trajectory) -> tuple[float, float]:
    """(‖p_N‖² by cell quadrature, ∫ (1/N) Σ λ_i² dt); equal when slackness holds."""
    direct = 0.0
    via_multipliers = 0.0
    for s, m in zip(traj.states[1:], traj.multipliers[1:], strict=True):
        lam = m.values[:-1]
        direct += float(np.sum(lam * lam * np.diff(s.extended())))
        via_multipliers += float(np.sum(lam * lam)) / s.n
    return traj.tau * direct, traj.tau * via_multipliers


def pressure_interpolant_gap(traj: Trajectory) -> float:
    """∫_0^T ess sup_x |p_N - p̃_N|² dt."""
    total = 0.0
    for s, m in zip(traj.states[1:], traj.multipliers[1:], strict=True):
        pc, pl = pressure_fields(s, m)
        total += sup_abs_difference(pc.fn, pl.fn) ** 2
    return traj.tau * total


def masses(fields: Iterable[PiecewiseField]) -> list[float]:
    return [f.mass() for f in fields]
