# src/congestlab/app/metrics.py
# Version: 1.1.1
# Changelog: 1.1.1 — time_interpolant_gap record is informational (never part of pass/fail).
# Changelog: 1.1.0 — time-equicontinuity and time-interpolant records in estimate_suite; records
#   for inequalities stated without interaction are kept but marked informational when W is on.
# Changelog: 1.0.0 — quantile Wasserstein distances, empirical-vs-histogram closed form, KR dual
#   lower bound, a-priori estimate suite.
"""Wasserstein distances in 1-D and the a-priori estimates along a trajectory.

In one dimension W_p(μ, ν) is the L^p(0,1) distance between quantile functions. All quantiles
used here are piecewise linear, so p = 1, 2 are integrated exactly on the merged knot set; other
p go through adaptive quadrature when explicitly requested.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InputError, ParameterError
from .eulerian import PiecewiseField
from .jko import ParticleConfig
from .quadrature import PiecewiseLinear, lp_distance_pow, lp_distance_pow_adaptive, product_integral
from .sampling import QuantileFn
from .trajectory import Trajectory, time_interpolant_bound, time_interpolant_gap

QUANTILE_QUADRATURE = "quantile-quadrature"
CLOSED_FORM = "closed-form"
KR_DUAL = "kr-dual-lowerbound"

MONOTONE_TOL = 1e-12
LIPSCHITZ_TOL = 1e-12


def _as_fn(q) -> PiecewiseLinear:
    return q if isinstance(q, PiecewiseLinear) else q.fn


def wasserstein_p(q1, q2, p: float, *, adaptive: bool = False) -> float:
    """(∫_0^1 |q1 - q2|^p ds)^{1/p} for monotone quantiles.

    Args:
        q1, q2: QuantileFn (or anything exposing a PiecewiseLinear `fn`).
        p: order; 1 and 2 are exact, other p >= 1 need adaptive=True.

    Raises:
        InputError: a quantile is not monotone.
        ParameterError: p < 1, or p not in {1, 2} without adaptive.
    """
    if p < 1:
        raise ParameterError(f"Wasserstein order must be >= 1, got {p}")
    f1, f2 = _as_fn(q1), _as_fn(q2)
    if not f1.is_monotone(MONOTONE_TOL) or not f2.is_monotone(MONOTONE_TOL):
        raise InputError("quantile functions must be nondecreasing")
    if p in (1, 2):
        return lp_distance_pow(f1, f2, int(p)) ** (1.0 / p)
    if not adaptive:
        raise ParameterError(f"p={p} needs adaptive quadrature (adaptive=True)")
    return lp_distance_pow_adaptive(f1, f2, p) ** (1.0 / p)


def empirical_quantile(X: ParticleConfig) -> QuantileFn:
    """Quantile of ρ_N: x_i on ((i-1)/N, i/N]."""
    n = X.n
    return QuantileFn.piecewise_constant(np.arange(n + 1) / n, X.positions)


def histogram_quantile(X: ParticleConfig) -> QuantileFn:
    """Quantile of ρ̃_N: linear from x_i to x_{i+1} on [i/N, (i+1)/N], x_0 = x_1 - 2/N."""
    n = X.n
    return QuantileFn.piecewise_linear(np.arange(n + 1) / n, X.extended())


def emp_vs_hist_closed_form(X: ParticleConfig, p: float) -> float:
    """W_p(ρ_N, ρ̃_N) = ((1/((p+1)N)) Σ_{i=0}^{N-1} |x_{i+1} - x_i|^p)^{1/p}."""
    gaps = np.diff(X.extended())
    return float((np.sum(np.abs(gaps) ** p) / ((p + 1.0) * X.n)) ** (1.0 / p))


def w2_squared_between(a: ParticleConfig, b: ParticleConfig) -> float:
    """W_2²(ρ_N(a), ρ_N(b)) = (1/N) Σ |a_i - b_i|² (same N, both sorted)."""
    if a.n != b.n:
        raise InputError("configurations differ in size")
    d = a.positions - b.positions
    return float(d @ d) / a.n


# ── Kantorovich-Rubinstein lower bound ────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class LipschitzWitness:
    """Piecewise-linear test function on ℝ, extended linearly beyond its knots."""

    name: str
    knots: np.ndarray
    values: np.ndarray
    left_slope: float = 0.0
    right_slope: float = 0.0

    @classmethod
    def from_callable(cls, name: str, f, grid: np.ndarray) -> LipschitzWitness:
        g = np.asarray(grid, dtype=float)
        v = np.asarray(f(g), dtype=float)
        return cls(name, g, v)

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.interp(xa, self.knots, self.values)
        out = np.where(xa < self.knots[0], self.values[0] + self.left_slope * (xa - self.knots[0]), out)
        out = np.where(
            xa > self.knots[-1], self.values[-1] + self.right_slope * (xa - self.knots[-1]), out
        )
        return out if out.ndim else float(out)

    def lipschitz_constant(self) -> float:
        inner = np.abs(np.diff(self.values) / np.diff(self.knots)) if self.knots.size > 1 else []
        return float(max(np.max(inner, initial=0.0), abs(self.left_slope), abs(self.right_slope)))

    def pair(self, f: PiecewiseField) -> float:
        """⟨ψ, f⟩, exact for atoms and piecewise-linear cells."""
        if f.is_atomic:
            return float(np.sum(f.atom_masses * self(f.atom_locations)))
        knots = f.fn.knots
        grid = np.unique(
            np.concatenate([knots, self.knots[(self.knots > knots[0]) & (self.knots < knots[-1])]])
        )
        psi = PiecewiseLinear.continuous(grid, self(grid))
        return product_integral(f.fn, psi)


def default_witnesses(lo: float, hi: float, count: int = 9) -> list[LipschitzWitness]:
    """±x, |x - c| and unit ramps clamp(x - c, 0, 1) for c on a grid over [lo, hi]."""
    out = [
        LipschitzWitness("x", np.array([0.0, 1.0]), np.array([0.0, 1.0]), 1.0, 1.0),
        LipschitzWitness("-x", np.array([0.0, 1.0]), np.array([0.0, -1.0]), -1.0, -1.0),
    ]
    for c in np.linspace(lo, hi, count):
        out.append(LipschitzWitness(f"|x-{c:.3g}|", np.array([c]), np.array([0.0]), -1.0, 1.0))
        out.append(
            LipschitzWitness(f"ramp@{c:.3g}", np.array([c, c + 1.0]), np.array([0.0, 1.0]), 0.0, 0.0)
        )
    return out


def kr_dual_lower_bound(
    f1: PiecewiseField, f2: PiecewiseField, witnesses: Sequence[LipschitzWitness]
) -> float:
    """max_ψ |⟨ψ, f1⟩ - ⟨ψ, f2⟩| over 1-Lipschitz witnesses; never above W_1.

    Raises:
        InputError: a witness is steeper than 1.
    """
    best = 0.0
    for psi in witnesses:
        if psi.lipschitz_constant() > 1.0 + LIPSCHITZ_TOL:
            raise InputError(f"witness {psi.name} is not 1-Lipschitz")
        best = max(best, abs(psi.pair(f1) - psi.pair(f2)))
    return best


# ── a-priori estimates ────────────────────────────────────────────────────────
@dataclass(frozen=True)
class EstimateRecord:
    name: str
    lhs: float
    rhs: float
    applies: bool = True

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-12

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "applies": self.applies,
        }


@dataclass(frozen=True)
class EstimateReport:
    records: list[EstimateRecord] = field(default_factory=list)
    phi_bar: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if r.applies)

    def failures(self) -> list[str]:
        return [r.name for r in self.records if r.applies and not r.passed]

    def get(self, name: str) -> EstimateRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "phi_bar": self.phi_bar,
            "passed": self.passed,
            "records": [r.to_dict() for r in self.records],
        }


def snapshot_indices(steps: int, count: int = 33) -> np.ndarray:
    """Step indices of `count` uniform times in [0, T], snapped to the step grid."""
    return np.unique(np.rint(np.linspace(0, steps, count)).astype(int))


def estimate_suite(traj: Trajectory, *, snapshots: int = 33) -> EstimateReport:
    """Left and right sides of the a-priori bounds along a complete trajectory.

    Records: sup-in-time second moment (≤ φ̄/c0), velocity L² (≤ 2φ̄), multiplier increment and
    multiplier L² (≤ 4c2²T(1 + φ̄/c0) + 4φ̄) and the time equicontinuity constant
    max W_2²(ρ_N(t_a), ρ_N(t_b)) / |t_b - t_a| (≤ 2φ̄).

    The time-interpolant gap is recorded against √(τNφ̄) as information only. Comparing one step
    with staying put bounds |X^{k+1} - X^k|² by 2τN(φ̄ - c0), which does not imply it.
    """
    if not traj.complete:
        raise InputError("estimate_suite needs a complete trajectory")
    p = traj.potential
    phi_bar = traj.phi_bar
    tau, n, T = traj.tau, traj.n, traj.T
    c0, c2 = p.c0, p.c2
    applies = traj.interaction is None and c0 > 0
    x = traj.positions()
    lam = traj.multiplier_values()

    if traj.steps:
        second_moment = float(np.max(np.mean(x[1:] ** 2, axis=1)))
        v = np.diff(x, axis=0) / tau
        velocity = tau / n * float(np.sum(v * v))
        inc = n * np.diff(lam[1:], axis=1)
        increments = tau / n * float(np.sum(inc * inc))
        multipliers = tau / n * float(np.sum(lam[1:] ** 2))
    else:
        second_moment = velocity = increments = multipliers = 0.0

    moment_bound = phi_bar / c0 if c0 > 0 else math.inf
    multiplier_bound = 4.0 * c2 * c2 * T * (1.0 + moment_bound) + 4.0 * phi_bar

    equicontinuity = 0.0
    idx = snapshot_indices(traj.steps, snapshots)
    for a, b in itertools.combinations(idx, 2):
        d = x[b] - x[a]
        equicontinuity = max(equicontinuity, float(d @ d) / n / ((b - a) * tau))

    records = [
        EstimateRecord("sup_second_moment", second_moment, moment_bound, applies),
        EstimateRecord("velocity_l2", velocity, 2.0 * phi_bar, applies),
        EstimateRecord("multiplier_increment_l2", increments, multiplier_bound, applies),
        EstimateRecord("multiplier_l2", multipliers, multiplier_bound, applies),
        EstimateRecord(
            "time_interpolant_gap", time_interpolant_gap(traj), time_interpolant_bound(traj), False
        ),
        EstimateRecord("time_equicontinuity", equicontinuity, 2.0 * phi_bar, applies),
    ]
    return EstimateReport(records=records, phi_bar=phi_bar)
