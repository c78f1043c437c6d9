# src/congestlab/app/harness/benchmarks.py
# Version: 1.3.0
# Changelog: 1.3.0 — multipliers checked against the stationary formula to lambda_match plus the
#   residual motion of the last step; uniqueness probe noise defaults to harness.guess_noise.
# Changelog: 1.2.0 — scaling probe: mean per-step wall time against N, log-log slope reported.
# Changelog: 1.1.0 — uniqueness probe compares the two pooling orders of the cone projection.
# Changelog: 1.0.0 — steady-state benchmark for φ = 1 + x² (lattice, multipliers, mean decay).
"""Benchmarks with known answers.

Steady state: for φ(x) = 1 + x² the only stationary configuration is the centered lattice
x_i = (i - (N+1)/2)/N, fully in contact, with λ_i = -(2/N) Σ_{j<=i} x_j. Summing the
Euler-Lagrange equation over i telescopes the multipliers away, so the mean position obeys
m_{k+1} = m_k / (1 + 2τ), i.e. decays like e^{-2t}.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..config import CONFIG
from ..errors import ConfigError
from ..jko import ParticleConfig, jko_step, project_to_cone
from ..trajectory import integrate
from .scenarios import ExperimentConfig

log = logging.getLogger(__name__)

MEAN_DECAY_RATE = -2.0
MEAN_DECAY_REL_TOL = 0.10
MEAN_FLOOR = 1e-9
PAV_TOL = 1e-12


def lattice(n: int) -> np.ndarray:
    return (np.arange(1, n + 1) - (n + 1) / 2.0) / n


def lattice_multipliers(x: np.ndarray) -> np.ndarray:
    """λ_1..λ_{N-1} of a stationary state for φ' = 2x."""
    return -2.0 / x.size * np.cumsum(x)[:-1]


def _is_unit_quadratic(cfg: ExperimentConfig) -> bool:
    p = cfg.potential
    return (
        p.kind == "quadratic"
        and p.center == 0.0
        and p.scale == 1.0
        and p.c0 is None
        and p.c2 is None
        and cfg.interaction.kind == "none"
    )


# ── steady state ──────────────────────────────────────────────────────────────
@dataclass
class SteadyStateReport:
    n: int
    tau: float
    T: float
    position_error: float
    position_bound: float
    lambda_min: float
    lambda_error: float
    lambda_match_tol: float
    lambda_tol: float
    mean_decay_exponent: float | None
    final_positions: list[float] = field(default_factory=list)
    final_multipliers: list[float] = field(default_factory=list)

    @property
    def mean_decay_ok(self) -> bool:
        if self.mean_decay_exponent is None:
            return True
        return abs(self.mean_decay_exponent - MEAN_DECAY_RATE) <= MEAN_DECAY_REL_TOL * abs(
            MEAN_DECAY_RATE
        )

    @property
    def passed(self) -> bool:
        return (
            self.position_error <= self.position_bound
            and self.lambda_min >= -self.lambda_tol
            and self.lambda_error <= self.lambda_match_tol
            and self.mean_decay_ok
        )

    def to_dict(self) -> dict[str, Any]:
        d = dict(self.__dict__)
        d["mean_decay_ok"] = self.mean_decay_ok
        d["pass"] = self.passed
        return d


def steady_state_benchmark(
    cfg: ExperimentConfig,
    n: int,
    *,
    tau: float | None = None,
    shift: float = 0.0,
    progress: bool = False,
) -> SteadyStateReport:
    """Run to T = (5/c2)·steady_margin (rounded up to a whole step) and compare with the lattice.

    `shift` translates the sampled X⁰; the mean-decay fit needs a nonzero initial mean and is
    skipped (reported as None) when the mean starts below the floor.

    The multipliers of the final step must match -(2/N) Σ_{j<=i} x_j up to
    `tolerances.lambda_match` plus the part of the telescoped sum still carried by the last
    step's velocity.

    Raises:
        ConfigError: the scenario is not φ = 1 + x² without interaction.
    """
    if not _is_unit_quadratic(cfg):
        raise ConfigError(
            "steady-state needs potential.kind=quadratic (center 0, scale 1) and no interaction.\n"
            "· Use --scenario quadratic"
        )
    p = cfg.build_potential()
    tau = tau or cfg.tau_list[0]
    steps = math.ceil(5.0 / p.c2 * cfg.steady_margin / tau - 1e-9)
    T = steps * tau
    X0 = ParticleConfig(cfg.initial_configuration(n).positions + shift)
    traj = integrate(X0, p, None, tau, T, config=cfg.solver, progress=progress)

    x = traj.states[-1].positions
    lam = traj.multipliers[-1].values
    target = lattice(n)
    bound = min(10.0 * (tau + math.exp(-2.0 * T)), max(10.0 * tau, 1e-3))
    # λ - λ_stationary = -(1/N) Σ_{j<=i} (x_j - x_j^{k-1})/τ on the last step
    motion = np.cumsum(x - traj.states[-2].positions)[:-1] / (n * tau)
    match_tol = cfg.tolerances.lambda_match + float(np.max(np.abs(motion), initial=0.0))

    means = traj.positions().mean(axis=1)
    keep = np.abs(means) > MEAN_FLOOR
    exponent = None
    if keep[0] and int(keep.sum()) >= 3:
        exponent = float(np.polyfit(traj.times[keep], np.log(np.abs(means[keep])), 1)[0])

    report = SteadyStateReport(
        n=n,
        tau=tau,
        T=T,
        position_error=float(np.max(np.abs(x - target))),
        position_bound=bound,
        lambda_min=float(lam.min()),
        lambda_error=float(np.max(np.abs(lam[1:-1] - lattice_multipliers(x)))) if n > 1 else 0.0,
        lambda_match_tol=match_tol,
        lambda_tol=cfg.tolerances.lambda_neg,
        mean_decay_exponent=exponent,
        final_positions=x.tolist(),
        final_multipliers=lam.tolist(),
    )
    log.info(
        "steady state N=%d tau=%g err=%.3g bound=%.3g pass=%s",
        n, tau, report.position_error, bound, report.passed,
    )
    return report


# ── uniqueness ────────────────────────────────────────────────────────────────
@dataclass
class UniquenessReport:
    n: int
    tau: float
    steps: int
    bitwise_equal: bool
    noise: float
    perturbed_difference: float
    perturbed_bound: float
    pav_order_difference: float

    @property
    def passed(self) -> bool:
        return (
            self.bitwise_equal
            and self.perturbed_difference <= self.perturbed_bound
            and self.pav_order_difference <= PAV_TOL
        )

    def to_dict(self) -> dict[str, Any]:
        d = dict(self.__dict__)
        d["pass"] = self.passed
        return d


def uniqueness_probe(
    cfg: ExperimentConfig,
    *,
    n: int | None = None,
    tau: float | None = None,
    noise: float | None = None,
    pav_trials: int = 50,
) -> UniquenessReport:
    """Same X⁰ three ways: twice as is (must be bitwise equal), once from perturbed inner starting
    points (final states within 10·tol_kkt·K). Also projects random vectors with both pooling
    orders."""
    noise = CONFIG.harness.guess_noise if noise is None else noise
    n = n or cfg.n_list[0]
    tau = tau or cfg.tau_list[0]
    p, w = cfg.build_potential(), cfg.build_kernel()
    X0 = cfg.initial_configuration(n)

    a = integrate(X0, p, w, tau, cfg.T, config=cfg.solver)
    b = integrate(X0, p, w, tau, cfg.T, config=cfg.solver)
    bitwise = bool(
        np.array_equal(a.positions(), b.positions())
        and np.array_equal(a.multiplier_values(), b.multiplier_values())
    )

    rng = np.random.default_rng(cfg.seed)

    def perturbed(k: int, x: np.ndarray) -> np.ndarray:
        return x + noise * rng.standard_normal(x.size)

    c = integrate(X0, p, w, tau, cfg.T, config=cfg.solver, guess=perturbed)
    diff = float(np.linalg.norm(a.states[-1].positions - c.states[-1].positions))

    pav = 0.0
    for _ in range(pav_trials):
        y = rng.normal(scale=1.0 / n, size=n) + np.sort(rng.uniform(-1.0, 1.0, size=n)) * 0.25
        pav = max(
            pav,
            float(np.max(np.abs(project_to_cone(y) - project_to_cone(y, order="reverse")))),
        )

    return UniquenessReport(
        n=n,
        tau=tau,
        steps=a.steps,
        bitwise_equal=bitwise,
        noise=noise,
        perturbed_difference=diff,
        perturbed_bound=10.0 * cfg.solver.tol_kkt(n) * a.steps,
        pav_order_difference=pav,
    )


# ── scaling ───────────────────────────────────────────────────────────────────
@dataclass
class ScalingReport:
    ns: list[int]
    mean_step_time_s: list[float]
    slope: float

    @property
    def subquadratic(self) -> bool:
        return self.slope < 2.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "ns": self.ns,
            "mean_step_time_s": self.mean_step_time_s,
            "slope": self.slope,
            "subquadratic": self.subquadratic,
        }


def scaling_probe(
    cfg: ExperimentConfig,
    ns: list[int],
    *,
    steps: int = 5,
    tau: float | None = None,
) -> ScalingReport:
    """Mean wall time of `steps` consecutive steps per N, and the log-log slope against N."""
    tau = tau or cfg.tau_list[0]
    p, w = cfg.build_potential(), cfg.build_kernel()
    times: list[float] = []
    for n in ns:
        X = cfg.initial_configuration(n)
        t0 = time.perf_counter()
        for _ in range(steps):
            X, _, _ = jko_step(X, p, w, tau, config=cfg.solver)
        times.append((time.perf_counter() - t0) / steps)
    slope = float(np.polyfit(np.log(ns), np.log(times), 1)[0]) if len(ns) >= 2 else 0.0
    log.info("scaling probe N=%s slope=%.3f", ns, slope)
    return ScalingReport(ns=list(ns), mean_step_time_s=times, slope=slope)
