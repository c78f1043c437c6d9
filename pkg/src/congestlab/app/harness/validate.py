# src/congestlab/app/harness/validate.py
# Version: 1.1.0
# Changelog: 1.1.0 — metric suite: symmetry and triangle inequality of W_p on random quantiles.
# Changelog: 1.0.0 — property suites behind `congestlab validate`: step constraints and
#   dissipation on randomized scenarios, brute-force oracles, closed-form Wasserstein oracle,
#   sampling error, a-priori estimates, gap growth, steady state, weak-form order, convergence.
"""Property suites. Each returns a SuiteResult; `run_validation` runs them all.

Sizes come from ValidationConfig; `quick=True` shrinks every suite for a smoke run.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..config import CONFIG, ToleranceConfig, ValidationConfig
from ..eulerian import weak_form_residual
from ..jko import ParticleConfig, jko_step, project_to_cone
from ..metrics import (
    emp_vs_hist_closed_form,
    empirical_quantile,
    estimate_suite,
    histogram_quantile,
    wasserstein_p,
)
from ..oracles import active_set_step, brute_force_projection
from ..potential import (
    InteractionKernel,
    Potential,
    builtin_double_well,
    builtin_quadratic,
    effective_c2,
    gaussian_bump_kernel,
    quadratic_kernel,
)
from ..sampling import (
    quantile_of_density,
    random_density,
    sample_particles,
    sampling_bound,
    sampling_error_bound_check,
)
from ..trajectory import Trajectory, gap_growth_ratios, integrate
from .benchmarks import lattice, steady_state_benchmark
from .scenarios import ExperimentConfig, list_densities, load_experiment, resolve_density
from .sweeps import default_family, sweep_n, sweep_tau

log = logging.getLogger(__name__)

BENCHMARK_SCENARIOS = ("quadratic", "double_well")
EQUILIBRIUM_RESIDUAL_TOL = 1e-8
ORACLE_STEP_TOL = 1e-8


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "wall_time_s": round(self.wall_time_s, 3),
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    suites: list[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def failures(self) -> list[str]:
        return [s.name for s in self.suites if not s.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "pass": self.passed,
            "failures": self.failures(),
            "suites": [s.to_dict() for s in self.suites],
        }


def _timed(name: str, fn: Callable[[], tuple[bool, dict[str, Any]]]) -> SuiteResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    res = SuiteResult(name, passed, detail, time.perf_counter() - t0)
    log.info("suite %s pass=%s (%.1fs)", name, passed, res.wall_time_s)
    return res


# ── random instances ──────────────────────────────────────────────────────────
def random_potential(rng: np.random.Generator) -> Potential:
    if rng.random() < 0.6:
        return builtin_quadratic(float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 2.0)))
    return builtin_double_well(
        float(rng.uniform(-0.5, 0.5)),
        float(rng.uniform(0.5, 1.5)),
        float(rng.uniform(0.2, 1.5)),
        float(rng.uniform(0.3, 0.8)),
    )


def random_kernel(rng: np.random.Generator) -> InteractionKernel | None:
    u = rng.random()
    if u < 0.6:
        return None
    if u < 0.8:
        return quadratic_kernel(float(rng.uniform(-0.5, 1.0)))
    return gaussian_bump_kernel(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0.3, 1.0)))


def random_tau(rng: np.random.Generator, p: Potential, w: InteractionKernel | None, guard: float) -> float:
    return float(rng.uniform(0.05, 0.95)) * guard / effective_c2(p, w)


def random_configuration(rng: np.random.Generator, n: int) -> ParticleConfig:
    """Gaps 1/N + Exp(·) with roughly half the gaps exactly in contact."""
    extra = rng.exponential(0.5 / n, size=n - 1) * (rng.random(n - 1) < 0.5)
    x = float(rng.uniform(-1.0, 0.0)) + np.concatenate([[0.0], np.cumsum(1.0 / n + extra)])
    return ParticleConfig.from_positions(x)


# ── suites ────────────────────────────────────────────────────────────────────
def kkt_suite(
    scenarios: int, *, seed: int = 0, steps: int = 5, tol: ToleranceConfig | None = None
) -> SuiteResult:
    """Constraint, sign, slackness, consistency and dissipation on randomized scenarios."""
    tol = tol or CONFIG.tolerances
    guard = CONFIG.solver.tau_guard

    def run() -> tuple[bool, dict[str, Any]]:
        rng = np.random.default_rng(seed)
        worst = {"gap": math.inf, "lambda_min": math.inf, "slackness": 0.0, "consistency": 0.0}
        dissipation_slack = math.inf
        for _ in range(scenarios):
            rho0 = random_density(rng)
            n = int(rng.integers(2, 33))
            p, w = random_potential(rng), random_kernel(rng)
            tau = random_tau(rng, p, w, guard)
            X = sample_particles(quantile_of_density(rho0), n)
            for _ in range(steps):
                X, lam, rep = jko_step(X, p, w, tau)
                worst["gap"] = min(worst["gap"], float(np.min(X.gaps - 1.0 / n)))
                worst["lambda_min"] = min(worst["lambda_min"], lam.min_value())
                worst["slackness"] = max(worst["slackness"], rep.slackness_residual)
                worst["consistency"] = max(worst["consistency"], rep.consistency_residual)
                dissipation_slack = min(dissipation_slack, rep.dissipation_slack)
        ok = (
            worst["gap"] >= -tol.gap
            and worst["lambda_min"] >= -tol.lambda_neg
            and worst["slackness"] <= tol.slackness
            and worst["consistency"] <= tol.consistency
            and dissipation_slack >= -tol.dissipation
        )
        return ok, {"scenarios": scenarios, "steps": steps, **worst, "dissipation_slack": dissipation_slack}

    return _timed("kkt_constraints_dissipation", run)


def oracle_suite(instances: int, *, seed: int = 0, sizes: tuple[int, ...] = (2, 3, 4, 5, 6)) -> SuiteResult:
    """jko_step against contact-set enumeration; project_to_cone against brute force."""

    def run() -> tuple[bool, dict[str, Any]]:
        rng = np.random.default_rng(seed)
        step_err = proj_err = 0.0
        for _ in range(instances):
            n = int(rng.choice(sizes))
            p, w = random_potential(rng), random_kernel(rng)
            tau = random_tau(rng, p, w, CONFIG.solver.tau_guard)
            Xk = random_configuration(rng, n)
            x1, _, _ = jko_step(Xk, p, w, tau)
            ref = active_set_step(Xk, p, w, tau)
            step_err = max(step_err, float(np.max(np.abs(x1.positions - ref.positions))))
            y = Xk.positions + rng.normal(scale=1.0 / n, size=n)
            proj_err = max(proj_err, float(np.max(np.abs(project_to_cone(y) - brute_force_projection(y)))))
        ok = step_err <= ORACLE_STEP_TOL and proj_err <= CONFIG.tolerances.oracle
        return ok, {"instances": instances, "step_max_error": step_err, "projection_max_error": proj_err}

    return _timed("brute_force_oracles", run)


def closed_form_suite(configs: int, *, seed: int = 0, tol: float | None = None) -> SuiteResult:
    """W_p(ρ_N, ρ̃_N): closed form vs quantile quadrature (p = 1, 2), and W_1 = (x_N - x_0)/(2N)."""
    tol = CONFIG.tolerances.oracle if tol is None else tol

    def run() -> tuple[bool, dict[str, Any]]:
        rng = np.random.default_rng(seed)
        err = 0.0
        for _ in range(configs):
            X = random_configuration(rng, int(rng.integers(2, 65)))
            qe, qh = empirical_quantile(X), histogram_quantile(X)
            for p in (1, 2):
                err = max(err, abs(emp_vs_hist_closed_form(X, p) - wasserstein_p(qe, qh, p)))
            ext = X.extended()
            err = max(err, abs(emp_vs_hist_closed_form(X, 1) - (ext[-1] - ext[0]) / (2 * X.n)))
        return err <= tol, {"configs": configs, "max_error": err}

    return _timed("closed_form_wasserstein", run)


def metric_suite(triples: int, *, seed: int = 0, tol: float | None = None) -> SuiteResult:
    """W_p (p = 1, 2) on random empirical / histogram quantiles: exact symmetry and the triangle
    inequality up to `tol`."""
    tol = CONFIG.tolerances.oracle if tol is None else tol

    def quantile(rng: np.random.Generator):
        X = random_configuration(rng, int(rng.integers(2, 33)))
        return empirical_quantile(X) if rng.random() < 0.5 else histogram_quantile(X)

    def run() -> tuple[bool, dict[str, Any]]:
        rng = np.random.default_rng(seed)
        asymmetry = 0.0
        excess = -math.inf
        for _ in range(triples):
            a, b, c = quantile(rng), quantile(rng), quantile(rng)
            for p in (1, 2):
                ab = wasserstein_p(a, b, p)
                asymmetry = max(asymmetry, abs(ab - wasserstein_p(b, a, p)))
                excess = max(excess, wasserstein_p(a, c, p) - ab - wasserstein_p(b, c, p))
        return asymmetry == 0.0 and excess <= tol, {
            "triples": triples,
            "max_asymmetry": asymmetry,
            "max_triangle_excess": excess,
        }

    return _timed("wasserstein_metric", run)


def sampling_suite(sizes: list[int], *, seed: int = 0, random_count: int = 20) -> SuiteResult:
    """L¹ sampling error against (ξ_R - ξ_L)/N on the bundled densities and random ones."""

    def run() -> tuple[bool, dict[str, Any]]:
        rng = np.random.default_rng(seed)
        densities = {stem: resolve_density(stem) for stem in list_densities()}
        densities.update({f"random{j}": random_density(rng) for j in range(random_count)})
        worst = -math.inf
        for rho0 in densities.values():
            q = quantile_of_density(rho0)
            for n in sizes:
                err = sampling_error_bound_check(q, sample_particles(q, n))
                worst = max(worst, err - sampling_bound(rho0, n))
        return worst <= 1e-12, {"densities": len(densities), "sizes": sizes, "worst_margin": worst}

    return _timed("sampling_error", run)


def _benchmark_trajectories(cfgs: list[ExperimentConfig], ns: list[int]) -> list[Trajectory]:
    out = []
    for cfg in cfgs:
        for n in ns:
            T = min(cfg.T, 2.0)
            out.append(
                integrate(
                    cfg.initial_configuration(n), cfg.build_potential(), cfg.build_kernel(),
                    cfg.tau_list[0], T, config=cfg.solver,
                )
            )
    return out


def estimates_suite(cfgs: list[ExperimentConfig], ns: list[int]) -> SuiteResult:
    def run() -> tuple[bool, dict[str, Any]]:
        reports = []
        for cfg, traj in zip(
            [c for c in cfgs for _ in ns], _benchmark_trajectories(cfgs, ns), strict=True
        ):
            rep = estimate_suite(traj, snapshots=cfg.snapshots)
            reports.append({"scenario": cfg.scenario, "N": traj.n, **rep.to_dict()})
        return all(r["passed"] for r in reports), {"runs": reports}

    return _timed("a_priori_estimates", run)


def gap_growth_suite(cfgs: list[ExperimentConfig], n: int, *, tau: float = 1e-3, T: float = 1.0) -> SuiteResult:
    def run() -> tuple[bool, dict[str, Any]]:
        worst: dict[str, float] = {}
        for cfg in cfgs:
            traj = integrate(
                cfg.initial_configuration(n), cfg.build_potential(), cfg.build_kernel(), tau, T,
                config=cfg.solver,
            )
            worst[cfg.scenario] = float(np.max(gap_growth_ratios(traj)))
        limit = CONFIG.tolerances.gap_growth
        return all(v <= limit for v in worst.values()), {"limit": limit, "max_ratio": worst}

    return _timed("gap_growth", run)


def steady_state_suite(cfg: ExperimentConfig, sizes: list[int]) -> SuiteResult:
    def run() -> tuple[bool, dict[str, Any]]:
        reports = [steady_state_benchmark(cfg, n) for n in sizes]
        return all(r.passed for r in reports), {"runs": [r.to_dict() for r in reports]}

    return _timed("steady_state", run)


def weak_form_suite(cfg: ExperimentConfig) -> SuiteResult:
    """O(τ) weak-form residual under halving, and a vanishing residual at equilibrium."""

    def run() -> tuple[bool, dict[str, Any]]:
        sweep = sweep_tau(cfg)
        n = cfg.n_list[0]
        X = ParticleConfig(lattice(n))
        p = cfg.build_potential()
        tau = cfg.tau_list[0]
        traj = integrate(X, p, None, tau, tau, config=cfg.solver)
        eq = max(weak_form_residual(traj, psi, 0) for psi in default_family(traj))
        checks = [c for c in sweep.checks if c.name.startswith("weak_residual")]
        ok = all(c.passed for c in checks if c.applies) and eq <= EQUILIBRIUM_RESIDUAL_TOL
        return ok, {
            "checks": [c.to_dict() for c in checks],
            "rates": sweep.rates,
            "equilibrium_residual": eq,
        }

    return _timed("weak_form_order", run)


def convergence_suite(cfgs: list[ExperimentConfig]) -> SuiteResult:
    def run() -> tuple[bool, dict[str, Any]]:
        results = {cfg.scenario: sweep_n(cfg) for cfg in cfgs}
        return all(r.passed for r in results.values()), {
            name: {"pass": r.passed, "failures": r.failures(), "rates": r.rates}
            for name, r in results.items()
        }

    return _timed("convergence_in_n", run)


def run_validation(
    vcfg: ValidationConfig | None = None,
    *,
    scenarios: tuple[str, ...] = BENCHMARK_SCENARIOS,
    quick: bool = False,
    seed: int | None = None,
) -> ValidationReport:
    """All property suites. `quick` cuts every size down to a smoke run."""
    v = vcfg or CONFIG.validation
    seed = CONFIG.harness.seed if seed is None else seed
    cfgs = [load_experiment(s) for s in scenarios]
    if quick:
        cfgs = [
            c.with_overrides(n_list=c.n_list[:3], tau_list=c.tau_list[:3], T=min(c.T, 0.5))
            for c in cfgs
        ]
    kkt = 20 if quick else v.kkt_scenarios
    oracle = 10 if quick else v.oracle_instances
    closed = 100 if quick else v.closed_form_configs
    triples = 50 if quick else v.metric_triples
    est_ns = [n for n in cfgs[0].n_list if n <= 256][:2 if quick else None]

    report = ValidationReport()
    report.suites.append(kkt_suite(kkt, seed=seed))
    report.suites.append(oracle_suite(oracle, seed=seed))
    report.suites.append(closed_form_suite(closed, seed=seed))
    report.suites.append(metric_suite(triples, seed=seed))
    report.suites.append(sampling_suite(v.sampling_sizes, seed=seed))
    report.suites.append(estimates_suite(cfgs, est_ns))
    report.suites.append(
        gap_growth_suite(cfgs, min(cfgs[0].n_list), T=0.25 if quick else 1.0)
    )
    quadratic = next((c for c in cfgs if c.scenario == "quadratic"), None)
    if quadratic is not None:
        sizes = [n for n in v.steady_sizes if n <= 8] if quick else v.steady_sizes
        report.suites.append(steady_state_suite(quadratic, sizes))
        report.suites.append(weak_form_suite(quadratic))
    report.suites.append(convergence_suite(cfgs))
    return report
