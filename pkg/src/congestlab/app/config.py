# src/congestlab/app/config.py
# Version: 1.3.0
# Changelog: 1.3.0 — ToleranceConfig.lambda_match (steady-state multiplier agreement) and
#   ValidationConfig.metric_triples. Env CONGESTLAB_LAMBDA_MATCH and
#   CONGESTLAB_VALIDATE_METRIC_TRIPLES.
# Changelog: 1.2.0 — ValidationConfig: sizes of the property suites run by `congestlab validate`
#   (randomized scenario counts, oracle instances). Env CONGESTLAB_VALIDATE_*.
# Changelog: 1.1.0 — InteractionConfig (optional pairwise kernel W). kind "none" keeps the
#   objective identical to 1.0.0.
# Changelog: 1.0.0 — solver / tolerance / potential / harness settings with CONGESTLAB_* env
#   overrides. Scenario files (harness/scenarios.py) start from CONFIG and override per run.
from __future__ import annotations

import os
from typing import Literal

from pydantic import BaseModel, Field


def _env_bool(name: str, default: bool) -> bool:
    v = os.getenv(name)
    if v is None:
        return default
    return v.strip().lower() in {"1", "true", "yes", "y", "on"}


def _env_int(name: str, default: int) -> int:
    v = os.getenv(name)
    if v is None:
        return default
    return int(v)


def _env_float(name: str, default: float) -> float:
    v = os.getenv(name)
    if v is None:
        return default
    return float(v)


def _env_str(name: str, default: str) -> str:
    v = os.getenv(name)
    return default if v is None else v


class SolverConfig(BaseModel):
    # Stopping rule of the inner solver: natural-map KKT residual <= tol_kkt_per_particle * N,
    # at most max_iter_per_particle * N + max_iter_base projected-gradient iterations.
    tol_kkt_per_particle: float = Field(default=1e-10, gt=0.0)
    max_iter_per_particle: int = Field(default=10, ge=1)
    max_iter_base: int = Field(default=200, ge=1)

    # tau * c2_eff must not exceed tau_guard. Strong convexity needs < 1; 0.5 leaves margin.
    tau_guard: float = Field(default=0.5, gt=0.0, lt=1.0)

    # gaps within active_tol of 1/N are treated as contacts
    active_tol: float = Field(default=1e-12, ge=0.0)

    # |lambda_N| before forcing it to zero; above this the step is flagged inexact
    tol_consistency: float = Field(default=1e-8, gt=0.0)

    # Newton polish kicks in once the active set has been unchanged this many iterations.
    polish_after_stable: int = Field(default=3, ge=1)
    newton_max: int = Field(default=30, ge=1)
    backtrack_max: int = Field(default=40, ge=1)

    def tol_kkt(self, n: int) -> float:
        return self.tol_kkt_per_particle * n

    def max_iter(self, n: int) -> int:
        return self.max_iter_per_particle * n + self.max_iter_base


class ToleranceConfig(BaseModel):
    gap: float = Field(default=1e-12, ge=0.0)
    lambda_neg: float = Field(default=1e-9, ge=0.0)
    # steady state: |lambda_i + (2/N) sum_{j<=i} x_j| beyond the residual motion of the last step
    lambda_match: float = Field(default=1e-8, ge=0.0)
    slackness: float = Field(default=1e-8, ge=0.0)
    consistency: float = Field(default=1e-8, ge=0.0)
    dissipation: float = Field(default=1e-10, ge=0.0)
    oracle: float = Field(default=1e-10, ge=0.0)
    # max_i omega_i(t) / (omega_i(0) e^{c2 t}) must stay below this
    gap_growth: float = Field(default=1.05, ge=1.0)


class PotentialConfig(BaseModel):
    kind: Literal["quadratic", "double_well_confined", "custom-table", "constant"] = "quadratic"
    center: float = 0.0
    scale: float = Field(default=1.0, gt=0.0)

    # double_well_confined: scale*(1+(x-c)^2) + bump_height*exp(-(x-c)^2/(2 bump_width^2))
    bump_height: float = Field(default=1.0, ge=0.0)
    bump_width: float = Field(default=0.5, gt=0.0)

    # custom-table: spline through (table_xs, table_values), quadratic tails of this curvature
    table_path: str | None = None
    table_xs: list[float] | None = None
    table_values: list[float] | None = None
    tail_curvature: float = Field(default=2.0, gt=0.0)

    # constant: phi == level (pure movement); accepted only with strict_phi off
    level: float = 1.0

    # Declared constants override the built-in derivation when set.
    c0: float | None = Field(default=None, ge=0.0)
    c2: float | None = Field(default=None, ge=0.0)

    strict_phi: bool = True
    grid_min: float = -10.0
    grid_max: float = 10.0
    grid_points: int = Field(default=2001, ge=3)


class InteractionConfig(BaseModel):
    kind: Literal["none", "quadratic", "gaussian-bump"] = "none"
    strength: float = 1.0
    width: float = Field(default=0.5, gt=0.0)


class HarnessConfig(BaseModel):
    workers: int = Field(default=1, ge=1)
    snapshots: int = Field(default=33, ge=2)
    seed: int = 0
    # randomized rho0: 1..max_blocks blocks, heights in [min_height, 1]
    max_blocks: int = Field(default=5, ge=1)
    min_height: float = Field(default=0.25, gt=0.0, le=1.0)
    # steady-state benchmark runs to T = 5/c2 * steady_margin
    steady_margin: float = Field(default=2.0, gt=0.0)
    # amplitude of the inner-solver starting-point perturbation in the uniqueness probe
    guess_noise: float = Field(default=1e-3, ge=0.0)


class ValidationConfig(BaseModel):
    kkt_scenarios: int = Field(default=200, ge=1)
    oracle_instances: int = Field(default=100, ge=1)
    closed_form_configs: int = Field(default=1000, ge=1)
    metric_triples: int = Field(default=200, ge=1)
    sampling_sizes: list[int] = Field(default_factory=lambda: [4, 16, 64, 256])
    steady_sizes: list[int] = Field(default_factory=lambda: [2, 3, 64])


class AppConfig(BaseModel):
    solver: SolverConfig = Field(default_factory=SolverConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    interaction: InteractionConfig = Field(default_factory=InteractionConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)
    validation: ValidationConfig = Field(default_factory=ValidationConfig)
    log_level: str = Field(default="WARNING")


def load_config_from_env() -> AppConfig:
    cfg = AppConfig()

    # Solver
    cfg.solver.tol_kkt_per_particle = _env_float(
        "CONGESTLAB_TOL_KKT_PER_PARTICLE", cfg.solver.tol_kkt_per_particle
    )
    cfg.solver.max_iter_base = _env_int("CONGESTLAB_MAX_ITER_BASE", cfg.solver.max_iter_base)
    cfg.solver.max_iter_per_particle = _env_int(
        "CONGESTLAB_MAX_ITER_PER_PARTICLE", cfg.solver.max_iter_per_particle
    )
    cfg.solver.tau_guard = _env_float("CONGESTLAB_TAU_GUARD", cfg.solver.tau_guard)
    cfg.solver.active_tol = _env_float("CONGESTLAB_ACTIVE_TOL", cfg.solver.active_tol)
    cfg.solver.tol_consistency = _env_float(
        "CONGESTLAB_TOL_CONSISTENCY", cfg.solver.tol_consistency
    )

    # Tolerances
    cfg.tolerances.lambda_match = _env_float(
        "CONGESTLAB_LAMBDA_MATCH", cfg.tolerances.lambda_match
    )

    # Potential
    cfg.potential.strict_phi = _env_bool("CONGESTLAB_STRICT_PHI", cfg.potential.strict_phi)
    cfg.potential.grid_points = _env_int("CONGESTLAB_PHI_GRID_POINTS", cfg.potential.grid_points)

    # Harness
    cfg.harness.workers = _env_int("CONGESTLAB_WORKERS", cfg.harness.workers)
    cfg.harness.seed = _env_int("CONGESTLAB_SEED", cfg.harness.seed)
    cfg.harness.snapshots = _env_int("CONGESTLAB_SNAPSHOTS", cfg.harness.snapshots)

    # Validation suite sizes
    cfg.validation.kkt_scenarios = _env_int(
        "CONGESTLAB_VALIDATE_KKT_SCENARIOS", cfg.validation.kkt_scenarios
    )
    cfg.validation.oracle_instances = _env_int(
        "CONGESTLAB_VALIDATE_ORACLE_INSTANCES", cfg.validation.oracle_instances
    )
    cfg.validation.closed_form_configs = _env_int(
        "CONGESTLAB_VALIDATE_CLOSED_FORM_CONFIGS", cfg.validation.closed_form_configs
    )
    cfg.validation.metric_triples = _env_int(
        "CONGESTLAB_VALIDATE_METRIC_TRIPLES", cfg.validation.metric_triples
    )

    cfg.log_level = _env_str("CONGESTLAB_LOG_LEVEL", cfg.log_level).upper()

    return cfg


# Global config instance
CONFIG = load_config_from_env()
