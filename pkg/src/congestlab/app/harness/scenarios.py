# src/congestlab/app/harness/scenarios.py
# Version: 1.1.0
# Changelog: 1.1.0 — `rho0: random` draws a seeded random block density; density stems resolve
#   under data/densities/ with the same hard-error policy as scenario stems.
# Changelog: 1.0.0 — ExperimentConfig (pydantic) loaded from benchmarks/scenarios/<stem>.yaml,
#   step-size guard validated for every tau at load time.
"""Experiment configuration and the objects built from it.

A scenario file is yaml with the keys of ExperimentConfig. Anything omitted falls back to the
process defaults in `config.CONFIG`. An explicitly named scenario or density that does not exist
is a hard error (ConfigError with remediation lines), never a silent fallback.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config import (
    CONFIG,
    InteractionConfig,
    PotentialConfig,
    SolverConfig,
    ToleranceConfig,
)
from ..errors import ConfigError
from ..jko import ParticleConfig, check_step_size
from ..potential import InteractionKernel, Potential, kernel_from_config, potential_from_config
from ..sampling import (
    MacroDensity,
    density_from_mapping,
    parse_uniform_spec,
    quantile_of_density,
    random_density,
    sample_particles,
)
from ..trajectory import step_count
from ..utils.repo_root import densities_dir, find_repo_root, scenarios_dir

RANDOM_DENSITY = "random"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str = "default"
    # uniform:<a>,<b> | random | a stem under data/densities/ | a yaml path | an inline mapping
    rho0: str | dict[str, Any] = "uniform:-1,1"
    potential: PotentialConfig = Field(default_factory=lambda: CONFIG.potential.model_copy())
    interaction: InteractionConfig = Field(
        default_factory=lambda: CONFIG.interaction.model_copy()
    )
    n_list: list[int] = Field(default_factory=lambda: [32])
    tau_list: list[float] = Field(default_factory=lambda: [1e-2])
    T: float = Field(default=1.0, ge=0.0)
    tolerances: ToleranceConfig = Field(default_factory=lambda: CONFIG.tolerances.model_copy())
    solver: SolverConfig = Field(default_factory=lambda: CONFIG.solver.model_copy())
    output_dir: str = "runs"
    seed: int = Field(default_factory=lambda: CONFIG.harness.seed)
    workers: int = Field(default_factory=lambda: CONFIG.harness.workers, ge=1)
    snapshots: int = Field(default_factory=lambda: CONFIG.harness.snapshots, ge=2)
    steady_margin: float = Field(default_factory=lambda: CONFIG.harness.steady_margin, gt=0.0)

    @field_validator("n_list")
    @classmethod
    def _check_n(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("n_list must not be empty")
        if any(n < 2 for n in v):
            raise ValueError(f"every N must be >= 2, got {v}")
        return v

    @field_validator("tau_list")
    @classmethod
    def _check_tau(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("tau_list must not be empty")
        if any(not t > 0 for t in v):
            raise ValueError(f"every tau must be > 0, got {v}")
        return v

    @model_validator(mode="after")
    def _check_steps(self) -> ExperimentConfig:
        p = potential_from_config(self.potential)
        w = kernel_from_config(self.interaction)
        for tau in self.tau_list:
            check_step_size(p, w, tau, self.solver.tau_guard)
            step_count(tau, self.T)
        return self

    # ── builders ──
    def build_potential(self) -> Potential:
        return potential_from_config(self.potential)

    def build_kernel(self) -> InteractionKernel | None:
        return kernel_from_config(self.interaction)

    def build_density(self) -> MacroDensity:
        return resolve_density(self.rho0, seed=self.seed)

    def initial_configuration(self, n: int) -> ParticleConfig:
        return sample_particles(quantile_of_density(self.build_density()), n)

    def with_overrides(self, **changes: Any) -> ExperimentConfig:
        """Copy with fields replaced, re-validated."""
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return _validated(data, f"scenario {self.scenario}")


def _rel(p: Path) -> str:
    try:
        return str(p.relative_to(find_repo_root()))
    except ValueError:
        return str(p)


def _validated(data: dict[str, Any], where: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        lines = [f"{'.'.join(str(x) for x in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()]
        raise ConfigError(f"Invalid {where}:\n" + "\n".join(f"· {s}" for s in lines)) from e


def list_scenarios() -> list[str]:
    d = scenarios_dir()
    return sorted(p.stem for p in d.glob("*.yaml")) if d.exists() else []


def resolve_scenario_file(stem_or_path: str) -> Path:
    """An existing path wins; otherwise benchmarks/scenarios/<stem>.yaml. ConfigError if absent."""
    p = Path(stem_or_path).expanduser()
    if p.suffix in {".yaml", ".yml"} or p.exists():
        if not p.is_absolute() and not p.exists():
            p = find_repo_root() / p
    else:
        p = scenarios_dir() / f"{stem_or_path}.yaml"
    if not p.exists():
        raise ConfigError(
            f"Scenario not found: {_rel(p)}.\n"
            f"· Available scenarios: {', '.join(list_scenarios()) or '(none)'}\n"
            f"· Or pass --config <path-to.yaml> for a custom scenario."
        )
    return p


def load_experiment(stem_or_path: str, **overrides: Any) -> ExperimentConfig:
    """Parse and validate a scenario file; keyword overrides replace top-level keys."""
    p = resolve_scenario_file(stem_or_path)
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed scenario YAML: {_rel(p)} — {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Scenario {_rel(p)} must be a mapping of keys.")
    data.setdefault("scenario", p.stem)
    table = (data.get("potential") or {}).get("table_path")
    if table and not Path(table).is_absolute():
        data["potential"]["table_path"] = str(p.parent / table)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return _validated(data, f"scenario {_rel(p)}")


# ── densities ─────────────────────────────────────────────────────────────────
def list_densities() -> list[str]:
    d = densities_dir()
    return sorted(p.stem for p in d.glob("*.yaml")) if d.exists() else []


def resolve_density(spec: str | dict[str, Any], *, seed: int = 0) -> MacroDensity:
    """Density from an inline mapping, `uniform:<a>,<b>`, `random`, a stem or a yaml path."""
    if isinstance(spec, dict):
        return density_from_mapping(spec)
    uniform = parse_uniform_spec(spec)
    if uniform is not None:
        return uniform
    if spec == RANDOM_DENSITY:
        h = CONFIG.harness
        return random_density(
            np.random.default_rng(seed), max_blocks=h.max_blocks, min_height=h.min_height
        )
    p = Path(spec).expanduser()
    if p.suffix not in {".yaml", ".yml"}:
        p = densities_dir() / f"{spec}.yaml"
    if not p.exists():
        raise ConfigError(
            f"Density not found: {_rel(p)}.\n"
            f"· Available densities: {', '.join(list_densities()) or '(none)'}\n"
            f"· Or use uniform:<a>,<b>, random, or a path to a yaml with breakpoints/values."
        )
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed density YAML: {_rel(p)} — {e}") from e
    return density_from_mapping(data)
