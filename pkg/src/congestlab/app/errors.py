# src/congestlab/app/errors.py
# Version: 1.0.0
# Changelog: 1.0.0 — one exception tree for the library. The CLI converts any CongestLabError into
#   an `❌ …` line plus remediation bullets and a nonzero exit code; library code never prints.
from __future__ import annotations

from typing import Any


class CongestLabError(Exception):
    """Base class for every error raised by congestlab."""


class ParameterError(CongestLabError, ValueError):
    """A numeric parameter is outside its admissible range (non-positive scale, bad p, ...)."""


class StepSizeError(ParameterError):
    """τ is too large for the strong-convexity guard of the minimizing-movement step."""

    def __init__(self, tau: float, c2_eff: float, guard: float):
        self.tau = tau
        self.c2_eff = c2_eff
        self.guard = guard
        super().__init__(
            f"tau={tau:g} violates the step-size guard: tau*c2={tau * c2_eff:g} > {guard:g} "
            f"(c2={c2_eff:g}); use tau <= {guard / c2_eff if c2_eff > 0 else float('inf'):g}"
        )


class InputError(CongestLabError, ValueError):
    """Malformed input data: a configuration outside K_N, a non-monotone quantile, a bad density."""


class ConfigError(CongestLabError):
    """Unresolvable or inconsistent experiment configuration."""


class ConvergenceError(CongestLabError):
    """The inner solver hit max_iter without reaching tol_kkt.

    `best_iterate` is the feasible iterate with the smallest KKT residual seen.
    """

    def __init__(self, message: str, *, best_iterate: Any, residual: float, iterations: int):
        self.best_iterate = best_iterate
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class IntegrationError(CongestLabError):
    """A step failed during integrate(); `partial` holds the trajectory up to the last good step."""

    def __init__(self, message: str, *, step: int, partial: Any):
        self.step = step
        self.partial = partial
        super().__init__(message)
