# src/congestlab/app/jko.py
# Version: 1.3.0
# Changelog: 1.3.0 — `initial_guess` for the inner solver and the reverse pooling order of the cone
#   projection (both used by the uniqueness probe).
# Changelog: 1.2.0 — interaction kernels enter the objective, the Newton polish and the multiplier
#   telescoping; the step-size guard uses c2(φ) + 2·c2(W).
# Changelog: 1.1.0 — final Newton polish on the converged active set so the telescoped multipliers
#   reach machine precision.
# Changelog: 1.0.0 — one minimizing-movement step: projected gradient in shifted isotonic variables,
#   active-set Newton polish, multipliers by telescoping, slackness and dissipation diagnostics.
"""One minimizing-movement step under the chain constraint x_{i+1} - x_i >= 1/N.

The step minimizes

    F(X) = (1/N) Σ φ(x_i) + |X - X^k|² / (2Nτ) + (1/(2N²)) Σ_{i,j} W(x_i - x_j)

over K_N. Internally the solver works with G = N·F, whose gradient is the per-particle force
φ'(x_i) + (x_i - x_i^k)/τ + (1/N) Σ_j W'(x_i - x_j).

Projection onto K_N is exact: with y_i = x_i - i/N the cone becomes {y_1 <= ... <= y_N}, and the
Euclidean projection onto it is isotonic regression (pool adjacent violators).

Multipliers are not taken from the solver. They are rebuilt from the Euler-Lagrange equation by
telescoping from λ_0 = 0; the leftover λ_N measures how exact the inner solve was.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any

import numpy as np
from sklearn.isotonic import isotonic_regression

from .config import CONFIG, SolverConfig
from .errors import ConvergenceError, InputError, ParameterError, StepSizeError
from .potential import (
    InteractionKernel,
    Potential,
    effective_c2,
    interaction_energy,
    interaction_force,
    interaction_hessian,
    total_energy,
)

log = logging.getLogger(__name__)

# Membership tolerance of K_N.
GAP_TOL = 1e-12
# Dissipation slack: energy_after + movement <= energy_before + DISSIPATION_TOL.
DISSIPATION_TOL = 1e-10

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ParticleConfig:
    """Sorted positions x_1..x_N; admissible when every gap is at least 1/N (2r = 1/N)."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.positions, dtype=float).reshape(-1)
        if x.size == 0:
            raise InputError("a configuration needs at least one particle")
        if not np.all(np.isfinite(x)):
            raise InputError("particle positions must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @classmethod
    def from_positions(cls, x, *, tol: float = GAP_TOL) -> ParticleConfig:
        """Build a configuration and require membership in K_N.

        Raises:
            InputError: some gap is below 1/N - tol.
        """
        cfg = cls(np.asarray(x, dtype=float))
        if not cfg.in_cone(tol):
            worst = int(np.argmin(cfg.gaps)) + 1
            raise InputError(
                f"configuration is not in K_N: gap {worst} is {cfg.gaps[worst - 1]:.6g} "
                f"< 1/N = {1.0 / cfg.n:.6g}"
            )
        return cfg

    @property
    def n(self) -> int:
        return int(self.positions.size)

    def __len__(self) -> int:
        return self.n

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.positions)

    def in_cone(self, tol: float = GAP_TOL) -> bool:
        return bool(np.all(self.gaps >= 1.0 / self.n - tol))

    def extended(self) -> np.ndarray:
        """x_0..x_N with the ghost particle x_0 = x_1 - 2/N."""
        return np.concatenate([[self.positions[0] - 2.0 / self.n], self.positions])

    def to_list(self) -> list[float]:
        return self.positions.tolist()


@dataclass(frozen=True, eq=False)
class MultiplierVector:
    """λ_0..λ_N; the two ends are zero exactly."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 2:
            raise InputError("a multiplier vector has at least two entries (λ_0, λ_N)")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise InputError("multipliers must satisfy λ_0 = λ_N = 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, n: int) -> MultiplierVector:
        return cls(np.zeros(n + 1))

    @classmethod
    def from_interior(cls, interior) -> MultiplierVector:
        """λ_1..λ_{N-1} → full vector with zero ends."""
        return cls(np.concatenate([[0.0], np.asarray(interior, dtype=float), [0.0]]))

    @property
    def n(self) -> int:
        return int(self.values.size - 1)

    def increments(self) -> np.ndarray:
        """λ_i - λ_{i-1}, i = 1..N."""
        return np.diff(self.values)

    def min_value(self) -> float:
        return float(np.min(self.values))

    def to_list(self) -> list[float]:
        return self.values.tolist()


@dataclass(frozen=True)
class StepReport:
    energy_before: float
    energy_after: float
    movement: float  # |X^{k+1} - X^k|² / (2Nτ)
    kkt_residual: float  # ‖X - P_K(X - τ∇G)‖_∞ / τ at the accepted iterate
    slackness_residual: float
    consistency_residual: float  # |λ_N| before forcing it to zero
    active_set: tuple[int, ...]  # gaps i (between x_i and x_{i+1}) in contact
    inner_iterations: int
    newton_iterations: int = 0
    inexact: bool = False
    wall_time_s: float = 0.0

    @property
    def dissipation_slack(self) -> float:
        """energy_before - energy_after - movement (nonnegative up to DISSIPATION_TOL)."""
        return self.energy_before - self.energy_after - self.movement

    @property
    def dissipates(self) -> bool:
        return self.energy_after + self.movement <= self.energy_before + DISSIPATION_TOL

    def to_dict(self) -> dict[str, Any]:
        return {
            "energy_before": self.energy_before,
            "energy_after": self.energy_after,
            "movement": self.movement,
            "kkt_residual": self.kkt_residual,
            "slackness_residual": self.slackness_residual,
            "consistency_residual": self.consistency_residual,
            "active_set": list(self.active_set),
            "inner_iterations": self.inner_iterations,
            "newton_iterations": self.newton_iterations,
            "inexact": self.inexact,
            "wall_time_s": round(self.wall_time_s, 6),
        }


# ── projection ────────────────────────────────────────────────────────────────
def project_to_cone(Y, *, order: str = "forward") -> np.ndarray:
    """Euclidean projection of Y onto K_N = {z : z_{i+1} - z_i >= 1/N}.

    Shift y_i = Y_i - i/N, isotonic regression, unshift. `order="reverse"` pools from the right
    (isotonic regression of the reversed, negated sequence); the projection is unique so both
    orders agree up to rounding.
    """
    y = np.asarray(Y, dtype=float).reshape(-1)
    n = y.size
    if n <= 1:
        return y.copy()
    shift = np.arange(1, n + 1, dtype=float) / n
    z = y - shift
    if np.all(np.diff(z) >= 0):
        return y.copy()
    if order == "forward":
        iso = isotonic_regression(z, increasing=True)
    elif order == "reverse":
        iso = -np.asarray(isotonic_regression(-z[::-1], increasing=True))[::-1]
    else:
        raise ParameterError(f"unknown pooling order {order!r}")
    return np.asarray(iso, dtype=float) + shift


# ── objective ─────────────────────────────────────────────────────────────────
class _Objective:
    """G = N·F and its derivatives for one step."""

    def __init__(self, xk: np.ndarray, p: Potential, w: InteractionKernel | None, tau: float):
        self.xk = xk
        self.p = p
        self.w = w
        self.tau = tau
        self.n = xk.size

    def value(self, x: np.ndarray) -> float:
        d = x - self.xk
        out = float(np.sum(self.p.eval(x))) + float(d @ d) / (2.0 * self.tau)
        if self.w is not None:
            out += self.n * interaction_energy(self.w, x)
        return out

    def grad(self, x: np.ndarray) -> np.ndarray:
        g = np.asarray(self.p.grad(x), dtype=float) + (x - self.xk) / self.tau
        if self.w is not None:
            g = g + interaction_force(self.w, x)
        return g

    def hess_diag(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.p.hess(x), dtype=float) + 1.0 / self.tau

    def hess(self, x: np.ndarray) -> np.ndarray:
        h = np.diag(self.hess_diag(x))
        if self.w is not None:
            h = h + interaction_hessian(self.w, x)
        return h


def natural_residual(x: np.ndarray, g: np.ndarray, tau: float) -> float:
    """‖x - P_K(x - τ g)‖_∞ / τ; zero exactly at the constrained minimizer."""
    return float(np.max(np.abs(x - project_to_cone(x - tau * g)))) / tau


def _active_mask(x: np.ndarray, active_tol: float) -> np.ndarray:
    return np.diff(x) <= 1.0 / x.size + active_tol


def _blocks(active: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Contact clusters: block id per particle, first particle per block, offsets (i - first)/N."""
    ids = np.concatenate([[0], np.cumsum(~active)]).astype(int)
    first = np.flatnonzero(np.concatenate([[True], ~active]))
    offsets = (np.arange(n) - first[ids]) / n
    return ids, first, offsets


def _newton_polish(
    x: np.ndarray, active: np.ndarray, obj: _Objective, cfg: SolverConfig, tol: float
) -> tuple[np.ndarray, bool, int]:
    """Newton on rigid cluster translations for a fixed active set.

    Returns (iterate, converged, iterations). Stops early, unconverged, when a step would close a
    free gap (a new contact) or when the line search stalls.
    """
    n = x.size
    ids, first, offsets = _blocks(active, n)
    nb = first.size
    lengths = np.bincount(ids, minlength=nb)
    span = (lengths - 1) / n
    u = x[first].astype(float)
    xc = u[ids] + offsets
    gc = obj.value(xc)
    target = 1e-3 * tol

    if obj.w is not None:
        embed = np.zeros((n, nb))
        embed[np.arange(n), ids] = 1.0

    its = 0
    for its in range(1, cfg.newton_max + 1):
        g = obj.grad(xc)
        gr = np.bincount(ids, weights=g, minlength=nb)
        if np.max(np.abs(gr)) <= target:
            return xc, True, its - 1
        if obj.w is None:
            delta = -gr / np.bincount(ids, weights=obj.hess_diag(xc), minlength=nb)
        else:
            delta = -np.linalg.solve(embed.T @ obj.hess(xc) @ embed, gr)
        if np.max(np.abs(delta)) <= 8.0 * _EPS * (1.0 + np.max(np.abs(u))):
            return xc, True, its

        # ratio test on the free gaps between consecutive clusters
        t, closes = 1.0, False
        if nb > 1:
            slack = u[1:] - u[:-1] - span[:-1] - 1.0 / n
            dslack = delta[1:] - delta[:-1]
            shrink = dslack < 0
            if np.any(shrink):
                t_hit = float(np.min(np.maximum(slack[shrink], 0.0) / -dslack[shrink]))
                if t_hit < 1.0:
                    t, closes = t_hit, True

        slope = float(gr @ delta)
        floor = 64.0 * _EPS * (1.0 + abs(gc))
        for _ in range(cfg.backtrack_max):
            u_try = u + t * delta
            x_try = u_try[ids] + offsets
            g_try = obj.value(x_try)
            if g_try <= gc + 1e-4 * t * slope + floor:
                break
            t *= 0.5
            closes = False
        else:
            return xc, False, its
        u, xc, gc = u_try, x_try, g_try
        if closes:
            return project_to_cone(xc), False, its
    return xc, False, its


@dataclass
class _SolveOutcome:
    x: np.ndarray
    residual: float
    iterations: int
    newton_iterations: int


def _solve(
    xk: np.ndarray, obj: _Objective, c2_eff: float, cfg: SolverConfig, x_init: np.ndarray
) -> _SolveOutcome:
    n = xk.size
    tau = obj.tau
    tol = cfg.tol_kkt(n)
    max_iter = cfg.max_iter(n)
    lipschitz = 1.0 / tau + c2_eff

    x = project_to_cone(x_init)
    gx = obj.value(x)
    best_x, best_res = x, np.inf
    prev_active: np.ndarray | None = None
    stable = 0
    newton_total = 0

    for it in range(max_iter + 1):
        g = obj.grad(x)
        res = natural_residual(x, g, tau)
        if res < best_res:
            best_x, best_res = x, res
        active = _active_mask(x, cfg.active_tol)

        if res <= tol:
            # polish the converged face so the telescoped multipliers are exact
            xp, _, k = _newton_polish(x, active, obj, cfg, tol)
            newton_total += k
            rp = natural_residual(xp, obj.grad(xp), tau)
            if rp <= res and np.all(np.diff(xp) >= 1.0 / n - GAP_TOL):
                x, res = xp, rp
            return _SolveOutcome(x, res, it, newton_total)
        if it == max_iter:
            break

        if prev_active is not None and np.array_equal(active, prev_active):
            stable += 1
        else:
            stable = 0
        prev_active = active

        if stable >= cfg.polish_after_stable:
            xp, _, k = _newton_polish(x, active, obj, cfg, tol)
            newton_total += k
            stable = 0
            gp = obj.value(xp)
            if gp <= gx:
                x, gx = xp, gp
                continue

        # projected gradient step; 1/L is a guaranteed-descent step, backtracking covers
        # potentials whose declared c2 is too optimistic
        alpha = 1.0 / lipschitz
        floor = 64.0 * _EPS * (1.0 + abs(gx))
        for _ in range(cfg.backtrack_max):
            x_new = project_to_cone(x - alpha * g)
            d = x_new - x
            g_new = obj.value(x_new)
            if g_new <= gx + float(g @ d) + float(d @ d) / (2.0 * alpha) + floor:
                break
            alpha *= 0.5
        x, gx = x_new, g_new

    raise ConvergenceError(
        f"inner solver did not reach tol_kkt={tol:.3g} in {max_iter} iterations "
        f"(best residual {best_res:.3g})",
        best_iterate=ParticleConfig(best_x),
        residual=best_res,
        iterations=max_iter,
    )


# ── public operations ─────────────────────────────────────────────────────────
def check_step_size(p: Potential, w: InteractionKernel | None, tau: float, guard: float) -> None:
    """Raise unless 0 < τ and τ·(c2(φ) + 2 c2(W)) <= guard."""
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    c2e = effective_c2(p, w)
    if tau * c2e > guard:
        raise StepSizeError(tau, c2e, guard)


def recover_multipliers(
    Xk: ParticleConfig,
    Xk1: ParticleConfig,
    p: Potential,
    tau: float,
    w: InteractionKernel | None = None,
    *,
    tol_consistency: float | None = None,
) -> tuple[MultiplierVector, float]:
    """Telescoped multipliers of an accepted step and the consistency residual |λ_N^raw|.

    λ_0 = 0, λ_i = λ_{i-1} - (1/N)(φ'(x_i) + (1/N)Σ_j W'(x_i - x_j) + (x_i - x_i^k)/τ), evaluated
    at X^{k+1}. λ_N is then forced to zero; a residual above `tol_consistency` is logged as an
    inexact inner solve.
    """
    if Xk.n != Xk1.n:
        raise InputError("configurations before and after the step differ in size")
    x, xk = Xk1.positions, Xk.positions
    n = x.size
    force = np.asarray(p.grad(x), dtype=float) + (x - xk) / tau + interaction_force(w, x)
    raw = -np.cumsum(force) / n
    residual = float(abs(raw[-1]))
    limit = CONFIG.solver.tol_consistency if tol_consistency is None else tol_consistency
    if residual > limit:
        log.warning("multiplier telescoping leaves |lambda_N|=%.3g > %.3g", residual, limit)
    return MultiplierVector.from_interior(raw[:-1]), residual


def check_slackness(X: ParticleConfig, L: MultiplierVector) -> float:
    """max_i |λ_i (x_{i+1} - x_i - 1/N)| over the interior multipliers."""
    if L.n != X.n:
        raise InputError("multiplier vector does not match the configuration size")
    if X.n < 2:
        return 0.0
    return float(np.max(np.abs(L.values[1:-1] * (X.gaps - 1.0 / X.n))))


def jko_step(
    Xk: ParticleConfig,
    p: Potential,
    w: InteractionKernel | None,
    tau: float,
    *,
    config: SolverConfig | None = None,
    initial_guess=None,
) -> tuple[ParticleConfig, MultiplierVector, StepReport]:
    """One minimizing-movement step from Xk.

    Args:
        Xk: current configuration, in K_N.
        p: external potential.
        w: optional interaction kernel.
        tau: time step; τ·(c2(φ) + 2 c2(W)) must not exceed `config.tau_guard`.
        config: solver settings (defaults to CONFIG.solver).
        initial_guess: starting iterate for the inner solver (projected onto K_N); Xk by default.

    Returns:
        (X^{k+1}, multipliers, StepReport).

    Raises:
        StepSizeError: τ beyond the guard.
        InputError: Xk outside K_N.
        ConvergenceError: max_iter reached; carries the best iterate.
    """
    cfg = config or CONFIG.solver
    check_step_size(p, w, tau, cfg.tau_guard)
    if not Xk.in_cone():
        raise InputError("jko_step: the starting configuration is not in K_N")

    t0 = time.perf_counter()
    xk = Xk.positions
    obj = _Objective(xk, p, w, tau)
    x_init = xk if initial_guess is None else np.asarray(initial_guess, dtype=float).reshape(-1)
    if x_init.size != xk.size:
        raise InputError("initial guess has the wrong number of particles")
    out = _solve(xk, obj, effective_c2(p, w), cfg, x_init)

    x1 = ParticleConfig(out.x)
    lam, consistency = recover_multipliers(
        Xk, x1, p, tau, w, tol_consistency=cfg.tol_consistency
    )
    n = xk.size
    d = out.x - xk
    before = total_energy(p, w, xk)
    after = total_energy(p, w, out.x)
    movement = float(d @ d) / (2.0 * n * tau)
    active = tuple(int(i) + 1 for i in np.flatnonzero(_active_mask(out.x, cfg.active_tol)))
    report = StepReport(
        energy_before=before,
        energy_after=after,
        movement=movement,
        kkt_residual=out.residual,
        slackness_residual=check_slackness(x1, lam),
        consistency_residual=consistency,
        active_set=active,
        inner_iterations=out.iterations,
        newton_iterations=out.newton_iterations,
        inexact=consistency > cfg.tol_consistency,
        wall_time_s=time.perf_counter() - t0,
    )
    if not report.dissipates:
        log.warning("step does not dissipate: slack %.3g", report.dissipation_slack)
    log.debug(
        "jko_step N=%d tau=%g iters=%d newton=%d residual=%.2e contacts=%d",
        n, tau, out.iterations, out.newton_iterations, out.residual, len(active),
    )
    return x1, lam, report
