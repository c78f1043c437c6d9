# src/congestlab/app/trajectory.py
# Version: 1.1.0
# Changelog: 1.1.0 — gap-growth / support-diameter ratios, slackness limit quantity, Λ̃-vs-Λ and
#   cross-resolution Λ̃ distances (all exact on the step partition).
# Changelog: 1.0.0 — integrate(), time interpolants X^τ / X̃^τ / Λ^τ, Lagrangian interpolants
#   X_N / X̃_N / Λ_N / Λ̃_N, Euler-Lagrange residual.
"""Trajectories of the step map and their time / Lagrangian interpolants.

Time: on I_k = (kτ, (k+1)τ], X^τ = X^{k+1}, X̃^τ is linear from X^k to X^{k+1}, Λ^τ = Λ^{k+1}.
Space (s in [0,1], s_i = i/N):
    X_N   = x_i       on ((i-1)/N, i/N]
    X̃_N   linear from x_i to x_{i+1} on [i/N, (i+1)/N], ghost x_0 = x_1 - 2/N
    Λ_N   = λ_i       on [i/N, (i+1)/N)
    Λ̃_N   linear from λ_{i-1} to λ_i on [(i-1)/N, i/N]
Time integrals use the step partition exactly: a quantity frozen on I_k contributes τ times its
value at step k+1.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from .config import CONFIG, SolverConfig
from .errors import ConvergenceError, InputError, IntegrationError, ParameterError
from .jko import MultiplierVector, ParticleConfig, StepReport, check_step_size, jko_step
from .potential import InteractionKernel, Potential, effective_c2, interaction_force, total_energy
from .quadrature import PiecewiseLinear, lp_distance_pow, product_integral, sup_abs_difference

try:
    from tqdm import tqdm  # type: ignore
except Exception:  # pragma: no cover
    tqdm = None  # type: ignore

log = logging.getLogger(__name__)

X_PIECEWISE_CONSTANT = "X_piecewise_constant"
X_PIECEWISE_LINEAR = "X_piecewise_linear"
LAMBDA_PIECEWISE_CONSTANT = "Lambda_piecewise_constant"
LAMBDA_PIECEWISE_LINEAR = "Lambda_piecewise_linear"


@dataclass(frozen=True, eq=False)
class Trajectory:
    tau: float
    states: tuple[ParticleConfig, ...]
    multipliers: tuple[MultiplierVector, ...]  # multipliers[0] is zero: no step taken yet
    reports: tuple[StepReport, ...]
    potential: Potential
    interaction: InteractionKernel | None = None
    complete: bool = True

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def T(self) -> float:
        return self.steps * self.tau

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.tau

    @property
    def phi_bar(self) -> float:
        """(1/N) Σ φ(x_i⁰)."""
        return float(np.mean(self.potential.eval(self.states[0].positions)))

    def positions(self) -> np.ndarray:
        return np.vstack([s.positions for s in self.states])

    def multiplier_values(self) -> np.ndarray:
        return np.vstack([m.values for m in self.multipliers])

    def energies(self) -> np.ndarray:
        return np.array(
            [total_energy(self.potential, self.interaction, s.positions) for s in self.states]
        )

    def describe(self) -> dict[str, Any]:
        return {
            "N": self.n,
            "tau": self.tau,
            "T": self.T,
            "steps": self.steps,
            "complete": self.complete,
            "potential": self.potential.describe(),
            "interaction": self.interaction.describe() if self.interaction else None,
            "phi_bar": self.phi_bar,
            "max_kkt_residual": max((r.kkt_residual for r in self.reports), default=0.0),
            "max_consistency_residual": max(
                (r.consistency_residual for r in self.reports), default=0.0
            ),
            "max_slackness_residual": max(
                (r.slackness_residual for r in self.reports), default=0.0
            ),
            "energy_initial": float(self.energies()[0]),
            "energy_final": float(self.energies()[-1]),
            "wall_time_s": float(sum(r.wall_time_s for r in self.reports)),
        }


def step_count(tau: float, T: float) -> int:
    """K with T = Kτ. Raises ParameterError when T is not a multiple of τ."""
    if not tau > 0 or T < 0:
        raise ParameterError(f"need tau > 0 and T >= 0, got tau={tau}, T={T}")
    k = int(round(T / tau))
    if abs(k * tau - T) > 1e-9 * max(1.0, T):
        raise ParameterError(f"T={T} is not an integer multiple of tau={tau}")
    return k


def integrate(
    X0: ParticleConfig,
    p: Potential,
    w: InteractionKernel | None,
    tau: float,
    T: float,
    *,
    config: SolverConfig | None = None,
    progress: bool = False,
    guess: Callable[[int, np.ndarray], np.ndarray] | None = None,
) -> Trajectory:
    """Iterate jko_step K = T/τ times from X0.

    `guess(k, x_k)` may supply the inner solver's starting point for step k.

    Raises:
        ParameterError / StepSizeError: bad τ, T or guard violation (before any step).
        IntegrationError: a step failed; `.step` is its 1-based index, `.partial` the trajectory
            up to the last accepted state.
    """
    cfg = config or CONFIG.solver
    K = step_count(tau, T)
    check_step_size(p, w, tau, cfg.tau_guard)
    if not X0.in_cone():
        raise InputError("initial configuration is not in K_N")

    states = [X0]
    mults = [MultiplierVector.zeros(X0.n)]
    reports: list[StepReport] = []

    ks = range(K)
    if progress and tqdm is not None:
        ks = tqdm(ks, desc=f"N={X0.n} tau={tau:g}", unit="step", leave=False)

    for k in ks:
        xk = states[-1]
        try:
            initial = guess(k, xk.positions) if guess is not None else None
            x1, lam, rep = jko_step(xk, p, w, tau, config=cfg, initial_guess=initial)
        except (ConvergenceError, InputError) as e:
            partial = Trajectory(tau, tuple(states), tuple(mults), tuple(reports), p, w, False)
            raise IntegrationError(f"step {k + 1} of {K} failed: {e}", step=k + 1, partial=partial) from e
        states.append(x1)
        mults.append(lam)
        reports.append(rep)

    log.info("integrated N=%d tau=%g K=%d", X0.n, tau, K)
    return Trajectory(tau, tuple(states), tuple(mults), tuple(reports), p, w, True)


def _interval_index(traj: Trajectory, t: float) -> int:
    """k with t in I_k = (kτ, (k+1)τ]."""
    k = math.ceil(t / traj.tau - 1e-9) - 1
    return min(max(k, 0), traj.steps - 1)


def _check_time(traj: Trajectory, t: float) -> None:
    if t < -1e-12 or t > traj.T * (1 + 1e-12) + 1e-12:
        raise ParameterError(f"t={t} outside [0, {traj.T}]")


def eval_time_interpolants(
    traj: Trajectory, t: float
) -> tuple[ParticleConfig, ParticleConfig, MultiplierVector]:
    """(X^τ(t), X̃^τ(t), Λ^τ(t)). At t = 0 all three are the initial data (Λ = 0)."""
    _check_time(traj, t)
    if traj.steps == 0 or t <= 0:
        return traj.states[0], traj.states[0], traj.multipliers[0]
    k = _interval_index(traj, t)
    theta = min(max((t - k * traj.tau) / traj.tau, 0.0), 1.0)
    a, b = traj.states[k].positions, traj.states[k + 1].positions
    linear = ParticleConfig((1.0 - theta) * a + theta * b)
    return traj.states[k + 1], linear, traj.multipliers[k + 1]


def time_interpolant_gap(traj: Trajectory) -> float:
    """sup_t |X^τ(t) - X̃^τ(t)| = max_k |X^{k+1} - X^k|."""
    if traj.steps == 0:
        return 0.0
    return float(np.max(np.linalg.norm(np.diff(traj.positions(), axis=0), axis=1)))


def time_interpolant_bound(traj: Trajectory) -> float:
    """√(τ N φ̄_N)."""
    return math.sqrt(traj.tau * traj.n * traj.phi_bar)


# ── Lagrangian interpolants ───────────────────────────────────────────────────
@dataclass(frozen=True)
class LagrangianInterpolant:
    kind: str
    fn: PiecewiseLinear
    right_continuous: bool = False

    def __call__(self, s):
        return self.fn(s, right_continuous=self.right_continuous)

    @property
    def knots(self) -> np.ndarray:
        return self.fn.knots

    def slopes(self) -> np.ndarray:
        return self.fn.slopes()


def build_lagrangian_interpolants(
    state: ParticleConfig, mult: MultiplierVector
) -> tuple[LagrangianInterpolant, LagrangianInterpolant, LagrangianInterpolant, LagrangianInterpolant]:
    """(X_N, X̃_N, Λ_N, Λ̃_N) on the knots s_i = i/N."""
    if mult.n != state.n:
        raise InputError("multiplier vector does not match the configuration size")
    n = state.n
    knots = np.arange(n + 1, dtype=float) / n
    lam = mult.values
    return (
        LagrangianInterpolant(
            X_PIECEWISE_CONSTANT, PiecewiseLinear.constant_cells(knots, state.positions)
        ),
        LagrangianInterpolant(X_PIECEWISE_LINEAR, PiecewiseLinear.continuous(knots, state.extended())),
        LagrangianInterpolant(
            LAMBDA_PIECEWISE_CONSTANT, PiecewiseLinear.constant_cells(knots, lam[:-1]), True
        ),
        LagrangianInterpolant(LAMBDA_PIECEWISE_LINEAR, PiecewiseLinear.continuous(knots, lam)),
    )


def euler_lagrange_residuals(
    Xk: ParticleConfig,
    Xk1: ParticleConfig,
    L: MultiplierVector,
    p: Potential,
    w: InteractionKernel | None,
    tau: float,
) -> np.ndarray:
    """(x_i^{k+1} - x_i^k)/τ + φ'(x_i^{k+1}) + (1/N)Σ_j W'(x_i - x_j) + N(λ_i - λ_{i-1})."""
    x, xk = Xk1.positions, Xk.positions
    n = x.size
    return (
        (x - xk) / tau
        + np.asarray(p.grad(x), dtype=float)
        + interaction_force(w, x)
        + n * L.increments()
    )


def lagrangian_pde_residual(traj: Trajectory, t: float) -> float:
    """max_i of the Euler-Lagrange residual on the step interval containing t (0 < t <= T)."""
    _check_time(traj, t)
    if traj.steps == 0 or t <= 0:
        raise ParameterError("t must lie inside a step interval")
    k = _interval_index(traj, t)
    r = euler_lagrange_residuals(
        traj.states[k], traj.states[k + 1], traj.multipliers[k + 1],
        traj.potential, traj.interaction, traj.tau,
    )
    return float(np.max(np.abs(r)))


# ── diagnostics ───────────────────────────────────────────────────────────────
def gap_growth_ratios(traj: Trajectory) -> np.ndarray:
    """max_i ω_i(t_k) / (ω_i(0) e^{c2 t_k}), ω_i = N(x_{i+1} - x_i), i = 0..N-1."""
    c2 = effective_c2(traj.potential, traj.interaction)
    n = traj.n
    omega0 = n * np.diff(traj.states[0].extended())
    out = np.empty(traj.steps + 1)
    for k, (state, t) in enumerate(zip(traj.states, traj.times, strict=True)):
        omega = n * np.diff(state.extended())
        out[k] = float(np.max(omega / (omega0 * math.exp(c2 * t))))
    return out


def support_diameter_ratios(traj: Trajectory) -> np.ndarray:
    """(x_N - x_0)(t_k) / ((x_N - x_0)(0) e^{c2 t_k})."""
    c2 = effective_c2(traj.potential, traj.interaction)

    def diam(s: ParticleConfig) -> float:
        e = s.extended()
        return float(e[-1] - e[0])

    d0 = diam(traj.states[0])
    return np.array(
        [diam(s) / (d0 * math.exp(c2 * t)) for s, t in zip(traj.states, traj.times, strict=True)]
    )


def slackness_integrand(state: ParticleConfig, mult: MultiplierVector) -> float:
    """∫_0^1 Λ̃_N (1 - ∂_s X̃_N) ds at one time."""
    _, xl, _, ll = build_lagrangian_interpolants(state, mult)
    defect = PiecewiseLinear.constant_cells(xl.knots, 1.0 - xl.slopes())
    return product_integral(ll.fn, defect)


def slackness_limit_quantity(traj: Trajectory) -> float:
    """∫_0^T ∫_0^1 Λ̃_N (1 - ∂_s X̃_N) ds dt."""
    return traj.tau * sum(
        slackness_integrand(s, m) for s, m in zip(traj.states[1:], traj.multipliers[1:], strict=True)
    )


def lambda_interpolant_gap(traj: Trajectory) -> float:
    """∫_0^T ess sup_s |Λ̃_N - Λ_N|² dt (= τ Σ_k max_i |λ_i - λ_{i-1}|²)."""
    total = 0.0
    for s, m in zip(traj.states[1:], traj.multipliers[1:], strict=True):
        _, _, lc, ll = build_lagrangian_interpolants(s, m)
        total += sup_abs_difference(ll.fn, lc.fn) ** 2
    return traj.tau * total


def lambda_cross_resolution_distance(a: Trajectory, b: Trajectory) -> float:
    """‖Λ̃_{N_a} - Λ̃_{N_b}‖ in L²((0,T)×(0,1)); both runs must share τ and K."""
    if a.steps != b.steps or not math.isclose(a.tau, b.tau, rel_tol=1e-12):
        raise InputError("cross-resolution comparison needs the same tau and number of steps")
    total = 0.0
    for k in range(1, a.steps + 1):
        la = build_lagrangian_interpolants(a.states[k], a.multipliers[k])[3]
        lb = build_lagrangian_interpolants(b.states[k], b.multipliers[k])[3]
        total += lp_distance_pow(la.fn, lb.fn, 2)
    return math.sqrt(a.tau * total)
