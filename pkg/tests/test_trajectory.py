"""test_trajectory.py — integration, time interpolants and the Lagrangian diagnostics."""

import math

import numpy as np
import pytest

from congestlab.app.config import SolverConfig
from congestlab.app.errors import InputError, IntegrationError, ParameterError
from congestlab.app.jko import MultiplierVector, ParticleConfig
from congestlab.app.potential import builtin_double_well, builtin_quadratic, gaussian_bump_kernel
from congestlab.app.trajectory import (
    LAMBDA_PIECEWISE_CONSTANT,
    X_PIECEWISE_LINEAR,
    build_lagrangian_interpolants,
    euler_lagrange_residuals,
    eval_time_interpolants,
    gap_growth_ratios,
    integrate,
    lagrangian_pde_residual,
    lambda_cross_resolution_distance,
    lambda_interpolant_gap,
    slackness_integrand,
    slackness_limit_quantity,
    step_count,
    support_diameter_ratios,
    time_interpolant_bound,
    time_interpolant_gap,
)


def _uniform(n: int) -> ParticleConfig:
    """Samples of uniform[-1, 1] at s = i/N."""
    return ParticleConfig.from_positions(-1.0 + 2.0 * np.arange(1, n + 1) / n)


@pytest.fixture(scope="module")
def short_run():
    return integrate(_uniform(8), builtin_quadratic(), None, 0.05, 0.5)


# ── step count ────────────────────────────────────────────────────────────────
def test_step_count_requires_a_multiple():
    assert step_count(0.01, 1.0) == 100
    assert step_count(0.1, 0.0) == 0
    with pytest.raises(ParameterError, match="multiple"):
        step_count(0.3, 1.0)
    with pytest.raises(ParameterError):
        step_count(0.0, 1.0)


# ── integrate ─────────────────────────────────────────────────────────────────
def test_trajectory_shape_and_energy_decrease(short_run):
    assert short_run.steps == 10
    assert short_run.T == pytest.approx(0.5)
    assert short_run.complete
    assert short_run.positions().shape == (11, 8)
    assert short_run.multiplier_values().shape == (11, 9)
    assert np.all(short_run.multipliers[0].values == 0.0)
    e = short_run.energies()
    assert np.all(np.diff(e) <= 1e-10)


def test_every_state_stays_admissible(short_run):
    for s in short_run.states:
        assert s.in_cone()
    for m in short_run.multipliers:
        assert m.min_value() >= -1e-9


def test_zero_steps_return_the_initial_state(quadratic):
    traj = integrate(_uniform(4), quadratic, None, 0.1, 0.0)
    assert traj.steps == 0
    X, Xl, L = eval_time_interpolants(traj, 0.0)
    assert X is traj.states[0] and Xl is traj.states[0]
    assert time_interpolant_gap(traj) == 0.0


def test_failed_step_carries_the_partial_trajectory():
    p = builtin_double_well()
    cfg = SolverConfig(
        tol_kkt_per_particle=1e-30, max_iter_base=1, max_iter_per_particle=1,
        polish_after_stable=50,
    )
    with pytest.raises(IntegrationError) as exc:
        integrate(_uniform(6), p, None, 0.05, 0.2, config=cfg)
    assert exc.value.step == 1
    assert not exc.value.partial.complete
    assert exc.value.partial.steps == 0


def test_describe_reports_residuals(short_run):
    d = short_run.describe()
    assert d["N"] == 8 and d["steps"] == 10
    assert d["max_kkt_residual"] <= SolverConfig().tol_kkt(8)
    assert d["energy_final"] < d["energy_initial"]


# ── time interpolants ─────────────────────────────────────────────────────────
def test_time_interpolants_on_a_step_interval(short_run):
    tau = short_run.tau
    X, Xl, L = eval_time_interpolants(short_run, 2.5 * tau)
    assert X.positions.tolist() == short_run.states[3].positions.tolist()
    mid = 0.5 * (short_run.states[2].positions + short_run.states[3].positions)
    assert Xl.positions == pytest.approx(mid)
    assert L is short_run.multipliers[3]
    # right end of the interval still belongs to it
    X, _, _ = eval_time_interpolants(short_run, 3 * tau)
    assert X.positions.tolist() == short_run.states[3].positions.tolist()


def test_time_outside_the_run_is_rejected(short_run):
    with pytest.raises(ParameterError):
        eval_time_interpolants(short_run, short_run.T + 1.0)


def test_time_interpolant_gap_is_bounded(short_run):
    assert 0 < time_interpolant_gap(short_run) <= time_interpolant_bound(short_run)
    assert time_interpolant_bound(short_run) == pytest.approx(
        math.sqrt(short_run.tau * 8 * short_run.phi_bar)
    )


# ── Lagrangian interpolants ───────────────────────────────────────────────────
def test_lagrangian_interpolants_of_a_small_state():
    X = ParticleConfig.from_positions([0.0, 0.5])
    L = MultiplierVector.from_interior([0.25])
    xc, xl, lc, ll = build_lagrangian_interpolants(X, L)
    assert xc(np.array([0.25, 0.5, 0.75])) == pytest.approx([0.0, 0.0, 0.5])
    assert xl.kind == X_PIECEWISE_LINEAR
    assert xl(np.array([0.0, 0.5, 1.0])) == pytest.approx([-1.0, 0.0, 0.5])
    assert xl.slopes() == pytest.approx([2.0, 1.0])
    assert lc.kind == LAMBDA_PIECEWISE_CONSTANT
    assert lc(np.array([0.0, 0.5])) == pytest.approx([0.0, 0.25])
    assert ll(0.75) == pytest.approx(0.125)


def test_slackness_integrand_of_a_contact_pair():
    X = ParticleConfig.from_positions([-0.25, 0.25])
    L = MultiplierVector.from_interior([0.25])
    # only the ghost cell has a slope defect
    assert slackness_integrand(X, L) == pytest.approx(-0.25 / 2 * 0.5)


def test_slackness_limit_quantity_is_small(short_run):
    assert abs(slackness_limit_quantity(short_run)) <= 1.0


def test_euler_lagrange_residual_vanishes(short_run):
    for k in range(short_run.steps):
        r = euler_lagrange_residuals(
            short_run.states[k], short_run.states[k + 1], short_run.multipliers[k + 1],
            short_run.potential, None, short_run.tau,
        )
        assert np.max(np.abs(r)) < 1e-6
    assert lagrangian_pde_residual(short_run, 0.3 * short_run.T) < 1e-6
    with pytest.raises(ParameterError):
        lagrangian_pde_residual(short_run, 0.0)


def test_lambda_interpolant_gap_matches_increments(short_run):
    inc = np.diff(short_run.multiplier_values()[1:], axis=1)
    expected = short_run.tau * float(np.sum(np.max(np.abs(inc), axis=1) ** 2))
    assert lambda_interpolant_gap(short_run) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_cross_resolution_distance_needs_matching_steps(short_run, quadratic):
    other = integrate(_uniform(16), quadratic, None, 0.05, 0.25)
    with pytest.raises(InputError):
        lambda_cross_resolution_distance(short_run, other)
    assert lambda_cross_resolution_distance(short_run, short_run) == 0.0


# ── gap growth ────────────────────────────────────────────────────────────────
def test_gap_growth_stays_below_the_exponential_bound():
    p = builtin_double_well()
    w = gaussian_bump_kernel(0.5, 0.5)
    traj = integrate(_uniform(8), p, w, 0.01, 0.2)
    assert gap_growth_ratios(traj)[0] == pytest.approx(1.0)
    assert np.max(gap_growth_ratios(traj)) <= 1.05
    assert np.max(support_diameter_ratios(traj)) <= 1.0 + 1e-12
