"""test_jko.py — the constrained minimizing-movement step.

Covers the cone projection, closed-form steps (free particles and the stationary lattice),
multiplier recovery, the error surface, and agreement with the brute-force active-set oracle on
small N.
"""

import numpy as np
import pytest

from congestlab.app.config import SolverConfig
from congestlab.app.errors import ConvergenceError, InputError, ParameterError, StepSizeError
from congestlab.app.jko import (
    MultiplierVector,
    ParticleConfig,
    check_slackness,
    check_step_size,
    jko_step,
    natural_residual,
    project_to_cone,
    recover_multipliers,
)
from congestlab.app.oracles import active_set_step, brute_force_projection
from congestlab.app.potential import builtin_double_well, quadratic_kernel


def _random_start(rng: np.random.Generator, n: int) -> ParticleConfig:
    gaps = 1.0 / n + rng.uniform(0.0, 0.5, size=n - 1) * (rng.random(n - 1) < 0.5)
    x = np.concatenate([[rng.uniform(-1.0, 1.0)], gaps]).cumsum()
    return ParticleConfig.from_positions(x)


# ── value types ───────────────────────────────────────────────────────────────
def test_particle_config_checks_the_cone():
    with pytest.raises(InputError, match="not in K_N"):
        ParticleConfig.from_positions([0.0, 0.2])
    X = ParticleConfig.from_positions([0.0, 0.5])
    assert X.in_cone()
    assert X.extended().tolist() == [-1.0, 0.0, 0.5]
    with pytest.raises(ValueError):
        X.positions[0] = 3.0  # read-only


def test_multiplier_vector_needs_zero_ends():
    with pytest.raises(InputError):
        MultiplierVector(np.array([0.0, 1.0, 0.5]))
    L = MultiplierVector.from_interior([0.25])
    assert L.to_list() == [0.0, 0.25, 0.0]
    assert L.increments().tolist() == [0.25, -0.25]


# ── projection ────────────────────────────────────────────────────────────────
def test_projection_of_two_overlapping_particles():
    assert project_to_cone([0.3, 0.2]) == pytest.approx([0.0, 0.5])


def test_projection_keeps_admissible_points():
    y = np.array([-1.0, 0.0, 1.0])
    out = project_to_cone(y)
    assert out.tolist() == y.tolist()
    assert out is not y


def test_projection_pooling_orders_agree(rng):
    for _ in range(20):
        y = rng.normal(scale=0.3, size=7)
        assert project_to_cone(y, order="reverse") == pytest.approx(project_to_cone(y), abs=1e-12)


def test_projection_unknown_order():
    with pytest.raises(ParameterError):
        project_to_cone([0.5, 0.0], order="sideways")


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_projection_matches_brute_force(rng, n):
    for _ in range(10):
        y = rng.normal(scale=1.0 / n, size=n)
        assert project_to_cone(y) == pytest.approx(brute_force_projection(y), abs=1e-10)


# ── closed-form steps ─────────────────────────────────────────────────────────
def test_free_particles_contract_toward_the_minimum(quadratic):
    X = ParticleConfig.from_positions([-2.0, 2.0])
    x1, lam, rep = jko_step(X, quadratic, None, 0.1)
    assert x1.positions == pytest.approx([-5.0 / 3.0, 5.0 / 3.0], abs=1e-10)
    assert lam.values == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)
    assert rep.active_set == ()
    assert rep.dissipates


@pytest.mark.parametrize(
    "n, lam",
    [
        (2, [0.0, 0.25, 0.0]),
        (3, [0.0, 2.0 / 9.0, 2.0 / 9.0, 0.0]),
    ],
)
def test_lattice_is_stationary(quadratic, n, lam):
    lattice = (np.arange(1, n + 1) - (n + 1) / 2.0) / n
    X = ParticleConfig.from_positions(lattice)
    x1, L, rep = jko_step(X, quadratic, None, 0.05)
    assert x1.positions == pytest.approx(lattice, abs=1e-10)
    assert L.values == pytest.approx(lam, abs=1e-9)
    assert rep.active_set == tuple(range(1, n))
    assert rep.consistency_residual < 1e-9


def test_close_pair_is_pushed_into_contact(quadratic):
    X = ParticleConfig.from_positions([-0.3, 0.3])
    x1, L, rep = jko_step(X, quadratic, None, 0.2)
    assert x1.positions == pytest.approx([-0.25, 0.25], abs=1e-10)
    assert rep.active_set == (1,)
    assert L.values[1] == pytest.approx(0.125, abs=1e-9)
    assert L.min_value() >= -1e-9
    assert check_slackness(x1, L) <= 1e-8


def test_mean_decays_geometrically(quadratic):
    X = ParticleConfig.from_positions([0.0, 0.5, 1.0, 1.5])
    tau = 0.05
    x1, _, _ = jko_step(X, quadratic, None, tau)
    assert x1.positions.mean() == pytest.approx(X.positions.mean() / (1.0 + 2.0 * tau), abs=1e-9)


# ── KKT structure ─────────────────────────────────────────────────────────────
def test_kkt_conditions_on_random_starts(rng):
    p = builtin_double_well()
    cfg = SolverConfig()
    for n in (3, 8, 20):
        X = _random_start(rng, n)
        tau = 0.4 / p.c2
        x1, L, rep = jko_step(X, p, None, tau, config=cfg)
        assert x1.in_cone()
        assert L.min_value() >= -1e-9
        assert rep.kkt_residual <= cfg.tol_kkt(n)
        assert rep.slackness_residual <= 1e-8
        assert rep.consistency_residual <= 1e-8
        assert rep.dissipation_slack >= -1e-10
        assert natural_residual(
            x1.positions, p.grad(x1.positions) + (x1.positions - X.positions) / tau, tau
        ) <= cfg.tol_kkt(n)


def test_recovered_multipliers_telescope(quadratic):
    X = ParticleConfig.from_positions([-1.0, -0.5, 0.0, 0.5])
    x1, L, _ = jko_step(X, quadratic, None, 0.1)
    again, residual = recover_multipliers(X, x1, quadratic, 0.1)
    assert again.values == pytest.approx(L.values)
    assert residual < 1e-9


def test_perturbed_initial_guess_reaches_the_same_minimizer(rng):
    p = builtin_double_well()
    X = _random_start(rng, 10)
    tau = 0.05
    a, _, _ = jko_step(X, p, None, tau)
    b, _, _ = jko_step(X, p, None, tau, initial_guess=X.positions + 1e-3 * rng.normal(size=10))
    assert b.positions == pytest.approx(a.positions, abs=1e-8)


def test_step_is_deterministic(rng):
    p = builtin_double_well()
    X = _random_start(rng, 12)
    a = jko_step(X, p, None, 0.05)
    b = jko_step(X, p, None, 0.05)
    assert np.array_equal(a[0].positions, b[0].positions)
    assert np.array_equal(a[1].values, b[1].values)


# ── oracle agreement ──────────────────────────────────────────────────────────
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_agrees_with_active_set_enumeration(rng, n):
    p = builtin_double_well()
    w = quadratic_kernel(0.5)
    for kernel in (None, w):
        for _ in range(3):
            X = _random_start(rng, n)
            x1, _, _ = jko_step(X, p, kernel, 0.05)
            ref = active_set_step(X, p, kernel, 0.05)
            assert x1.positions == pytest.approx(ref.positions, abs=1e-8)


# ── errors ────────────────────────────────────────────────────────────────────
def test_step_size_guard(quadratic):
    with pytest.raises(StepSizeError, match="guard"):
        check_step_size(quadratic, None, 0.3, 0.5)
    check_step_size(quadratic, None, 0.25, 0.5)
    with pytest.raises(StepSizeError):
        check_step_size(quadratic, quadratic_kernel(1.0), 0.15, 0.5)  # c2_eff = 4
    with pytest.raises(ParameterError):
        check_step_size(quadratic, None, 0.0, 0.5)


def test_start_outside_the_cone_is_rejected(quadratic):
    with pytest.raises(InputError):
        jko_step(ParticleConfig([0.0, 0.1]), quadratic, None, 0.1)


def test_initial_guess_size_mismatch(quadratic):
    X = ParticleConfig.from_positions([0.0, 1.0])
    with pytest.raises(InputError):
        jko_step(X, quadratic, None, 0.1, initial_guess=[0.0, 1.0, 2.0])


def test_iteration_cap_raises_with_best_iterate(rng):
    p = builtin_double_well()
    X = _random_start(rng, 12)
    cfg = SolverConfig(
        tol_kkt_per_particle=1e-30, max_iter_base=1, max_iter_per_particle=1,
        polish_after_stable=50,
    )
    with pytest.raises(ConvergenceError) as exc:
        jko_step(X, p, None, 0.05, config=cfg)
    assert exc.value.iterations == 13
    assert exc.value.best_iterate.in_cone()
