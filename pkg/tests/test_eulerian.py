"""test_eulerian.py — density / pressure reconstruction and the weak-form residual."""

import numpy as np
import pytest

from congestlab.app.errors import InputError
from congestlab.app.eulerian import (
    DENSITY_HISTOGRAM,
    PiecewiseField,
    bump,
    bump_family,
    empirical_measure,
    histogram_density,
    masses,
    pressure_fields,
    pressure_interpolant_gap,
    pressure_l2_identity,
    saturation_check,
    weak_form_residual,
    weak_form_residual_integrated,
)
from congestlab.app.jko import MultiplierVector, ParticleConfig
from congestlab.app.potential import builtin_quadratic
from congestlab.app.quadrature import PiecewiseLinear
from congestlab.app.trajectory import integrate

PAIR = ParticleConfig.from_positions([0.0, 0.5])
PAIR_LAMBDA = MultiplierVector.from_interior([0.25])


@pytest.fixture(scope="module")
def run():
    X0 = ParticleConfig.from_positions(-1.0 + 2.0 * np.arange(1, 9) / 8)
    return integrate(X0, builtin_quadratic(), None, 0.05, 0.5)


# ── densities ─────────────────────────────────────────────────────────────────
def test_histogram_of_a_contact_pair():
    rho = histogram_density(PAIR)
    assert rho.kind == DENSITY_HISTOGRAM
    assert rho.breakpoints.tolist() == [-1.0, 0.0, 0.5]
    assert rho(np.array([-1.0, -0.5, 0.0, 0.25])) == pytest.approx([0.5, 0.5, 1.0, 1.0])
    assert rho(0.75) == 0.0
    assert rho.mass() == pytest.approx(1.0)


def test_histogram_needs_an_admissible_state():
    with pytest.raises(InputError):
        histogram_density(ParticleConfig([0.0, 0.1]))


def test_empirical_measure_is_atomic():
    mu = empirical_measure(PAIR)
    assert mu.is_atomic
    assert mu.mass() == pytest.approx(1.0)
    with pytest.raises(InputError):
        mu(0.0)


# ── pressures ─────────────────────────────────────────────────────────────────
def test_pressure_fields_of_a_contact_pair():
    p_const, p_lin = pressure_fields(PAIR, PAIR_LAMBDA)
    assert p_const(np.array([-0.5, 0.0, 0.49])) == pytest.approx([0.0, 0.25, 0.25])
    # ramps of width 1/N centered on the particles
    assert p_lin.breakpoints.tolist() == [-0.25, 0.25, 0.25, 0.75]
    assert p_lin(np.array([-0.25, 0.0, 0.25, 0.5, 0.75])) == pytest.approx(
        [0.0, 0.125, 0.25, 0.125, 0.0]
    )
    assert p_lin(1.0) == 0.0


def test_pressure_needs_matching_sizes():
    with pytest.raises(InputError):
        pressure_fields(PAIR, MultiplierVector.zeros(3))


def test_saturation_product():
    p_const, _ = pressure_fields(PAIR, PAIR_LAMBDA)
    assert saturation_check(histogram_density(PAIR), p_const) == 0.0
    apart = ParticleConfig.from_positions([0.0, 1.0])
    p_const, _ = pressure_fields(apart, PAIR_LAMBDA)
    # ρ̃ = 1/2 on [0, 1)
    assert saturation_check(histogram_density(apart), p_const) == pytest.approx(0.125)


def test_saturation_needs_shared_breakpoints():
    p_const, _ = pressure_fields(PAIR, PAIR_LAMBDA)
    other = histogram_density(ParticleConfig.from_positions([0.0, 1.0]))
    with pytest.raises(InputError):
        saturation_check(other, p_const)
    with pytest.raises(InputError):
        saturation_check(p_const, p_const)


# ── test functions ────────────────────────────────────────────────────────────
def test_bump_pairs_exactly_with_cells_and_atoms():
    psi = bump(0.0, 1.0)
    block = PiecewiseField(DENSITY_HISTOGRAM, PiecewiseLinear.constant_cells([-1.0, 1.0], [1.0]))
    assert psi.pair(block) == pytest.approx(32.0 / 35.0)
    atoms = empirical_measure(ParticleConfig.from_positions([0.0, 2.0]))
    assert psi.pair(atoms) == pytest.approx(0.5)
    assert psi.pair_second_derivative(atoms) == pytest.approx(-3.0)


def test_bump_is_c2_at_the_support_ends():
    psi = bump(0.0, 1.0, power=2)
    for edge in psi.support:
        assert psi.value(edge) == pytest.approx(0.0, abs=1e-14)
        assert psi.d1(edge) == pytest.approx(0.0, abs=1e-12)
        assert psi.d2(edge) == pytest.approx(0.0, abs=1e-10)


def test_bump_rejects_empty_support():
    with pytest.raises(InputError):
        bump(0.0, 0.0)


# ── weak formulation ──────────────────────────────────────────────────────────
def test_weak_form_residual_is_a_taylor_remainder(run):
    """The pressure term cancels; what is left is ψ's second-order remainder along each step."""
    for psi in bump_family(0.0, 1.0):
        d2max = float(np.max(np.abs(psi.d2(np.linspace(-1, 1, 2001)))))
        for k in range(run.steps):
            dx = run.states[k + 1].positions - run.states[k].positions
            bound = 0.5 * 1.01 * d2max * float(dx @ dx) / (run.n * run.tau)
            assert weak_form_residual(run, psi, k) <= bound + 1e-7


def test_weak_form_residual_rejects_bad_inputs(run):
    with pytest.raises(InputError):
        weak_form_residual(run, psi=lambda x: x, k=0)
    with pytest.raises(InputError):
        weak_form_residual(run, bump(0.0, 1.0), run.steps)


def test_integrated_residual_is_nonnegative(run):
    assert weak_form_residual_integrated(run, bump_family(0.0, 1.0)) >= 0.0


def test_pressure_l2_identity_holds_under_slackness(run):
    direct, via = pressure_l2_identity(run)
    assert direct == pytest.approx(via, rel=1e-6, abs=1e-12)


def test_pressure_interpolant_gap_and_masses(run):
    assert pressure_interpolant_gap(run) >= 0.0
    X = run.states[-1]
    assert masses([histogram_density(X), empirical_measure(X)]) == pytest.approx([1.0, 1.0])
