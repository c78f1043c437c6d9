"""test_sampling.py — densities, quantiles and particle sampling."""

import numpy as np
import pytest

from congestlab.app.errors import InputError
from congestlab.app.sampling import (
    PIECEWISE_LINEAR,
    MacroDensity,
    density_from_mapping,
    parse_uniform_spec,
    quantile_of_density,
    random_density,
    sample_particles,
    sampling_bound,
    sampling_error_bound_check,
)


# ── MacroDensity ──────────────────────────────────────────────────────────────
def test_density_must_have_unit_mass():
    with pytest.raises(InputError, match="mass"):
        MacroDensity(np.array([0.0, 1.0]), np.array([0.5]))


def test_density_values_capped_at_one():
    with pytest.raises(InputError, match=r"\[0, 1\]"):
        MacroDensity(np.array([0.0, 0.5]), np.array([2.0]))


def test_uniform_needs_width_one():
    with pytest.raises(InputError):
        MacroDensity.uniform(0.0, 0.5)
    rho = MacroDensity.uniform(-1.0, 1.0)
    assert rho.values.tolist() == [0.5]


def test_support_ignores_empty_blocks():
    rho = density_from_mapping({"breakpoints": [-2, -1, 0, 1], "values": [0.0, 1.0, 0.0]})
    assert (rho.xi_left, rho.xi_right) == (-1.0, 0.0)


def test_mapping_without_values_is_rejected():
    with pytest.raises(InputError, match="breakpoints"):
        density_from_mapping({"breakpoints": [0, 1]})


def test_uniform_spec_parsing():
    assert parse_uniform_spec("two_block") is None
    rho = parse_uniform_spec("uniform:0,2")
    assert rho.breakpoints.tolist() == [0.0, 2.0]
    with pytest.raises(InputError):
        parse_uniform_spec("uniform:0")


# ── quantile and sampling ─────────────────────────────────────────────────────
def test_uniform_unit_interval_samples():
    X0 = quantile_of_density(MacroDensity.uniform(0.0, 1.0))
    XN = sample_particles(X0, 4)
    assert XN.positions == pytest.approx([0.25, 0.5, 0.75, 1.0])
    assert sampling_error_bound_check(X0, XN) == pytest.approx(1.0 / 8.0)


def test_half_height_block_samples():
    rho = MacroDensity(np.array([0.0, 2.0]), np.array([0.5]))
    XN = sample_particles(quantile_of_density(rho), 2)
    assert XN.positions == pytest.approx([1.0, 2.0])


def test_uniform_symmetric_interval_has_nonzero_mean():
    XN = sample_particles(quantile_of_density(MacroDensity.uniform(-1.0, 1.0)), 4)
    assert XN.positions == pytest.approx([-0.5, 0.0, 0.5, 1.0])
    assert XN.positions.mean() == pytest.approx(0.25)


def test_quantile_jumps_over_empty_blocks():
    rho = density_from_mapping(
        {"breakpoints": [-1.25, -0.25, 0.25, 1.25], "values": [0.5, 0.0, 0.5]}
    )
    X0 = quantile_of_density(rho)
    assert X0.kind == PIECEWISE_LINEAR
    assert X0(0.0) == pytest.approx(-1.25)
    assert X0(0.5) == pytest.approx(-0.25)  # left-continuous at the jump
    assert X0.fn(0.5, right_continuous=True) == pytest.approx(0.25)
    assert X0(1.0) == pytest.approx(1.25)
    assert X0.is_monotone() and X0.has_unit_slope()


def test_sampling_needs_two_particles():
    X0 = quantile_of_density(MacroDensity.uniform(0.0, 1.0))
    with pytest.raises(InputError):
        sample_particles(X0, 1)


@pytest.mark.parametrize("n", [4, 16, 64, 256])
def test_sampling_error_within_bound(n):
    rho = density_from_mapping(
        {"breakpoints": [-2, -1, -0.5, 0, 0.25, 1.25], "values": [0.25, 0, 1, 0, 0.25]}
    )
    X0 = quantile_of_density(rho)
    XN = sample_particles(X0, n)
    assert XN.in_cone()
    assert sampling_error_bound_check(X0, XN) <= sampling_bound(rho, n) + 1e-14


def test_random_densities_are_admissible(rng):
    for _ in range(25):
        rho = random_density(rng, max_blocks=5, min_height=0.25)
        assert float(np.sum(rho.masses)) == pytest.approx(1.0, abs=1e-12)
        XN = sample_particles(quantile_of_density(rho), 16)
        assert XN.in_cone()
