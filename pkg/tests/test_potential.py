"""test_potential.py — potentials, interaction kernels and the energy / drift helpers.

Pure-logic tests: construction-time validation of c0 / c2, the config builders, kernel symmetry
and the closed-form drift on small configurations.
"""

import numpy as np
import pytest

from congestlab.app.config import InteractionConfig, PotentialConfig
from congestlab.app.errors import InputError, ParameterError
from congestlab.app.potential import (
    builtin_constant,
    builtin_double_well,
    builtin_quadratic,
    custom_table,
    drift_vector,
    effective_c2,
    from_callables,
    gaussian_bump_kernel,
    interaction_energy,
    interaction_force,
    kernel_from_config,
    make_kernel,
    potential_from_config,
    quadratic_growth_constant,
    quadratic_kernel,
    total_drift,
    total_energy,
    zero_kernel,
)


# ── built-in potentials ───────────────────────────────────────────────────────
def test_quadratic_constants_and_values(quadratic):
    assert quadratic.c0 == pytest.approx(1.0)
    assert quadratic.c2 == 2.0
    assert quadratic.eval(0.0) == pytest.approx(1.0)
    assert quadratic.grad(np.array([-1.0, 0.5])) == pytest.approx([-2.0, 1.0])
    assert quadratic.check is not None and quadratic.check.passed


def test_growth_constant_of_shifted_quadratic_is_tight():
    c = 1.5
    mu = quadratic_growth_constant(c)
    x = np.linspace(-20, 20, 40001)
    ratio = (1 + (x - c) ** 2) / (1 + x**2)
    assert mu == pytest.approx(float(ratio.min()), rel=1e-5)
    assert mu <= float(ratio.min()) + 1e-12
    assert quadratic_growth_constant(0.0) == pytest.approx(1.0)


def test_double_well_declares_bump_curvature():
    p = builtin_double_well(height=1.0, width=0.5)
    assert p.c2 == pytest.approx(2.0 + 4.0)
    assert p.check.passed


def test_quadratic_rejects_nonpositive_scale():
    with pytest.raises(ParameterError):
        builtin_quadratic(scale=0.0)


def test_understated_c2_fails_in_strict_mode():
    with pytest.raises(ParameterError, match="c2"):
        from_callables(
            "steep", lambda x: 1 + x**2, lambda x: 2 * x, lambda x: 2 + 0 * x, c0=1.0, c2=1.0
        )


def test_understated_c2_only_warns_when_not_strict(caplog):
    p = from_callables(
        "steep", lambda x: 1 + x**2, lambda x: 2 * x, lambda x: 2 + 0 * x,
        c0=1.0, c2=1.0, strict=False,
    )
    assert not p.check.passed
    assert "strict_phi off" in caplog.text


def test_constant_potential_needs_strict_off():
    p = builtin_constant(1.0)
    assert p.c0 == 0.0 and p.c2 == 0.0
    with pytest.raises(ParameterError):
        builtin_constant(1.0, strict=True)
    with pytest.raises(ParameterError, match="strict_phi"):
        potential_from_config(PotentialConfig(kind="constant"))


def test_custom_table_derives_constants():
    xs = np.linspace(-3, 3, 13)
    p = custom_table(xs, 1 + xs**2)
    assert p.c2 == pytest.approx(2.0, abs=1e-6)
    assert 0 < p.c0 <= 1.0
    assert p.eval(5.0) == pytest.approx(26.0, rel=1e-9)


def test_custom_table_rejects_unsorted_knots():
    with pytest.raises(InputError):
        custom_table([0.0, 2.0, 1.0], [1.0, 5.0, 2.0])


def test_potential_from_config_overrides_declared_constants():
    p = potential_from_config(PotentialConfig(kind="quadratic", c2=3.0))
    assert p.c2 == 3.0
    assert p.c0 == pytest.approx(1.0)


# ── interaction kernels ───────────────────────────────────────────────────────
def test_kernels_from_config():
    assert kernel_from_config(InteractionConfig()) is None
    w = kernel_from_config(InteractionConfig(kind="gaussian-bump", strength=0.5, width=0.5))
    assert w.c2 == pytest.approx(2.0)


def test_odd_kernel_is_rejected():
    from congestlab.app.potential import QuadraticForm

    with pytest.raises(ParameterError, match="not even"):
        make_kernel("shifted", QuadraticForm(1.0, 1.0), c2=2.0)


def test_effective_c2_counts_kernel_twice(quadratic):
    w = quadratic_kernel(0.5)
    assert effective_c2(quadratic) == 2.0
    assert effective_c2(quadratic, w) == pytest.approx(3.0)


def test_quadratic_kernel_energy_and_force():
    w = quadratic_kernel(1.0)
    x = np.array([-1.0, 1.0])
    # (1/(2N²)) Σ_{i,j} (x_i - x_j)²/2 = (1/8)(2 + 2)
    assert interaction_energy(w, x) == pytest.approx(0.5)
    assert interaction_force(w, x) == pytest.approx([-1.0, 1.0])
    assert interaction_force(None, x) == pytest.approx([0.0, 0.0])


def test_gaussian_bump_kernel_is_even():
    w = gaussian_bump_kernel(0.5, 0.5)
    z = np.linspace(0, 3, 7)
    assert w.eval(z) == pytest.approx(w.eval(-z))
    assert w.grad(z) == pytest.approx(-w.grad(-z))


# ── drift ─────────────────────────────────────────────────────────────────────
def test_total_drift_with_quadratic_kernel(quadratic):
    w = quadratic_kernel(1.0)
    x = np.array([-1.0, 1.0])
    assert total_drift(quadratic, w, x, 1) == pytest.approx(-quadratic.grad(-1.0) + 1.0)
    assert total_drift(quadratic, None, x, 2) == pytest.approx(-2.0)
    assert drift_vector(quadratic, w, x) == pytest.approx([3.0, -3.0])


def test_zero_kernel_leaves_only_the_external_drift(quadratic):
    x = np.array([0.0, 0.5])
    assert total_drift(quadratic, zero_kernel(), x, 2) == pytest.approx(-1.0)
    assert total_drift(quadratic, zero_kernel(), x, 1) == total_drift(quadratic, None, x, 1)


def test_total_drift_index_is_one_based(quadratic):
    with pytest.raises(ParameterError):
        total_drift(quadratic, None, np.array([0.0, 1.0]), 0)
    with pytest.raises(ParameterError):
        total_drift(quadratic, None, np.array([0.0, 1.0]), 3)


def test_total_energy_adds_interaction(quadratic):
    x = np.array([-1.0, 1.0])
    assert total_energy(quadratic, None, x) == pytest.approx(2.0)
    assert total_energy(quadratic, quadratic_kernel(1.0), x) == pytest.approx(2.5)
