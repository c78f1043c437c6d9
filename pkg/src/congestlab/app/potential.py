# src/congestlab/app/potential.py
# Version: 1.2.0
# Changelog: 1.2.0 — custom-table potentials (C² cubic spline with quadratic tails) and the
#   `constant` potential for pure-movement runs (strict_phi off only).
# Changelog: 1.1.0 — interaction kernels W (quadratic, gaussian-bump) with energy / force / Hessian
#   helpers. The solver sees W only through those helpers.
# Changelog: 1.0.0 — Potential value type, built-in quadratic and double-well families, grid
#   validation of the growth / curvature constants at construction.
"""External potential φ and optional pairwise interaction kernel W.

A `Potential` pairs a closed-form *form* (value, first and second derivative) with the two
constants the scheme relies on:

    c0 : φ(x) >= c0 (1 + x²) for all x        (quadratic growth)
    c2 : |φ''(x)| <= c2 for all x              (bounded curvature; step-size and gap bounds)

The constants are checked once, at construction, on a uniform grid (default 2001 points over
[-10, 10]); the outcome is kept on the instance as a `PotentialCheck`. In strict mode a failed check
raises; otherwise it is logged and the potential is still returned.

Forms are small frozen dataclasses rather than closures so potentials pickle cleanly into sweep
workers.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import yaml
from scipy.interpolate import CubicSpline

from .config import InteractionConfig, PotentialConfig
from .errors import InputError, ParameterError

log = logging.getLogger(__name__)

# Absolute slack on the growth / curvature inequalities.
BOUND_SLACK = 1e-9
# Relative tolerance of the finite-difference consistency check.
FD_RTOL = 1e-6
# Symmetry tolerance for interaction kernels.
SYMMETRY_TOL = 1e-12


class _Form(Protocol):
    def value(self, x: Any) -> Any: ...

    def grad(self, x: Any) -> Any: ...

    def hess(self, x: Any) -> Any: ...


# ── forms ─────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class QuadraticForm:
    center: float
    scale: float

    def value(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return self.scale * (1.0 + u * u)

    def grad(self, x):
        return 2.0 * self.scale * (np.asarray(x, dtype=float) - self.center)

    def hess(self, x):
        return np.full_like(np.asarray(x, dtype=float), 2.0 * self.scale)


@dataclass(frozen=True)
class DoubleWellForm:
    center: float
    scale: float
    height: float
    width: float

    def _bump(self, u):
        return self.height * np.exp(-(u * u) / (2.0 * self.width**2))

    def value(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return self.scale * (1.0 + u * u) + self._bump(u)

    def grad(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return 2.0 * self.scale * u - (u / self.width**2) * self._bump(u)

    def hess(self, x):
        u = np.asarray(x, dtype=float) - self.center
        s2 = self.width**2
        return 2.0 * self.scale + (u * u / (s2 * s2) - 1.0 / s2) * self._bump(u)


@dataclass(frozen=True)
class ConstantForm:
    level: float

    def value(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.level)

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def hess(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class TableForm:
    """C² cubic spline through tabulated values, continued by C² quadratic tails."""

    spline: CubicSpline
    curvature: float

    @property
    def lo(self) -> float:
        return float(self.spline.x[0])

    @property
    def hi(self) -> float:
        return float(self.spline.x[-1])

    def _tail(self, x, edge: float, nu: int):
        d = x - edge
        v0 = float(self.spline(edge))
        v1 = float(self.spline(edge, 1))
        if nu == 0:
            return v0 + v1 * d + 0.5 * self.curvature * d * d
        if nu == 1:
            return v1 + self.curvature * d
        return np.full_like(d, self.curvature)

    def _eval(self, x, nu: int):
        x = np.asarray(x, dtype=float)
        inside = np.clip(x, self.lo, self.hi)
        out = np.asarray(self.spline(inside, nu), dtype=float)
        out = np.where(x < self.lo, self._tail(x, self.lo, nu), out)
        out = np.where(x > self.hi, self._tail(x, self.hi, nu), out)
        return out if out.ndim else float(out)

    def value(self, x):
        return self._eval(x, 0)

    def grad(self, x):
        return self._eval(x, 1)

    def hess(self, x):
        return self._eval(x, 2)


@dataclass(frozen=True, eq=False)
class CallableForm:
    """User-supplied (eval, grad, hess). Module-level functions keep it picklable."""

    f: Callable[[Any], Any]
    df: Callable[[Any], Any]
    d2f: Callable[[Any], Any]

    def value(self, x):
        return self.f(x)

    def grad(self, x):
        return self.df(x)

    def hess(self, x):
        return self.d2f(x)


# ── potential ─────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class PotentialCheck:
    """Outcome of the construction-time grid validation."""

    grid_min: float
    grid_max: float
    points: int
    growth_margin: float  # min_x φ(x) - c0 (1+x²); must be >= -1e-9
    curvature_excess: float  # max_x |φ''(x)| - c2; must be <= 1e-9
    grad_fd_error: float  # max relative |φ' - central difference of φ|
    hess_fd_error: float  # max relative |φ'' - central difference of φ'|

    @property
    def passed(self) -> bool:
        return (
            self.growth_margin >= -BOUND_SLACK
            and self.curvature_excess <= BOUND_SLACK
            and self.grad_fd_error <= FD_RTOL
            and self.hess_fd_error <= FD_RTOL
        )

    def failures(self) -> list[str]:
        out: list[str] = []
        if self.growth_margin < -BOUND_SLACK:
            out.append(f"growth bound violated by {-self.growth_margin:.3g}")
        if self.curvature_excess > BOUND_SLACK:
            out.append(f"|phi''| exceeds c2 by {self.curvature_excess:.3g}")
        if self.grad_fd_error > FD_RTOL:
            out.append(f"grad disagrees with finite differences ({self.grad_fd_error:.3g})")
        if self.hess_fd_error > FD_RTOL:
            out.append(f"hess disagrees with finite differences ({self.hess_fd_error:.3g})")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": [self.grid_min, self.grid_max, self.points],
            "growth_margin": self.growth_margin,
            "curvature_excess": self.curvature_excess,
            "grad_fd_error": self.grad_fd_error,
            "hess_fd_error": self.hess_fd_error,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class Potential:
    name: str
    form: _Form
    c0: float
    c2: float
    params: Mapping[str, Any] = field(default_factory=dict)
    strict: bool = True
    check: PotentialCheck | None = None

    def eval(self, x):
        return self.form.value(x)

    def grad(self, x):
        return self.form.grad(x)

    def hess(self, x):
        return self.form.hess(x)

    def describe(self) -> dict[str, Any]:
        return {
            "kind": self.name,
            "params": dict(self.params),
            "c0": self.c0,
            "c2": self.c2,
            "strict": self.strict,
            "check": self.check.to_dict() if self.check else None,
        }


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / scale))


def check_potential(
    form: _Form, c0: float, c2: float, *, grid_min: float = -10.0, grid_max: float = 10.0,
    points: int = 2001,
) -> PotentialCheck:
    """Grid check of the growth bound, the curvature bound and derivative consistency."""
    if not grid_max > grid_min:
        raise ParameterError(f"validation grid is empty: [{grid_min}, {grid_max}]")
    x = np.linspace(grid_min, grid_max, points)
    v = np.asarray(form.value(x), dtype=float)
    g = np.asarray(form.grad(x), dtype=float)
    h2 = np.asarray(form.hess(x), dtype=float)

    h = 1e-6 * np.maximum(1.0, np.abs(x))
    fd_g = (np.asarray(form.value(x + h)) - np.asarray(form.value(x - h))) / (2.0 * h)
    fd_h = (np.asarray(form.grad(x + h)) - np.asarray(form.grad(x - h))) / (2.0 * h)

    return PotentialCheck(
        grid_min=float(grid_min),
        grid_max=float(grid_max),
        points=int(points),
        growth_margin=float(np.min(v - c0 * (1.0 + x * x))),
        curvature_excess=float(np.max(np.abs(h2)) - c2),
        grad_fd_error=_rel_err(g, fd_g),
        hess_fd_error=_rel_err(h2, fd_h),
    )


def make_potential(
    name: str,
    form: _Form,
    *,
    c0: float,
    c2: float,
    params: Mapping[str, Any] | None = None,
    strict: bool = True,
    grid: tuple[float, float, int] = (-10.0, 10.0, 2001),
) -> Potential:
    """Build a Potential and validate its declared constants on `grid`.

    Raises:
        ParameterError: strict mode and c0 <= 0, c2 < 0, or a failed grid check.
    """
    if c2 < 0:
        raise ParameterError(f"{name}: c2 must be >= 0, got {c2}")
    if strict and not c0 > 0:
        raise ParameterError(
            f"{name}: c0={c0} does not give quadratic growth; set strict_phi false to run anyway"
        )
    check = check_potential(form, c0, c2, grid_min=grid[0], grid_max=grid[1], points=grid[2])
    if not check.passed:
        msg = f"{name}: potential validation failed: " + "; ".join(check.failures())
        if strict:
            raise ParameterError(msg)
        log.warning("%s (strict_phi off, continuing)", msg)
    return Potential(
        name=name, form=form, c0=float(c0), c2=float(c2), params=dict(params or {}),
        strict=strict, check=check,
    )


def quadratic_growth_constant(center: float) -> float:
    """Largest μ with 1 + (x-c)² >= μ (1 + x²) for all x.

    μ is the smaller eigenvalue of [[1, -c], [-c, 1 + c²]]; the eigenvalues multiply to 1, which
    gives the cancellation-free form below.
    """
    t = 2.0 + center * center
    return 2.0 / (t + math.sqrt(t * t - 4.0))


def builtin_quadratic(
    center: float = 0.0, scale: float = 1.0, *, strict: bool = True,
    grid: tuple[float, float, int] = (-10.0, 10.0, 2001),
) -> Potential:
    """φ(x) = scale·(1 + (x - center)²), with c0 = scale·μ(center) and c2 = 2·scale."""
    if not scale > 0:
        raise ParameterError(f"quadratic: scale must be > 0, got {scale}")
    return make_potential(
        "quadratic",
        QuadraticForm(float(center), float(scale)),
        c0=scale * quadratic_growth_constant(center),
        c2=2.0 * scale,
        params={"center": center, "scale": scale},
        strict=strict,
        grid=grid,
    )


def builtin_double_well(
    center: float = 0.0, scale: float = 1.0, height: float = 1.0, width: float = 0.5, *,
    strict: bool = True, grid: tuple[float, float, int] = (-10.0, 10.0, 2001),
) -> Potential:
    """Confining quadratic plus a Gaussian bump at `center`.

    φ(x) = scale·(1 + u²) + height·exp(-u²/(2 width²)), u = x - center. The bump is nonnegative so
    the growth constant is the quadratic one; |φ''| <= 2·scale + height/width².
    """
    if not scale > 0:
        raise ParameterError(f"double_well_confined: scale must be > 0, got {scale}")
    if height < 0 or not width > 0:
        raise ParameterError("double_well_confined: need height >= 0 and width > 0")
    return make_potential(
        "double_well_confined",
        DoubleWellForm(float(center), float(scale), float(height), float(width)),
        c0=scale * quadratic_growth_constant(center),
        c2=2.0 * scale + height / width**2,
        params={"center": center, "scale": scale, "height": height, "width": width},
        strict=strict,
        grid=grid,
    )


def builtin_constant(level: float = 1.0, *, strict: bool = False) -> Potential:
    """φ ≡ level. Only the movement term acts; rejected in strict mode (no quadratic growth)."""
    return make_potential(
        "constant", ConstantForm(float(level)), c0=0.0, c2=0.0,
        params={"level": level}, strict=strict,
    )


def custom_table(
    xs: list[float] | np.ndarray,
    values: list[float] | np.ndarray,
    *,
    tail_curvature: float = 2.0,
    c0: float | None = None,
    c2: float | None = None,
    strict: bool = True,
    grid: tuple[float, float, int] = (-10.0, 10.0, 2001),
) -> Potential:
    """Tabulated potential: cubic spline with end curvature `tail_curvature`, quadratic outside.

    Undeclared constants are derived: c2 from the spline's (piecewise linear) second derivative at
    the knots, c0 from the grid minimum of φ/(1+x²) capped by the tail asymptote curvature/2.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 3:
        raise InputError("custom-table needs matching 1-D xs/values with at least 3 points")
    if np.any(np.diff(xs) <= 0):
        raise InputError("custom-table xs must be strictly increasing")
    if not tail_curvature > 0:
        raise ParameterError("custom-table tail_curvature must be > 0")
    spline = CubicSpline(xs, ys, bc_type=((2, tail_curvature), (2, tail_curvature)))
    form = TableForm(spline, float(tail_curvature))
    if c2 is None:
        c2 = float(max(np.max(np.abs(spline(xs, 2))), tail_curvature))
    if c0 is None:
        g = np.linspace(grid[0], grid[1], grid[2])
        c0 = float(min(np.min(form.value(g) / (1.0 + g * g)), 0.5 * tail_curvature))
    return make_potential(
        "custom-table", form, c0=c0, c2=c2,
        params={"knots": int(xs.size), "tail_curvature": tail_curvature},
        strict=strict, grid=grid,
    )


def from_callables(
    name: str, f, df, d2f, *, c0: float, c2: float, strict: bool = True,
    grid: tuple[float, float, int] = (-10.0, 10.0, 2001),
) -> Potential:
    return make_potential(name, CallableForm(f, df, d2f), c0=c0, c2=c2, strict=strict, grid=grid)


def _load_table(path: str) -> tuple[list[float], list[float]]:
    p = Path(path).expanduser()
    if not p.exists():
        raise InputError(f"potential table not found: {p}")
    data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    try:
        return list(data["xs"]), list(data["values"])
    except (KeyError, TypeError) as e:
        raise InputError(f"potential table {p} needs `xs` and `values` lists") from e


def potential_from_config(cfg: PotentialConfig) -> Potential:
    grid = (cfg.grid_min, cfg.grid_max, cfg.grid_points)
    if cfg.kind == "quadratic":
        p = builtin_quadratic(cfg.center, cfg.scale, strict=cfg.strict_phi, grid=grid)
    elif cfg.kind == "double_well_confined":
        p = builtin_double_well(
            cfg.center, cfg.scale, cfg.bump_height, cfg.bump_width,
            strict=cfg.strict_phi, grid=grid,
        )
    elif cfg.kind == "constant":
        if cfg.strict_phi:
            raise ParameterError(
                "potential.kind=constant has no quadratic growth; set potential.strict_phi: false"
            )
        p = builtin_constant(cfg.level, strict=False)
    else:
        if cfg.table_path:
            xs, ys = _load_table(cfg.table_path)
        elif cfg.table_xs is not None and cfg.table_values is not None:
            xs, ys = cfg.table_xs, cfg.table_values
        else:
            raise InputError("custom-table potential needs table_path or table_xs/table_values")
        return custom_table(
            xs, ys, tail_curvature=cfg.tail_curvature, c0=cfg.c0, c2=cfg.c2,
            strict=cfg.strict_phi, grid=grid,
        )
    if cfg.c0 is not None or cfg.c2 is not None:
        p = make_potential(
            p.name, p.form,
            c0=p.c0 if cfg.c0 is None else cfg.c0,
            c2=p.c2 if cfg.c2 is None else cfg.c2,
            params=p.params, strict=cfg.strict_phi, grid=grid,
        )
    return p


# ── interaction kernels ───────────────────────────────────────────────────────
@dataclass(frozen=True)
class ZeroKernelForm:
    def value(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def grad(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def hess(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class QuadraticKernelForm:
    strength: float

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * self.strength * z * z

    def grad(self, z):
        return self.strength * np.asarray(z, dtype=float)

    def hess(self, z):
        return np.full_like(np.asarray(z, dtype=float), self.strength)


@dataclass(frozen=True)
class GaussianBumpKernelForm:
    strength: float
    width: float

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return self.strength * np.exp(-(z * z) / (2.0 * self.width**2))

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        return -(z / self.width**2) * self.value(z)

    def hess(self, z):
        z = np.asarray(z, dtype=float)
        s2 = self.width**2
        return (z * z / (s2 * s2) - 1.0 / s2) * self.value(z)


@dataclass(frozen=True)
class InteractionKernel:
    """Even pairwise kernel W; `c2` bounds |W''| and enters the step-size guard."""

    name: str
    form: _Form
    c2: float
    params: Mapping[str, Any] = field(default_factory=dict)
    symmetric: bool = True

    def eval(self, z):
        return self.form.value(z)

    def grad(self, z):
        return self.form.grad(z)

    def hess(self, z):
        return self.form.hess(z)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.name, "params": dict(self.params), "c2": self.c2}


def make_kernel(
    name: str, form: _Form, *, c2: float, params: Mapping[str, Any] | None = None,
    reach: float = 20.0, points: int = 2001,
) -> InteractionKernel:
    """Build a kernel after checking W(-z) = W(z) and W'(-z) = -W'(z) on [-reach, reach]."""
    z = np.linspace(0.0, reach, points)
    w_pos, w_neg = np.asarray(form.value(z)), np.asarray(form.value(-z))
    g_pos, g_neg = np.asarray(form.grad(z)), np.asarray(form.grad(-z))
    if np.any(np.abs(w_pos - w_neg) > SYMMETRY_TOL * np.maximum(1.0, np.abs(w_pos))):
        raise ParameterError(f"interaction kernel {name} is not even")
    if np.any(np.abs(g_pos + g_neg) > SYMMETRY_TOL * np.maximum(1.0, np.abs(g_pos))):
        raise ParameterError(f"interaction kernel {name} has a gradient that is not odd")
    return InteractionKernel(name=name, form=form, c2=float(c2), params=dict(params or {}))


def zero_kernel() -> InteractionKernel:
    return make_kernel("zero", ZeroKernelForm(), c2=0.0)


def quadratic_kernel(strength: float = 1.0) -> InteractionKernel:
    """W(z) = strength·z²/2 (attractive for strength > 0)."""
    return make_kernel(
        "quadratic", QuadraticKernelForm(float(strength)), c2=abs(strength),
        params={"strength": strength},
    )


def gaussian_bump_kernel(strength: float = 1.0, width: float = 0.5) -> InteractionKernel:
    """W(z) = strength·exp(-z²/(2 width²)) (repulsive for strength > 0)."""
    if not width > 0:
        raise ParameterError("gaussian-bump kernel needs width > 0")
    return make_kernel(
        "gaussian-bump", GaussianBumpKernelForm(float(strength), float(width)),
        c2=abs(strength) / width**2, params={"strength": strength, "width": width},
    )


def kernel_from_config(cfg: InteractionConfig) -> InteractionKernel | None:
    if cfg.kind == "none":
        return None
    if cfg.kind == "quadratic":
        return quadratic_kernel(cfg.strength)
    return gaussian_bump_kernel(cfg.strength, cfg.width)


# ── energy / drift helpers shared by the solver and the diagnostics ───────────
def effective_c2(p: Potential, w: InteractionKernel | None = None) -> float:
    """Curvature bound of the per-particle objective: c2(φ) + 2·sup|W''|."""
    return p.c2 + (2.0 * w.c2 if w is not None else 0.0)


def _pair_differences(x: np.ndarray) -> np.ndarray:
    return x[:, None] - x[None, :]


def potential_energy(p: Potential, x: np.ndarray) -> float:
    """(1/N) Σ φ(x_i)."""
    return float(np.mean(p.eval(x)))


def interaction_energy(w: InteractionKernel | None, x: np.ndarray) -> float:
    """(1/(2N²)) Σ_{i,j} W(x_i - x_j)."""
    if w is None:
        return 0.0
    n = x.size
    return float(np.sum(w.eval(_pair_differences(x))) / (2.0 * n * n))


def interaction_force(w: InteractionKernel | None, x: np.ndarray) -> np.ndarray:
    """(1/N) Σ_j W'(x_i - x_j), one entry per particle."""
    if w is None:
        return np.zeros_like(x)
    return np.sum(w.grad(_pair_differences(x)), axis=1) / x.size


def interaction_hessian(w: InteractionKernel, x: np.ndarray) -> np.ndarray:
    """Hessian of (1/(2N)) Σ_{i,j} W(x_i - x_j)."""
    hw = np.asarray(w.hess(_pair_differences(x)), dtype=float)
    np.fill_diagonal(hw, 0.0)
    out = -hw / x.size
    np.fill_diagonal(out, hw.sum(axis=1) / x.size)
    return out


def total_energy(p: Potential, w: InteractionKernel | None, x: np.ndarray) -> float:
    return potential_energy(p, x) + interaction_energy(w, x)


def drift_vector(p: Potential, w: InteractionKernel | None, x: np.ndarray) -> np.ndarray:
    """-φ'(x_i) - (1/N) Σ_j W'(x_i - x_j) for every particle."""
    x = np.asarray(x, dtype=float)
    return -np.asarray(p.grad(x), dtype=float) - interaction_force(w, x)


def total_drift(p: Potential, w: InteractionKernel | None, X, i: int) -> float:
    """Drift on particle i (1-based) of configuration X.

    Raises:
        ParameterError: i outside 1..N.
    """
    x = np.asarray(getattr(X, "positions", X), dtype=float)
    if not 1 <= i <= x.size:
        raise ParameterError(f"particle index {i} outside 1..{x.size}")
    xi = x[i - 1]
    out = -float(p.grad(xi))
    if w is not None:
        out -= float(np.sum(w.grad(xi - x))) / x.size
    return out
