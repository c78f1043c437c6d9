# src/congestlab/app/oracles.py
"""Brute-force references for the step solver, usable for N up to about 10.

Both enumerate the 2^(N-1) possible contact sets. For each set, the problem restricted to the
affine hull of that face (clusters move rigidly) is solved without inequality constraints; the
candidate is kept when it is admissible. The true solution is the admissible candidate with the
smallest objective: it lies on some face and minimizes over that face's hull, and every other
admissible point scores no better.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize

from .errors import ParameterError
from .jko import GAP_TOL, ParticleConfig
from .potential import InteractionKernel, Potential, total_energy

ORACLE_MAX_N = 12


def _faces(n: int):
    for bits in itertools.product((False, True), repeat=n - 1):
        yield np.array(bits, dtype=bool)


def _layout(active: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, int]:
    ids = np.concatenate([[0], np.cumsum(~active)]).astype(int)
    first = np.flatnonzero(np.concatenate([[True], ~active]))
    offsets = (np.arange(n) - first[ids]) / n
    return ids, offsets, first.size


def _admissible(x: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.diff(x) >= 1.0 / x.size - tol))


def brute_force_projection(Y) -> np.ndarray:
    """Projection onto K_N by enumerating contact sets; cluster positions are averages."""
    y = np.asarray(Y, dtype=float).reshape(-1)
    n = y.size
    if n > ORACLE_MAX_N:
        raise ParameterError(f"brute-force projection is limited to N <= {ORACLE_MAX_N}")
    if n <= 1:
        return y.copy()
    best, best_d = None, np.inf
    for active in _faces(n):
        ids, offsets, nb = _layout(active, n)
        u = np.bincount(ids, weights=y - offsets, minlength=nb) / np.bincount(ids, minlength=nb)
        x = u[ids] + offsets
        if not _admissible(x, 1e-14):
            continue
        d = float(np.sum((x - y) ** 2))
        if d < best_d:
            best, best_d = x, d
    return best


def active_set_step(
    Xk: ParticleConfig, p: Potential, w: InteractionKernel | None, tau: float
) -> ParticleConfig:
    """Minimizing-movement step by contact-set enumeration (trust-region Newton per face)."""
    xk = Xk.positions
    n = xk.size
    if n > ORACLE_MAX_N:
        raise ParameterError(f"active-set enumeration is limited to N <= {ORACLE_MAX_N}")

    def objective(x: np.ndarray) -> float:
        d = x - xk
        return n * total_energy(p, w, x) + float(d @ d) / (2.0 * tau)

    def gradient(x: np.ndarray) -> np.ndarray:
        g = np.asarray(p.grad(x), dtype=float) + (x - xk) / tau
        if w is not None:
            g = g + np.sum(w.grad(x[:, None] - x[None, :]), axis=1) / n
        return g

    def hessian(x: np.ndarray) -> np.ndarray:
        h = np.diag(np.asarray(p.hess(x), dtype=float) + 1.0 / tau)
        if w is not None:
            hw = np.asarray(w.hess(x[:, None] - x[None, :]), dtype=float)
            np.fill_diagonal(hw, 0.0)
            h = h - hw / n
            h[np.diag_indices(n)] += hw.sum(axis=1) / n
        return h

    best, best_val = None, np.inf
    for active in _faces(n):
        ids, offsets, nb = _layout(active, n)
        embed = np.zeros((n, nb))
        embed[np.arange(n), ids] = 1.0
        u0 = np.bincount(ids, weights=xk - offsets, minlength=nb) / np.bincount(ids, minlength=nb)
        res = minimize(
            lambda u, e=embed, o=offsets: objective(e @ u + o),
            u0,
            jac=lambda u, e=embed, o=offsets: e.T @ gradient(e @ u + o),
            hess=lambda u, e=embed, o=offsets: e.T @ hessian(e @ u + o) @ e,
            method="trust-exact",
            options={"gtol": 1e-13, "maxiter": 500},
        )
        x = embed @ res.x + offsets
        if not _admissible(x, GAP_TOL):
            continue
        val = objective(x)
        if val < best_val:
            best, best_val = x, val
    return ParticleConfig(best)
