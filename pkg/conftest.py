"""Pytest configuration for congestlab.

Slow tests (``@pytest.mark.slow``) run full trajectories at benchmark sizes: sweeps over
N up to 256, the steady-state benchmark at N=64, the validate suites. On a hosted CI runner
they would dominate the job, so this hook turns them into a clean *skip* unless
``CONGESTLAB_RUN_SLOW=1`` is set. Unit-test behavior is unchanged.

Shared fixtures: a seeded generator and the φ = 1 + x² potential.
"""
from __future__ import annotations

import os

import numpy as np
import pytest

from congestlab.app.potential import builtin_quadratic

_SLOW_ENV = "CONGESTLAB_RUN_SLOW"


def _slow_enabled() -> bool:
    return os.environ.get(_SLOW_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


def pytest_collection_modifyitems(items):
    """Skip slow tests unless CONGESTLAB_RUN_SLOW is set."""
    slow = [it for it in items if it.get_closest_marker("slow")]
    if not slow or _slow_enabled():
        return
    skip = pytest.mark.skip(reason=f"slow test — set {_SLOW_ENV}=1 to run")
    for item in slow:
        item.add_marker(skip)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quadratic():
    """φ(x) = 1 + x², c2 = 2."""
    return builtin_quadratic()
