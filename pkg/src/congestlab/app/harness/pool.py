# src/congestlab/app/harness/pool.py
"""Independent (N, τ) trajectory jobs on a process pool.

Each job rebuilds its potential, kernel and initial configuration from the (picklable)
ExperimentConfig inside the worker, so nothing but plain data crosses the process boundary.
Results come back in submission order; the parent is the only writer.
"""

from __future__ import annotations

import concurrent.futures as cf
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, TypeVar

from ..jko import ParticleConfig
from ..trajectory import Trajectory, integrate
from .scenarios import ExperimentConfig

try:
    from tqdm import tqdm  # type: ignore
except Exception:  # pragma: no cover
    tqdm = None  # type: ignore

log = logging.getLogger(__name__)

J = TypeVar("J")
R = TypeVar("R")


@dataclass(frozen=True)
class TrajectoryJob:
    cfg: ExperimentConfig
    n: int
    tau: float
    T: float | None = None  # defaults to cfg.T
    X0: ParticleConfig | None = None  # defaults to sampling cfg.rho0 with n particles


def run_trajectory_job(job: TrajectoryJob) -> Trajectory:
    cfg = job.cfg
    X0 = job.X0 if job.X0 is not None else cfg.initial_configuration(job.n)
    return integrate(
        X0,
        cfg.build_potential(),
        cfg.build_kernel(),
        job.tau,
        cfg.T if job.T is None else job.T,
        config=cfg.solver,
    )


def run_jobs(
    fn: Callable[[J], R], jobs: Sequence[J], *, workers: int = 1, progress: bool = False
) -> list[R]:
    """Map `fn` over `jobs`; workers == 1 runs in-process."""
    if workers <= 1 or len(jobs) <= 1:
        it: Any = jobs
        if progress and tqdm is not None:
            it = tqdm(jobs, desc="jobs", unit="job", leave=False)
        return [fn(j) for j in it]

    log.info("scheduling %d jobs on %d workers", len(jobs), workers)
    results: list[R | None] = [None] * len(jobs)
    with cf.ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
        futs = {ex.submit(fn, j): i for i, j in enumerate(jobs)}
        done: Any = cf.as_completed(futs)
        if progress and tqdm is not None:
            done = tqdm(done, total=len(futs), desc="jobs", unit="job", leave=False)
        for fut in done:
            results[futs[fut]] = fut.result()
    return results  # type: ignore[return-value]


def run_trajectories(
    jobs: Sequence[TrajectoryJob], *, workers: int = 1, progress: bool = False
) -> list[Trajectory]:
    return run_jobs(run_trajectory_job, jobs, workers=workers, progress=progress)
