# src/congestlab/app/harness/sweeps.py
# Version: 1.1.0
# Changelog: 1.1.0 — sweep_n also reports the Λ̃ / p̃ interpolant gaps and the W_1(ρ_N, ρ̃_N)
#   closed-form column; empirical rates are descriptive only (never a check).
# Changelog: 1.0.0 — τ-halving and N-doubling self-convergence sweeps with embedded estimate suites.
"""Self-convergence sweeps.

Both sweeps run one trajectory per resolution (on the job pool), then compare consecutive
resolutions. Cauchy distances live on the coarser record of each pair; the finest record has
none. A sweep passes when every check passes and every trajectory's estimate suite passes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError
from ..eulerian import (
    TestFunction,
    bump,
    bump_family,
    pressure_interpolant_gap,
    weak_form_residual_integrated,
)
from ..metrics import (
    EstimateReport,
    emp_vs_hist_closed_form,
    empirical_quantile,
    estimate_suite,
    histogram_quantile,
    snapshot_indices,
    w2_squared_between,
    wasserstein_p,
)
from ..trajectory import Trajectory, lambda_cross_resolution_distance, lambda_interpolant_gap
from .pool import TrajectoryJob, run_trajectories
from .scenarios import ExperimentConfig

log = logging.getLogger(__name__)

# Residuals below this are solver noise; ratio and slope checks do not apply.
RESIDUAL_FLOOR = 1e-9
# Cauchy distances below this count as zero.
DISTANCE_FLOOR = 1e-12
RATIO_BAND = (0.25, 0.75)
SLOPE_BAND = (0.7, 1.3)
DOUBLING_RATIO_MAX = 0.85


@dataclass(frozen=True)
class SweepCheck:
    name: str
    passed: bool
    detail: str = ""
    applies: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "pass": self.passed, "applies": self.applies, "detail": self.detail}


@dataclass
class SweepRecord:
    n: int
    tau: float
    T: float
    steps: int
    estimates: EstimateReport
    max_kkt_residual: float
    max_consistency_residual: float
    wall_time_s: float
    # distance to the next finer resolution (None on the finest record)
    cauchy_w1: float | None = None
    cauchy_w2: float | None = None
    lambda_cross: float | None = None
    weak_residual: float | None = None
    lambda_gap: float | None = None
    pressure_gap: float | None = None
    emp_hist_w1_closed: float | None = None
    emp_hist_w1_quadrature: float | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {k: v for k, v in self.__dict__.items() if k != "estimates"}
        d["estimates"] = self.estimates.to_dict()
        return d


CSV_COLUMNS = [
    "n", "tau", "T", "steps", "cauchy_w1", "cauchy_w2", "lambda_cross", "weak_residual",
    "lambda_gap", "pressure_gap", "emp_hist_w1_closed", "emp_hist_w1_quadrature",
    "max_kkt_residual", "max_consistency_residual", "wall_time_s",
]


@dataclass
class SweepResult:
    kind: str
    scenario: str
    records: list[SweepRecord] = field(default_factory=list)
    checks: list[SweepCheck] = field(default_factory=list)
    rates: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.applies) and all(
            r.estimates.passed for r in self.records
        )

    def failures(self) -> list[str]:
        out = [c.name for c in self.checks if c.applies and not c.passed]
        for r in self.records:
            out += [f"estimates[N={r.n},tau={r.tau:g}].{f}" for f in r.estimates.failures()]
        return out

    def column(self, name: str) -> list[Any]:
        return [getattr(r, name) for r in self.records]

    def table(self) -> tuple[list[str], list[list[Any]]]:
        rows = [["" if getattr(r, c) is None else getattr(r, c) for c in CSV_COLUMNS] for r in self.records]
        return [*CSV_COLUMNS, "estimates_pass"], [
            [*row, r.estimates.passed] for row, r in zip(rows, self.records, strict=True)
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "scenario": self.scenario,
            "pass": self.passed,
            "failures": self.failures(),
            "rates": self.rates,
            "checks": [c.to_dict() for c in self.checks],
            "records": [r.to_dict() for r in self.records],
        }


def _record(traj: Trajectory, snapshots: int) -> SweepRecord:
    return SweepRecord(
        n=traj.n,
        tau=traj.tau,
        T=traj.T,
        steps=traj.steps,
        estimates=estimate_suite(traj, snapshots=snapshots),
        max_kkt_residual=max((r.kkt_residual for r in traj.reports), default=0.0),
        max_consistency_residual=max((r.consistency_residual for r in traj.reports), default=0.0),
        wall_time_s=float(sum(r.wall_time_s for r in traj.reports)),
    )


def _loglog_slope(xs, ys) -> float:
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _non_increasing(values: list[float]) -> bool:
    return all(b <= a * (1.0 + 1e-9) + DISTANCE_FLOOR for a, b in zip(values, values[1:], strict=False))


def default_family(traj: Trajectory) -> list[TestFunction]:
    """Bumps covering the space-time support of a trajectory: one wide family, two half-width."""
    x = traj.positions()
    lo, hi = float(x.min()), float(x.max())
    c = 0.5 * (lo + hi)
    r = 0.5 * (hi - lo) + 0.5
    return [*bump_family(c, r), bump(c - 0.5 * r, 0.5 * r), bump(c + 0.5 * r, 0.5 * r)]


# ── τ sweep ───────────────────────────────────────────────────────────────────
def check_halving(taus: list[float]) -> None:
    if len(taus) < 2:
        raise ConfigError("sweep-tau needs at least two time steps in tau_list.")
    for a, b in zip(taus, taus[1:], strict=False):
        if not math.isclose(b, a / 2.0, rel_tol=1e-9):
            raise ConfigError(
                f"tau_list must halve at every entry; got {a:g} -> {b:g}.\n"
                f"· Example: tau_list: [{taus[0]:g}, {taus[0] / 2:g}, {taus[0] / 4:g}]"
            )


def sweep_tau(
    cfg: ExperimentConfig,
    *,
    n: int | None = None,
    family: list[TestFunction] | None = None,
    progress: bool = False,
) -> SweepResult:
    """Fixed N, halving τ, identical X⁰.

    Columns: W_2 at time T between consecutive τ, and the time-integrated weak-form residual.
    Checks: the W_2 column does not increase; residual ratios under halving lie in [0.25, 0.75];
    the log-log residual slope lies in [0.7, 1.3].
    """
    taus = list(cfg.tau_list)
    check_halving(taus)
    n = n or cfg.n_list[0]
    X0 = cfg.initial_configuration(n)
    trajs = run_trajectories(
        [TrajectoryJob(cfg, n, tau, X0=X0) for tau in taus], workers=cfg.workers, progress=progress
    )
    fam = family or default_family(trajs[0])

    result = SweepResult(kind="tau", scenario=cfg.scenario)
    for traj in trajs:
        rec = _record(traj, cfg.snapshots)
        rec.weak_residual = weak_form_residual_integrated(traj, fam)
        result.records.append(rec)
    for rec, a, b in zip(result.records, trajs, trajs[1:], strict=False):
        rec.cauchy_w2 = math.sqrt(w2_squared_between(a.states[-1], b.states[-1]))

    w2 = [r.cauchy_w2 for r in result.records[:-1]]
    result.checks.append(SweepCheck("cauchy_w2_non_increasing", _non_increasing(w2), f"{w2}"))

    res = [r.weak_residual for r in result.records]
    live = all(v > RESIDUAL_FLOOR for v in res)
    ratios = [b / a for a, b in zip(res, res[1:], strict=False)] if live else []
    lo, hi = RATIO_BAND
    result.checks.append(
        SweepCheck(
            "weak_residual_halving_ratio",
            all(lo <= q <= hi for q in ratios),
            f"ratios={[round(q, 4) for q in ratios]}",
            applies=live,
        )
    )
    if live:
        slope = _loglog_slope(taus, res)
        result.rates["weak_residual_order"] = slope
        result.checks.append(
            SweepCheck(
                "weak_residual_order",
                SLOPE_BAND[0] <= slope <= SLOPE_BAND[1],
                f"slope={slope:.4f}",
            )
        )
    if all(d > DISTANCE_FLOOR for d in w2) and len(w2) >= 2:
        result.rates["cauchy_w2_order"] = _loglog_slope(taus[:-1], w2)
    log.info("sweep_tau N=%d taus=%s pass=%s", n, taus, result.passed)
    return result


# ── N sweep ───────────────────────────────────────────────────────────────────
def check_doubling(ns: list[int]) -> None:
    if len(ns) < 2:
        raise ConfigError("sweep-n needs at least two particle counts in n_list.")
    for a, b in zip(ns, ns[1:], strict=False):
        if b != 2 * a:
            raise ConfigError(
                f"n_list must double at every entry; got {a} -> {b}.\n"
                f"· Example: n_list: [{ns[0]}, {2 * ns[0]}, {4 * ns[0]}]"
            )


def sup_w1_over_snapshots(a: Trajectory, b: Trajectory, snapshots: int) -> float:
    """max over the snapshot grid of W_1(ρ_{N_a}(t), ρ_{N_b}(t)); both runs share τ and K."""
    return max(
        wasserstein_p(empirical_quantile(a.states[k]), empirical_quantile(b.states[k]), 1)
        for k in snapshot_indices(a.steps, snapshots)
    )


def _doubling_check(name: str, values: list[float]) -> SweepCheck:
    live = all(v > DISTANCE_FLOOR for v in values)
    ratios = [b / a for a, b in zip(values, values[1:], strict=False)] if live else []
    return SweepCheck(
        name,
        all(q <= DOUBLING_RATIO_MAX for q in ratios),
        f"ratios={[round(q, 4) for q in ratios]}",
        applies=live,
    )


def sweep_n(cfg: ExperimentConfig, *, tau: float | None = None, progress: bool = False) -> SweepResult:
    """Fixed τ, doubling N, each X⁰ sampled from the same ρ⁰.

    Columns: sup-over-snapshots W_1(ρ_N, ρ_{2N}); L² distance of consecutive Λ̃ interpolants;
    √∫ sup|Λ̃_N - Λ_N|² and √∫ sup|p_N - p̃_N|²; W_1(ρ_N, ρ̃_N) at T by closed form and by quantile
    quadrature. Checks: the W_1 column strictly decreases; both interpolant gaps shrink by at
    least 0.85 per doubling; closed form and quadrature agree.
    """
    ns = list(cfg.n_list)
    check_doubling(ns)
    tau = tau or cfg.tau_list[0]
    trajs = run_trajectories(
        [TrajectoryJob(cfg, n, tau) for n in ns], workers=cfg.workers, progress=progress
    )

    result = SweepResult(kind="N", scenario=cfg.scenario)
    oracle_err = 0.0
    for traj in trajs:
        rec = _record(traj, cfg.snapshots)
        rec.lambda_gap = math.sqrt(lambda_interpolant_gap(traj))
        rec.pressure_gap = math.sqrt(pressure_interpolant_gap(traj))
        final = traj.states[-1]
        rec.emp_hist_w1_closed = emp_vs_hist_closed_form(final, 1)
        rec.emp_hist_w1_quadrature = wasserstein_p(
            empirical_quantile(final), histogram_quantile(final), 1
        )
        oracle_err = max(oracle_err, abs(rec.emp_hist_w1_closed - rec.emp_hist_w1_quadrature))
        result.records.append(rec)
    for rec, a, b in zip(result.records, trajs, trajs[1:], strict=False):
        rec.cauchy_w1 = sup_w1_over_snapshots(a, b, cfg.snapshots)
        rec.lambda_cross = lambda_cross_resolution_distance(a, b)

    w1 = [r.cauchy_w1 for r in result.records[:-1]]
    result.checks.append(
        SweepCheck(
            "cauchy_w1_decreasing",
            all(b < a for a, b in zip(w1, w1[1:], strict=False)),
            f"{w1}",
        )
    )
    result.checks.append(_doubling_check("lambda_interpolant_gap", result.column("lambda_gap")))
    result.checks.append(_doubling_check("pressure_interpolant_gap", result.column("pressure_gap")))
    result.checks.append(
        SweepCheck(
            "emp_hist_w1_closed_form",
            oracle_err <= cfg.tolerances.oracle,
            f"max |closed - quadrature| = {oracle_err:.3g}",
        )
    )
    if len(w1) >= 2 and all(d > DISTANCE_FLOOR for d in w1):
        result.rates["cauchy_w1_order"] = -_loglog_slope(ns[:-1], w1)
    log.info("sweep_n tau=%g N=%s pass=%s", tau, ns, result.passed)
    return result
