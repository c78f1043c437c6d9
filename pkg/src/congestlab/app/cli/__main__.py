# src/congestlab/app/cli/__main__.py
# Version: 1.1.0
# Changelog: 1.1.0 — argparse failures go through the same ❌ presentation as library errors
#   (error() overridden); every CongestLabError becomes ❌ + remediation bullets and exit 2 (bad
#   input, nothing was run) or 1 (a run failed).
# Changelog: 1.0.0 — subcommands simulate, sweep-tau, sweep-n, steady-state, validate,
#   export-fields. Exit code is nonzero whenever an asserted invariant fails.
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..config import CONFIG
from ..errors import CongestLabError, ConfigError, InputError, ParameterError
from ..export import write_fields, write_json, write_sweep, write_trajectory
from ..harness.benchmarks import scaling_probe, steady_state_benchmark, uniqueness_probe
from ..harness.scenarios import ExperimentConfig, load_experiment
from ..harness.sweeps import SweepResult, sweep_n, sweep_tau
from ..harness.validate import run_validation
from ..metrics import estimate_suite
from ..trajectory import Trajectory, integrate
from ..utils.run_paths import run_paths
from . import output as cli

PROG = "congestlab"
DEFAULT_SCENARIO = "quadratic"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose errors match the rest of the tool's output."""

    def error(self, message: str):  # noqa: D102
        cli.error(
            "Invalid arguments — nothing was run.\n"
            f"· {message}\n"
            f"· Run `{PROG} --help` for the full list of options."
        )
        raise SystemExit(EXIT_USAGE)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument(
        "--scenario",
        default=None,
        help=f"Scenario stem under benchmarks/scenarios/ (default: {DEFAULT_SCENARIO})",
    )
    src.add_argument("--config", default=None, help="Path to a scenario yaml")
    p.add_argument(
        "--rho0",
        default=None,
        help="Initial density: uniform:<a>,<b> | random | stem under data/densities/ | yaml path",
    )
    p.add_argument("--n", type=int, default=None, help="Number of particles")
    p.add_argument("--tau", type=float, default=None, help="Time step")
    p.add_argument("--T", dest="T", type=float, default=None, help="Final time (multiple of tau)")
    p.add_argument("--out", default=None, help="Output directory for CSV/JSON artifacts")
    p.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps")
    p.add_argument("--seed", type=int, default=None, help="Seed for randomized inputs")
    p.add_argument("--progress", action="store_true", help="Show progress bars")
    p.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help=f"Logging level (default: {CONFIG.log_level}, env CONGESTLAB_LOG_LEVEL)",
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Hard-congestion particle JKO simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="Integrate one trajectory and check the a-priori estimates")
    _common(s)

    s = sub.add_parser("sweep-tau", help="Self-convergence in tau at fixed N")
    _common(s)
    s.add_argument("--taus", type=_floats, default=None, help="Halving list, e.g. 1e-2,5e-3")

    s = sub.add_parser("sweep-n", help="Self-convergence in N at fixed tau")
    _common(s)
    s.add_argument("--ns", type=_ints, default=None, help="Doubling list, e.g. 16,32,64")

    s = sub.add_parser("steady-state", help="Quadratic steady-state and uniqueness benchmarks")
    _common(s)
    s.add_argument("--ns", type=_ints, default=None, help="Particle counts (default: 2,3,64)")
    s.add_argument("--scaling", type=_ints, default=None, help="Also time steps for these N")

    s = sub.add_parser("validate", help="Run the property suites")
    _common(s)
    s.add_argument("--quick", action="store_true", help="Small sizes (smoke run)")

    s = sub.add_parser("export-fields", help="Integrate and write Eulerian fields per snapshot")
    _common(s)
    s.add_argument("--every", type=int, default=1, help="Write every k-th step (and the last)")
    return p


def _load(args: argparse.Namespace, **extra) -> ExperimentConfig:
    overrides = dict(
        rho0=args.rho0,
        T=args.T,
        workers=args.workers,
        seed=args.seed,
        output_dir=args.out,
        **extra,
    )
    if args.n is not None and "n_list" not in extra:
        overrides["n_list"] = [args.n]
    if args.tau is not None and "tau_list" not in extra:
        overrides["tau_list"] = [args.tau]
    return load_experiment(args.config or args.scenario or DEFAULT_SCENARIO, **overrides)


def _paths(args: argparse.Namespace, cfg: ExperimentConfig) -> dict[str, Path] | None:
    return run_paths(args.out, cfg.scenario) if args.out else None


def _integrate(cfg: ExperimentConfig, progress: bool) -> Trajectory:
    n, tau = cfg.n_list[0], cfg.tau_list[0]
    cli.step(f"Integrating {cfg.scenario}: N={n} tau={tau:g} T={cfg.T:g}")
    traj = integrate(
        cfg.initial_configuration(n), cfg.build_potential(), cfg.build_kernel(), tau, cfg.T,
        config=cfg.solver, progress=progress,
    )
    cli.ok(f"{traj.steps} steps in {sum(r.wall_time_s for r in traj.reports):.2f}s")
    return traj


def _step_invariants(cfg: ExperimentConfig, traj: Trajectory) -> bool:
    tol = cfg.tolerances
    checks = [
        ("min gap - 1/N", min(float(s.gaps.min() - 1.0 / s.n) for s in traj.states[1:]), -tol.gap, ">="),
        ("min lambda", min(m.min_value() for m in traj.multipliers), -tol.lambda_neg, ">="),
        ("max slackness", max(r.slackness_residual for r in traj.reports), tol.slackness, "<="),
        ("max |lambda_N raw|", max(r.consistency_residual for r in traj.reports), tol.consistency, "<="),
        ("min dissipation slack", min(r.dissipation_slack for r in traj.reports), -tol.dissipation, ">="),
    ]
    ok = True
    for name, value, limit, op in checks:
        passed = value >= limit if op == ">=" else value <= limit
        cli.verdict(passed, f"{name} = {value:.3g} ({op} {limit:.3g})")
        ok &= passed
    return ok


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    cli.section("Simulate")
    traj = _integrate(cfg, args.progress)
    if traj.steps == 0:
        cli.info("T = 0: nothing to check")
        return EXIT_OK
    ok = _step_invariants(cfg, traj)
    rep = estimate_suite(traj, snapshots=cfg.snapshots)
    cli.section("Estimates")
    cli.info(f"phi_bar = {rep.phi_bar:.6g}")
    for r in rep.records:
        cli.verdict(r.passed, f"{r.name}: {r.lhs:.4g} <= {r.rhs:.4g}", applies=r.applies)
    ok &= rep.passed
    paths = _paths(args, cfg)
    if paths:
        write_trajectory(traj, paths["trajectory_csv"], paths["trajectory_json"])
        write_json(paths["estimates"], rep)
        cli.info(f"wrote {paths['base']}")
    return EXIT_OK if ok else EXIT_FAILED


def _report_sweep(result: SweepResult) -> None:
    for c in result.checks:
        cli.verdict(c.passed, f"{c.name}: {c.detail}", applies=c.applies)
    for r in result.records:
        if not r.estimates.passed:
            cli.fail(f"estimates N={r.n} tau={r.tau:g}: {', '.join(r.estimates.failures())}")
    for name, rate in result.rates.items():
        cli.info(f"{name} = {rate:.3f} (descriptive)")


def cmd_sweep_tau(args: argparse.Namespace) -> int:
    cfg = _load(args, **({"tau_list": args.taus} if args.taus else {}))
    cli.section("Sweep tau")
    cli.step(f"{cfg.scenario}: N={cfg.n_list[0]} taus={cfg.tau_list}")
    result = sweep_tau(cfg, progress=args.progress)
    _report_sweep(result)
    paths = _paths(args, cfg)
    if paths:
        write_sweep(result, paths["sweep_tau_json"], paths["sweep_tau_csv"])
        cli.info(f"wrote {paths['sweep_tau_csv']}")
    return EXIT_OK if result.passed else EXIT_FAILED


def cmd_sweep_n(args: argparse.Namespace) -> int:
    cfg = _load(args, **({"n_list": args.ns} if args.ns else {}))
    cli.section("Sweep N")
    cli.step(f"{cfg.scenario}: tau={cfg.tau_list[0]:g} N={cfg.n_list}")
    result = sweep_n(cfg, progress=args.progress)
    _report_sweep(result)
    paths = _paths(args, cfg)
    if paths:
        write_sweep(result, paths["sweep_n_json"], paths["sweep_n_csv"])
        cli.info(f"wrote {paths['sweep_n_csv']}")
    return EXIT_OK if result.passed else EXIT_FAILED


def cmd_steady_state(args: argparse.Namespace) -> int:
    cfg = _load(args)
    ns = args.ns or ([args.n] if args.n else CONFIG.validation.steady_sizes)
    cli.section("Steady state")
    ok = True
    reports = []
    for n in ns:
        cli.step(f"N={n}")
        r = steady_state_benchmark(cfg, n, progress=args.progress)
        reports.append(r)
        cli.verdict(
            r.position_error <= r.position_bound,
            f"max |x_i - lattice_i| = {r.position_error:.3g} (<= {r.position_bound:.3g})",
        )
        cli.verdict(r.lambda_min >= -r.lambda_tol, f"min lambda = {r.lambda_min:.3g}")
        cli.verdict(
            r.lambda_error <= r.lambda_match_tol,
            f"max |lambda_i + (2/N) sum x_j| = {r.lambda_error:.3g} (<= {r.lambda_match_tol:.3g})",
        )
        if r.mean_decay_exponent is None:
            cli.partial("mean decay exponent (initial mean is zero; not fitted)")
        else:
            cli.verdict(r.mean_decay_ok, f"mean decay exponent = {r.mean_decay_exponent:.4f} (-2)")
        ok &= r.passed

    cli.section("Uniqueness")
    u = uniqueness_probe(cfg)
    cli.verdict(u.bitwise_equal, "identical inputs give bitwise-equal trajectories")
    cli.verdict(
        u.perturbed_difference <= u.perturbed_bound,
        f"perturbed inner guesses: |dX_T| = {u.perturbed_difference:.3g} "
        f"(<= {u.perturbed_bound:.3g})",
    )
    cli.verdict(u.pav_order_difference <= 1e-12, f"pooling orders differ by {u.pav_order_difference:.3g}")
    ok &= u.passed

    payload = {"steady_state": reports, "uniqueness": u}
    if args.scaling:
        cli.section("Scaling")
        s = scaling_probe(cfg, args.scaling)
        for n, t in zip(s.ns, s.mean_step_time_s, strict=True):
            cli.info(f"N={n}: {1e3 * t:.2f} ms/step")
        cli.verdict(s.subquadratic, f"log-log slope {s.slope:.2f} (< 2)")
        payload["scaling"] = s
    paths = _paths(args, cfg)
    if paths:
        write_json(paths["steady_state"], payload)
        cli.info(f"wrote {paths['steady_state']}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_validate(args: argparse.Namespace) -> int:
    cli.section("Validate")
    cli.step("Running property suites" + (" (quick)" if args.quick else ""))
    report = run_validation(quick=args.quick, seed=args.seed)
    for s in report.suites:
        cli.verdict(s.passed, f"{s.name} ({s.wall_time_s:.1f}s)")
    if args.out:
        paths = run_paths(args.out, "validate")
        write_json(paths["validate"], report)
        cli.info(f"wrote {paths['validate']}")
    if not report.passed:
        cli.numbered_list(report.failures())
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_export_fields(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if not args.out:
        raise ConfigError("export-fields needs --out <dir>.")
    cli.section("Export fields")
    traj = _integrate(cfg, args.progress)
    paths = run_paths(args.out, cfg.scenario)
    files = write_fields(traj, paths["fields"], every=args.every)
    write_trajectory(traj, paths["trajectory_csv"], paths["trajectory_json"])
    cli.ok(f"{len(files)} snapshot file(s) in {paths['fields']}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-tau": cmd_sweep_tau,
    "sweep-n": cmd_sweep_n,
    "steady-state": cmd_steady_state,
    "validate": cmd_validate,
    "export-fields": cmd_export_fields,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or CONFIG.log_level).upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, InputError) as e:
        cli.error(str(e))
        return EXIT_USAGE
    except CongestLabError as e:
        cli.error(str(e))
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
