from __future__ import annotations

from pathlib import Path


def run_paths(out_dir: str | Path, scenario: str) -> dict[str, Path]:
    """
    Return all artifact paths for one run of a scenario.
    Creates the base directory if needed.

    Path layout:
        <out_dir>/<scenario>/
            trajectory.csv        ← k,t,i,x_i,lambda_i
            trajectory.json       ← run metadata
            fields/               ← one CSV per exported snapshot
            estimates.json        ← estimate-suite records
            sweep_tau.{json,csv}
            sweep_n.{json,csv}
            steady_state.json
            validate.json
    """
    base = Path(out_dir) / scenario
    base.mkdir(parents=True, exist_ok=True)

    return {
        "base": base,
        "trajectory_csv": base / "trajectory.csv",
        "trajectory_json": base / "trajectory.json",
        "fields": base / "fields",
        "estimates": base / "estimates.json",
        "sweep_tau_json": base / "sweep_tau.json",
        "sweep_tau_csv": base / "sweep_tau.csv",
        "sweep_n_json": base / "sweep_n.json",
        "sweep_n_csv": base / "sweep_n.csv",
        "steady_state": base / "steady_state.json",
        "validate": base / "validate.json",
    }
