"""Scenario execution: dispatch to the solvers and write run artifacts.

Every run produces a manifest (input hash, seed, library versions) next to
the delimited exports, so results are reproducible and attributable.  All
artifacts except the manifest are byte-deterministic for a fixed scenario
file and seed.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .damage import curvature_check, minimize_damage, state_to_csv
from .equilibrium import (DirichletData, field_to_csv, solve_equilibrium,
                          stress_field, stress_to_csv, total_energy, traction_residual)
from .errors import ScenarioError
from .geodesics import geodesic_summary, separating_geodesic
from .mesh import Mesh, build_annulus, build_rectangle, load_mesh, save_mesh
from .mumford_shah import (critical_delta_bracket, extract_crack,
                           multistart_minimize, at_energy, trace_to_csv)
from .scenario import Scenario, parse_scenario
from .thresholds import certify_gap, critical_thresholds, cut_stress_field, dual_bound
from . import fem

ENV_OUTPUT_ROOT = "GEOFRAC_OUTPUT_ROOT"


def build_geometry(scenario: Scenario) -> Mesh:
    if scenario.geometry == "annulus":
        return build_annulus(scenario.r, scenario.R, scenario.n_radial, scenario.n_angular)
    if scenario.geometry == "rectangle":
        return build_rectangle(scenario.a, scenario.L, scenario.nx, scenario.ny)
    return load_mesh(scenario.mesh_path)


def _output_dir(scenario: Scenario, scenario_path) -> Path:
    root = os.environ.get(ENV_OUTPUT_ROOT)
    out = scenario.output or (Path(scenario_path).stem + "_out" if scenario_path else "run_out")
    path = Path(root) / out if root else Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def run_scenario(scenario: Scenario, scenario_path=None) -> dict:
    """Execute a validated scenario; returns the manifest dictionary.

    Artifacts land in the scenario's output directory (overridable through
    the GEOFRAC_OUTPUT_ROOT environment variable).  Errors from the
    solvers propagate; the CLI maps them to exit codes.
    """
    out = _output_dir(scenario, scenario_path)
    mesh = build_geometry(scenario)
    save_mesh(mesh, out / "mesh.txt")
    artifacts = ["mesh.txt"]

    handler = {
        "equilibrium": _run_equilibrium,
        "ms": _run_ms,
        "geodesic": _run_geodesic,
        "threshold": _run_threshold,
        "dual": _run_dual,
        "damage": _run_damage,
    }[scenario.kind]
    summary = handler(scenario, mesh, out, artifacts)

    manifest = {
        "kind": scenario.kind,
        "seed": scenario.seed,
        "scenario_sha256": _file_hash(scenario_path),
        "versions": {
            "geofrac": __version__,
            "numpy": np.__version__,
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "artifacts": sorted(artifacts),
        "summary": summary,
    }
    _write_json(out / "manifest.json", manifest)
    if scenario.figures:
        from .plots import render_run_figures
        render_run_figures(out)
    return manifest


def run_scenario_file(path) -> dict:
    return run_scenario(parse_scenario(path), scenario_path=path)


def _file_hash(path) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _data(scenario: Scenario) -> DirichletData:
    return DirichletData(0.0, scenario.delta)


def _run_equilibrium(scenario, mesh, out, artifacts) -> dict:
    u = solve_equilibrium(mesh, _data(scenario))
    report = total_energy(mesh, u, None, 0.0 if scenario.G is None else scenario.G)
    field_to_csv(mesh, u, out / "field.csv")
    sigma = stress_field(mesh, u)
    stress_to_csv(mesh, sigma, out / "stress.csv")
    _write_json(out / "energy.json", report.as_dict())
    artifacts += ["field.csv", "stress.csv", "energy.json"]
    return {"bulk": report.bulk,
            "traction_residual": traction_residual(mesh, u)
            if (mesh.boundary_labels >= 3).any() else 0.0}


def _run_ms(scenario, mesh, out, artifacts) -> dict:
    rng = np.random.default_rng(scenario.seed)
    geodesic = separating_geodesic(mesh)
    state, trace = multistart_minimize(
        mesh, _data(scenario), scenario.G, epsilon=scenario.epsilon,
        eta=scenario.eta, max_iters=scenario.max_iters, tol=scenario.tol,
        seed_paths=[geodesic], rng=rng)
    crack = extract_crack(state.z, mesh, scenario.z_threshold)
    report = at_energy(state, mesh)
    field_to_csv(mesh, state.u, out / "field_u.csv")
    field_to_csv(mesh, state.z, out / "field_z.csv")
    crack.to_csv(out / "crack.csv")
    trace_to_csv(trace, out / "trace.csv")
    _write_json(out / "energy.json", report.as_dict())
    artifacts += ["field_u.csv", "field_z.csv", "crack.csv", "trace.csv", "energy.json"]
    return {"total": report.total, "min_z": float(state.z.min()),
            "converged": state.converged, "crack_length": crack.length()}


def _run_geodesic(scenario, mesh, out, artifacts) -> dict:
    path = separating_geodesic(mesh)
    path.to_csv(out / "geodesic.csv")
    summary = geodesic_summary(mesh, path)
    _write_json(out / "geodesic.json", summary)
    artifacts += ["geodesic.csv", "geodesic.json"]
    return summary


def _run_threshold(scenario, mesh, out, artifacts) -> dict:
    report = critical_thresholds(mesh, scenario.G)
    payload = report.as_dict()
    if scenario.bisect:
        rng = np.random.default_rng(scenario.seed)
        bracket = critical_delta_bracket(
            mesh, scenario.G, scenario.delta_lo, scenario.delta_hi,
            epsilon=scenario.epsilon, eta=scenario.eta,
            max_iters=scenario.max_iters, tol=scenario.tol,
            z_threshold=scenario.z_threshold, rng=rng)
        payload["bisection"] = {"delta_lo": bracket["delta_lo"],
                                "delta_hi": bracket["delta_hi"]}
        with open(out / "sweep.csv", "w", encoding="utf-8") as f:
            f.write("delta,total_energy,min_z\n")
            for probe in bracket["probes"]:
                f.write(f"{float(probe['delta'])!r},{float(probe['total'])!r},{float(probe['min_z'])!r}\n")
        artifacts.append("sweep.csv")
    _write_json(out / "threshold.json", payload)
    artifacts.append("threshold.json")
    return payload


def _run_dual(scenario, mesh, out, artifacts) -> dict:
    data = _data(scenario)
    u = solve_equilibrium(mesh, data)
    if scenario.omega == "none":
        sigma = stress_field(mesh, u)
    else:
        omega = region_indicator(mesh, scenario.omega, scenario.omega_lo, scenario.omega_hi)
        sigma = cut_stress_field(mesh, u, omega)
    bound = dual_bound(mesh, data, sigma)
    report = total_energy(mesh, u, None, 0.0).with_dual(bound)
    gap = certify_gap(report, bound)
    stress_to_csv(mesh, sigma, out / "stress.csv")
    _write_json(out / "energy.json", report.as_dict())
    _write_json(out / "gap.json", gap.as_dict())
    artifacts += ["stress.csv", "energy.json", "gap.json"]
    return {"dual_bound": bound, "gap": gap.gap, "certified": gap.certified}


def region_indicator(mesh: Mesh, kind: str, lo: float, hi: float) -> np.ndarray:
    """Per-triangle indicator of a congruence-aligned region.

    ``sector``: angular sector lo <= theta <= hi (radians, annulus);
    ``strip``: vertical strip lo <= x <= hi (rectangle).
    """
    centroids = fem.tri_geometry(mesh).centroids
    if kind == "sector":
        theta = np.arctan2(centroids[:, 1], centroids[:, 0])
        return (theta >= lo) & (theta <= hi)
    return (centroids[:, 0] >= lo) & (centroids[:, 0] <= hi)


def _run_damage(scenario, mesh, out, artifacts) -> dict:
    state, trace = minimize_damage(
        mesh, _data(scenario), gamma=scenario.gamma, gc=scenario.G,
        mode=scenario.mode, max_iters=scenario.max_iters, tol=scenario.tol,
        ball_radius=scenario.ball_radius)
    from .damage import relaxed_energy, sharp_energy
    report = sharp_energy(state, mesh) if scenario.mode == "sharp" else relaxed_energy(state, mesh)
    state_to_csv(mesh, state, out / "state.csv")
    with open(out / "trace.csv", "w", encoding="utf-8") as f:
        f.write("iter,energy\n")
        for i, e in enumerate(trace):
            f.write(f"{i},{float(e)!r}\n")
    _write_json(out / "energy.json", report.as_dict())
    artifacts += ["state.csv", "trace.csv", "energy.json"]
    summary = {"total": report.total, "damaged_fraction": float(np.mean(~state.sound)),
               "converged": state.converged}
    if state.crack is not None and not state.crack.is_empty:
        curv = curvature_check(state.crack, scenario.gamma, scenario.G)
        _write_json(out / "curvature.json", curv.as_dict())
        artifacts.append("curvature.json")
        summary["max_curvature"] = curv.max_discrete_curvature
    return summary


# ---------------------------------------------------------------------------
# Plot-ready columnar data
# ---------------------------------------------------------------------------

def emit_plot_data(run_dir) -> list[str]:
    """Write whitespace-separated .dat tables consumable by any plotting tool.

    Draws on the CSV exports of a finished run; raises ScenarioError
    listing the missing files when the directory holds no exports.
    """
    run_dir = Path(run_dir)
    candidates = {
        "trace.csv": "trace.dat",
        "sweep.csv": "sweep.dat",
        "field.csv": "field_profile.dat",
        "field_u.csv": "field_profile.dat",
    }
    present = [src for src in candidates if (run_dir / src).exists()]
    if not present:
        missing = ", ".join(sorted(set(candidates)))
        raise ScenarioError(f"{run_dir} holds no exports; expected one of: {missing}")

    written = []
    plot_dir = run_dir / "plotdata"
    plot_dir.mkdir(exist_ok=True)
    for src in present:
        dst = plot_dir / candidates[src]
        rows = (run_dir / src).read_text(encoding="utf-8").strip().splitlines()
        header = rows[0].split(",")
        table = [row.split(",") for row in rows[1:]]
        if src in ("field.csv", "field_u.csv"):
            # radial/vertical profile: distance from origin vs value
            pts = np.array([[float(x), float(y), float(v)] for x, y, v in table])
            dist = np.linalg.norm(pts[:, :2], axis=1)
            order = np.argsort(dist)
            with open(dst, "w", encoding="utf-8") as f:
                f.write("# distance value\n")
                for d, v in zip(dist[order], pts[order, 2]):
                    f.write(f"{float(d)!r} {float(v)!r}\n")
        else:
            with open(dst, "w", encoding="utf-8") as f:
                f.write("# " + " ".join(header) + "\n")
                for row in table:
                    f.write(" ".join(row) + "\n")
        written.append(str(dst))
    return written
