"""Figure rendering for finished runs: PNG files next to the CSV exports.

Everything draws from the delimited artifacts (mesh.txt plus the CSVs), so
figures can be regenerated offline from a run directory at any time.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mesh import load_mesh

plt.rcParams.update({
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (4.8, 3.6),
    "savefig.dpi": 150,
})


def _read_csv(path: Path):
    rows = path.read_text(encoding="utf-8").strip().splitlines()
    header = rows[0].split(",")
    data = np.array([[_maybe_float(x) for x in row.split(",")] for row in rows[1:]])
    return header, data


def _maybe_float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        return np.nan


def _save(fig, path: Path, written: list):
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    written.append(str(path))


def render_run_figures(run_dir) -> list[str]:
    """Render every figure the run's exports support; returns written paths."""
    run_dir = Path(run_dir)
    fig_dir = run_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    written: list[str] = []

    mesh = load_mesh(run_dir / "mesh.txt") if (run_dir / "mesh.txt").exists() else None
    tri_kwargs = None
    if mesh is not None:
        tri_kwargs = dict(x=mesh.vertices[:, 0], y=mesh.vertices[:, 1],
                          triangles=mesh.triangles)

    for name, title in (("field.csv", "displacement"), ("field_u.csv", "displacement"),
                        ("field_z.csv", "phase field")):
        src = run_dir / name
        if not src.exists() or tri_kwargs is None:
            continue
        _, data = _read_csv(src)
        fig, ax = plt.subplots()
        tpc = ax.tripcolor(tri_kwargs["x"], tri_kwargs["y"], tri_kwargs["triangles"],
                           data[:, 2], shading="gouraud")
        fig.colorbar(tpc, ax=ax, label=title)
        _overlay_chains(ax, run_dir)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        _save(fig, fig_dir / (src.stem + ".png"), written)

    state = run_dir / "state.csv"
    if state.exists() and tri_kwargs is not None:
        _, data = _read_csv(state)
        fig, ax = plt.subplots()
        tpc = ax.tripcolor(tri_kwargs["x"], tri_kwargs["y"], tri_kwargs["triangles"],
                           facecolors=data[:, 1], vmin=0.0, vmax=1.0)
        fig.colorbar(tpc, ax=ax, label="damage density")
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        _save(fig, fig_dir / "damage.png", written)

    trace = run_dir / "trace.csv"
    if trace.exists():
        header, data = _read_csv(trace)
        fig, ax = plt.subplots()
        if data.shape[1] >= 4:
            ax.plot(data[:, 0], data[:, 1], label="bulk")
            ax.plot(data[:, 0], data[:, 2], label="surface")
            ax.plot(data[:, 0], data[:, 3], label="total", color="k")
            ax.legend(frameon=False)
        else:
            ax.plot(data[:, 0], data[:, 1], color="k")
        ax.set_xlabel("iteration")
        ax.set_ylabel("energy")
        _save(fig, fig_dir / "trace.png", written)

    sweep = run_dir / "sweep.csv"
    if sweep.exists():
        _, data = _read_csv(sweep)
        order = np.argsort(data[:, 0])
        fig, ax = plt.subplots()
        ax.plot(data[order, 0], data[order, 1], "o-", label="total energy")
        ax2 = ax.twinx()
        ax2.plot(data[order, 0], data[order, 2], "s--", color="tab:red", label="min z")
        ax2.set_ylabel("min z", color="tab:red")
        ax.set_xlabel("imposed displacement")
        ax.set_ylabel("total energy")
        _save(fig, fig_dir / "sweep.png", written)

    for name in ("crack.csv", "geodesic.csv"):
        src = run_dir / name
        if not src.exists():
            continue
        rows = src.read_text(encoding="utf-8").strip().splitlines()[1:]
        if not rows:
            continue
        data = np.array([[float(x) for x in row.split(",")] for row in rows])
        fig, ax = plt.subplots()
        if mesh is not None:
            ax.triplot(tri_kwargs["x"], tri_kwargs["y"], tri_kwargs["triangles"],
                       color="0.85", linewidth=0.3)
        for cid in np.unique(data[:, 0]):
            chain = data[data[:, 0] == cid]
            ax.plot(chain[:, 1], chain[:, 2], "-", color="crimson", linewidth=1.5)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        _save(fig, fig_dir / (src.stem + ".png"), written)

    return written


def _overlay_chains(ax, run_dir: Path):
    for name in ("crack.csv", "geodesic.csv"):
        src = run_dir / name
        if not src.exists():
            continue
        rows = src.read_text(encoding="utf-8").strip().splitlines()[1:]
        if not rows:
            continue
        data = np.array([[float(x) for x in row.split(",")] for row in rows])
        for cid in np.unique(data[:, 0]):
            chain = data[data[:, 0] == cid]
            ax.plot(chain[:, 1], chain[:, 2], "-", color="crimson", linewidth=1.2)
