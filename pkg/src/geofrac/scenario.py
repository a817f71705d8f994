"""Scenario files: flat ``key = value`` text configs with a strict schema.

Every physical constant (load, Griffith constant, damage threshold) must
be written out explicitly when the run kind needs it; solver parameters
have documented defaults.  Unknown keys are hard errors naming the key
and line, so a typo never silently changes a run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ScenarioError

RUN_KINDS = ("equilibrium", "ms", "geodesic", "threshold", "dual", "damage")
GEOMETRIES = ("annulus", "rectangle", "import")
OMEGA_KINDS = ("none", "sector", "strip")
MODES = ("sharp", "relaxed")


@dataclass
class Scenario:
    kind: str
    geometry: str
    # geometry parameters
    r: float | None = None
    R: float | None = None
    n_radial: int | None = None
    n_angular: int | None = None
    a: float | None = None
    L: float | None = None
    nx: int | None = None
    ny: int | None = None
    mesh_path: str | None = None
    # physical constants (no silent defaults)
    delta: float | None = None
    G: float | None = None
    gamma: float | None = None
    # solver parameters
    epsilon: float | None = None
    eta: float = 1.0e-6
    tol: float = 1.0e-6
    max_iters: int = 200
    seed: int = 0
    z_threshold: float = 0.5
    mode: str = "sharp"
    ball_radius: float | None = None
    # threshold bisection
    bisect: bool = False
    delta_lo: float | None = None
    delta_hi: float | None = None
    # dual-run region
    omega: str = "none"
    omega_lo: float | None = None
    omega_hi: float | None = None
    # output
    figures: bool = False
    output: str | None = None


_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}
_INT_KEYS = {"n_radial", "n_angular", "nx", "ny", "max_iters", "seed"}
_BOOL_KEYS = {"bisect", "figures"}
_STR_KEYS = {"kind", "geometry", "mesh_path", "mode", "omega", "output"}


def _convert(key: str, raw: str, line: int):
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ScenarioError(f"line {line}: key '{key}' expects true/false, got {raw!r}",
                            key=key, line=line)
    if key in _STR_KEYS:
        return raw
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ScenarioError(f"line {line}: key '{key}' expects a number, got {raw!r}",
                            key=key, line=line) from exc


def parse_scenario(path) -> Scenario:
    """Parse and fully validate a scenario file."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file {path} does not exist")
    values: dict = {}
    key_lines: dict = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, rawline in enumerate(f, start=1):
            line = rawline.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioError(f"line {lineno}: expected 'key = value', got {rawline.strip()!r}",
                                    line=lineno)
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _FIELD_TYPES:
                raise ScenarioError(f"line {lineno}: unknown key '{key}'", key=key, line=lineno)
            if key in values:
                raise ScenarioError(f"line {lineno}: duplicate key '{key}'", key=key, line=lineno)
            if not raw:
                raise ScenarioError(f"line {lineno}: key '{key}' has no value", key=key, line=lineno)
            values[key] = _convert(key, raw, lineno)
            key_lines[key] = lineno

    def fail(key, message):
        raise ScenarioError(f"key '{key}': {message}", key=key, line=key_lines.get(key))

    for key in ("kind", "geometry"):
        if key not in values:
            fail(key, "is required")
    if values["kind"] not in RUN_KINDS:
        fail("kind", f"must be one of {RUN_KINDS}, got {values['kind']!r}")
    if values["geometry"] not in GEOMETRIES:
        fail("geometry", f"must be one of {GEOMETRIES}, got {values['geometry']!r}")

    scenario = Scenario(**values)
    _validate(scenario, fail)
    return scenario


def _require(scenario, fail, *keys):
    for key in keys:
        if getattr(scenario, key) is None:
            fail(key, f"is required for kind '{scenario.kind}' "
                      f"(geometry '{scenario.geometry}')")


def _validate(s: Scenario, fail) -> None:
    if s.geometry == "annulus":
        _require(s, fail, "r", "R", "n_radial", "n_angular")
        if not (0 < s.r < s.R):
            fail("r", f"needs 0 < r < R, got r={s.r}, R={s.R}")
        if s.n_radial < 2 or s.n_angular < 8:
            fail("n_radial", f"needs n_radial >= 2 and n_angular >= 8, "
                             f"got {s.n_radial}, {s.n_angular}")
    elif s.geometry == "rectangle":
        _require(s, fail, "a", "L", "nx", "ny")
        if s.a <= 0 or s.L <= 0:
            fail("a", f"needs positive dimensions, got a={s.a}, L={s.L}")
        if s.nx < 2 or s.ny < 2:
            fail("nx", f"needs nx, ny >= 2, got {s.nx}, {s.ny}")
    else:
        _require(s, fail, "mesh_path")

    needs_delta = {"equilibrium": True, "ms": True, "dual": True, "damage": True,
                   "geodesic": False, "threshold": False}
    if needs_delta[s.kind]:
        _require(s, fail, "delta")
    if s.kind in ("ms", "threshold"):
        _require(s, fail, "G")
    if s.kind == "damage":
        _require(s, fail, "gamma", "G")

    for key in ("delta",):
        v = getattr(s, key)
        if v is not None and v < 0:
            fail(key, f"must be >= 0, got {v}")
    for key in ("G", "gamma", "epsilon", "tol", "ball_radius",
                "delta_lo", "delta_hi"):
        v = getattr(s, key)
        if v is not None and v <= 0:
            fail(key, f"must be positive, got {v}")
    if not (0 < s.eta < 1):
        fail("eta", f"must lie in (0, 1), got {s.eta}")
    if not (0 < s.z_threshold < 1):
        fail("z_threshold", f"must lie in (0, 1), got {s.z_threshold}")
    if s.max_iters < 1:
        fail("max_iters", f"must be >= 1, got {s.max_iters}")
    if s.mode not in MODES:
        fail("mode", f"must be one of {MODES}, got {s.mode!r}")
    if s.omega not in OMEGA_KINDS:
        fail("omega", f"must be one of {OMEGA_KINDS}, got {s.omega!r}")
    if s.omega != "none":
        _require(s, fail, "omega_lo", "omega_hi")
        if s.omega_lo >= s.omega_hi:
            fail("omega_lo", "needs omega_lo < omega_hi")
    if s.bisect:
        _require(s, fail, "delta_lo", "delta_hi")
        if s.delta_lo >= s.delta_hi:
            fail("delta_lo", "needs delta_lo < delta_hi")
