"""geofrac: antiplane brittle fracture and damage on triangulated domains.

Minimizes Mumford-Shah-type energies with a phase-field approximation,
predicts critical loads and geodesic cracks, certifies elastic energies
through convex duality, and runs the cut/balance brittle-damage descent.
"""

__version__ = "0.1.0"

from .damage import (CurvatureReport, DamageState, balance_step, curvature_balance_residual,
                     curvature_check, cut_step, minimize_damage, relaxed_energy, sharp_energy)
from .equilibrium import (DirichletData, EnergyReport, StressField, bulk_energy,
                          solve_equilibrium, stress_field, total_energy, traction_residual)
from .errors import (AdmissibilityError, ConsistencyError, GeofracError, GeometryError,
                     ParameterError, ScenarioError, SolverError)
from .geodesics import (Congruence, conjugate_field, geodesic_summary, project_onto,
                        separating_geodesic, variation_over)
from .mesh import (BoundaryLabel, Mesh, build_annulus, build_rectangle, insert_slit,
                   load_mesh, save_mesh, validate_mesh)
from .mumford_shah import (ATState, alternate_minimize, at_energy, band_seed,
                           critical_delta_bracket, extract_crack, minimize_u_step,
                           minimize_z_step, multistart_minimize)
from .paths import CrackPath, path_from_circle, path_from_segment
from .scenario import Scenario, parse_scenario
from .thresholds import (GapReport, ThresholdReport, certify_gap, critical_thresholds,
                         cut_stress_field, dual_bound, gradient_bounds)

__all__ = [name for name in dir() if not name.startswith("_")]
