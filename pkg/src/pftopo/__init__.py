"""Phase-field topology optimization for minimum compliance on structured grids."""
from .config import RunConfig, load_config
from .constraints import cutoff_projection, partition, project_admissible, scaling_limiter, volume_correction
from .decay import enforce_decay, objective, secant_step, sigma_candidate
from .elasticity import LoadSpec, MaterialModel, compliance, sensitivity_density, solve_elasticity
from .errors import (ConfigurationError, DecayFailure, InfeasibleError, MultiplierError,
                     PhaseFieldError, SolverError, StalledSecantError)
from .mesh import BoundaryRegion, StructuredGrid, build_grid, nodal_measure
from .optimize import Optimizer, initialize_phi, run, threshold_projection
from .phasefield import PhaseParams, ginzburg_landau_energy, semi_implicit_step
from .problems import PROBLEM_IDS, builtin_problem

__version__ = "0.1.0"
