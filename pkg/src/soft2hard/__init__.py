"""soft2hard - Soft-potential to hard-sphere two-body dynamics lab"""

__version__ = "0.1.0"

from .exceptions import (
    ConfigError,
    HypothesisError,
    NumericalError,
    OverlapError,
    Soft2HardError,
)
from .models import (
    ConfigClass,
    ExperimentConfig,
    HardTrajectory,
    PhasePoint,
    SampledTrajectory,
)
from .geometry import classify, collision_invariants, to_reduced, from_reduced
from .potentials import HardenedPotential, standard_family, validate_hypotheses
from .hard_dynamics import boltzmann_matrix, surgery_solve
from .soft_dynamics import SoftProblem, detect_contact_window, integrate
from .scattering import collision_analysis, hardening_sweep, soft_scatter
from .bv_analysis import uniform_bound_check, weak_star_report

__all__ = [
    "ConfigError",
    "HypothesisError",
    "NumericalError",
    "OverlapError",
    "Soft2HardError",
    "ConfigClass",
    "ExperimentConfig",
    "HardTrajectory",
    "PhasePoint",
    "SampledTrajectory",
    "classify",
    "collision_invariants",
    "to_reduced",
    "from_reduced",
    "HardenedPotential",
    "standard_family",
    "validate_hypotheses",
    "boltzmann_matrix",
    "surgery_solve",
    "SoftProblem",
    "detect_contact_window",
    "integrate",
    "collision_analysis",
    "hardening_sweep",
    "soft_scatter",
    "uniform_bound_check",
    "weak_star_report",
]
