"""Coupled electron and wave kinetics on trajectory bundles.

The package discretizes a quasilinear diffusion equation for the electron
momentum distribution coupled to a transport equation for a wave action
density.  Wave transport is eliminated exactly by projecting the action
onto indicator functions of trajectory bundles: connected level bands of
the wave Hamiltonian on a triangulated wavenumber-radius domain.  The
resulting finite system couples a local discontinuous Galerkin momentum
operator to an ordinary differential equation per bundle through one
shared sparse tensor, contracted forward for diffusion and transposed
for wave growth, which makes the discrete mass, parallel momentum and
energy exchange identities exact.
"""

from ._accel import HAVE_COMPILED
from .bundles import TrajectoryBundle, build_bundles
from .config import (
    RunConfig,
    config_hash,
    config_text,
    desk_scale,
    parse_config,
    validate_config,
)
from .diagnostics import (
    ConservedWeights,
    Totals,
    conserved_weights,
    l2_norm,
    measure_partition_audit,
    min_eigenvalue_ratio,
    relative_error,
    totals,
)
from .dispersion import (
    DispersionModel,
    MeshHamiltonian,
    Stratification,
    eval_dispersion,
    interpolate_hamiltonian,
    parabolic_density_model,
    stratify,
)
from .errors import (
    ConfigurationError,
    DegenerateFieldError,
    DomainError,
    NumericalError,
    WavekinError,
)
from .grids import RectGrid1D, TriMesh, build_rect_grid, build_tri_mesh
from .interaction import InteractionOperator, KernelSpec, assemble_interaction
from .ldg import MomentumTables, build_momentum_tables
from .scenario import Scenario, build_scenario, initial_state
from .solver import SystemState, advance, implicit_diffusion_update, step

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ConservedWeights",
    "DegenerateFieldError",
    "DispersionModel",
    "DomainError",
    "HAVE_COMPILED",
    "InteractionOperator",
    "KernelSpec",
    "MeshHamiltonian",
    "MomentumTables",
    "NumericalError",
    "RectGrid1D",
    "RunConfig",
    "Scenario",
    "Stratification",
    "SystemState",
    "Totals",
    "TrajectoryBundle",
    "TriMesh",
    "WavekinError",
    "advance",
    "assemble_interaction",
    "build_bundles",
    "build_momentum_tables",
    "build_rect_grid",
    "build_scenario",
    "build_tri_mesh",
    "config_hash",
    "config_text",
    "conserved_weights",
    "desk_scale",
    "eval_dispersion",
    "implicit_diffusion_update",
    "initial_state",
    "interpolate_hamiltonian",
    "l2_norm",
    "measure_partition_audit",
    "min_eigenvalue_ratio",
    "parabolic_density_model",
    "parse_config",
    "relative_error",
    "step",
    "stratify",
    "totals",
    "validate_config",
]
