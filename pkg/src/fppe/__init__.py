"""Spectral-Galerkin simulation and variational analysis of a fractional
pseudo-parabolic equation with a singular Hardy weight on ``(0, L)``."""

__version__ = "0.1.0"

from .domain import (  # noqa: E402
    DomainSpec,
    QuadratureConfig,
    QuadratureRule,
    SpectralField,
    WeightMatrix,
    Discretization,
    analyze,
    build_quadrature,
    build_weight_matrix,
    eigenpair,
    frac_laplacian,
    synthesize,
)
from .functionals import (  # noqa: E402
    FunctionalSnapshot,
    WellConstants,
    embedding_constant,
    energy_J,
    hardy_constant,
    lp_norm,
    nehari_I,
    seminorm_sq,
    singular_mass,
    well_constants,
    well_depth,
)
from .stationary import GroundState, SolverConfig, ground_state, nehari_project, stationary_residual  # noqa: E402
from .classify import ClassificationReport, Regime, classify  # noqa: E402
from .evolution import EvolutionConfig, TrajectoryRecord, simulate  # noqa: E402
