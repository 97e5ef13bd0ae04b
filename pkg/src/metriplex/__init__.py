"""Thermodynamically consistent mechanics: systems, brackets, reduction and verification."""
from .brackets import (
    PoissonStructure,
    canonical_poisson,
    dissipative_field_double,
    dissipative_field_metriplectic,
    dissipative_field_single,
    double_generator_bracket,
    hamiltonian_field,
    metriplectic_bracket,
    single_generator_bracket,
)
from .dynamics import Trajectory, admissibility_audit, direct_vector_field, entropy_production_rate, simulate
from .errors import (
    DimensionMismatch,
    DivergedAt,
    GradientMismatch,
    HyperregularityFailure,
    InvalidParameter,
    InvalidSystem,
    MetriplexError,
    MissingLinearTransport,
    NegativeMoles,
    NoCompartments,
    NonFiniteEvaluation,
    UnknownScenario,
    ZeroTemperature,
)
from .reduction import (
    LieAlgebraStructure,
    ReducedState,
    ReducedSystem,
    double_bracket_friction,
    lie_poisson_bracket,
    lie_poisson_structure,
    momentum_map,
    orbit_metriplectic_bracket,
    reduced_double_bracket,
    reduced_metriplectic_bracket,
    reduced_single_bracket,
    reduced_vector_field,
    se2,
    simulate_reduced,
    so3,
)
from .scenarios import ScenarioSpec, build, scenario_names
from .systems import (
    HamiltonianSystem,
    LagrangianSystem,
    LinearTransport,
    Observable,
    ThermoMechState,
    chemical_potentials,
    fd_gradient,
    legendre_to_hamiltonian,
)
from .verify import VerificationReport, check_axioms, check_casimirs, check_equivalence, check_jacobi, check_laws

__version__ = "0.1.0"
