"""epdyn: effective-potential multivalued dynamics toolkit.

Dense two-block Hermitian eigenproblems, energy-dependent effective-potential
root enumeration with exact probability bookkeeping, stochastic realisation
hopping, discrete-action quantization with a unitary linear propagator, and a
configurable nonlinear Schrodinger-type PDE family, all validated against
brute-force oracles.
"""

from .errors import (
    EpdynError,
    ConfigurationError,
    OracleScaleError,
    NormalizationError,
    PartitionError,
    PoleProximityError,
    CompletenessWarning,
    RegimeMismatchWarning,
    NodeSingularityError,
    StepSizeError,
    BlowUpError,
    DomainError,
)
from .core import (
    PhysicalConstants,
    Grid,
    HermitianOperator,
    ExistenceProblem,
    Hamiltonian1D,
    WaveField,
    Spectrum,
    build_grid,
    build_kinetic,
    assemble_existence,
    full_spectrum,
    expectation_energy,
)
from .effective import (
    Partition,
    BranchRoot,
    Realisation,
    RealisationEnsemble,
    make_partition,
    effective_hamiltonian,
    ep_characteristic,
    enumerate_roots,
    root_density,
    root_centroid,
    reconstruct_full_state,
    cluster_realisations,
    ensemble_from_probabilities,
    assemble_density,
)
from .hopping import (
    HopConfig,
    HopTrajectory,
    EmpiricalStats,
    KinematicObservables,
    make_rng,
    hop_step,
    simulate_hops,
    empirical_frequencies,
    kinematic_observables,
    energy_partition_check,
)
from .quantization import (
    ActionLedger,
    QuantizationRule,
    SpaceTimeField,
    SchrodingerPropagator,
    ledger_advance,
    wave_action,
    discrete_momentum,
    discrete_energy,
    assemble_schrodinger,
    conservation_report,
)
from .universal import (
    Term,
    HamiltonianSpec,
    ActionField,
    PDEState,
    UniversalStepper,
    linear_schrodinger_spec,
    hj_residual,
    hj_stationary_residual,
    causal_quantize,
    build_universal_pde,
    step_pde,
)

__version__ = "0.1.0"
