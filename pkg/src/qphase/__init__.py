"""Phase-space probability densities for one-dimensional quantum states.

Builds the positive factorized density ``|psi(x)|**2 |phi(p)|**2`` next to
the Wigner density, compares the expectation values each assigns, links the
two through the Cohen kernel family, and checks the hydrodynamic and
Ehrenfest equations along split-operator trajectories.
"""
from .errors import (
    AccuracyError,
    AliasingError,
    ContractError,
    DomainError,
    ParameterError,
    QPhaseError,
    StabilityError,
    UnsupportedDepthError,
)
from .specfun import QuadratureRule, gauss_hermite, hermite, hermite_scaled, laguerre
from .states import (
    NATURAL,
    Grid1D,
    MadelungFields,
    MomentumWaveFunction,
    OscillatorParams,
    WaveFunction,
    gaussian_packet,
    ho_eigenstate,
    madelung_decompose,
    momentum_transform,
    position_transform,
    superposition,
)
from .phasespace import (
    CharacteristicFunction,
    CohenKernel,
    PhaseSpaceDensity,
    characteristic_factorized,
    characteristic_pointsplit,
    characteristic_to_density,
    cohen_distribution,
    cohen_kernel_factorized,
    density_factorized,
    density_wigner,
    density_wigner_closed,
    liouville_residual,
    unity_kernel,
)
from .moments import (
    DispersionRow,
    MomentResult,
    energy_moments,
    moment_phase_space,
    moment_rule_A,
    moment_rule_B_pointsplit,
    table1,
    table1_reference,
)
from .dynamics import (
    Potential,
    TrajectoryRecord,
    ehrenfest_check,
    madelung_residuals,
    propagate,
)

__version__ = "0.1.0"
