"""Regularized solutions of linear rational expectations models."""

from .analysis import (
    IrfSequence,
    ResidualReport,
    SimulationPath,
    SpectrumGrid,
    impulse_response,
    residual_check,
    simulate,
    spectral_density,
    stationary_covariance,
)
from .errors import (
    DimensionMismatch,
    LremError,
    ModelFileError,
    NoSolution,
    QuadratureNonConvergence,
    ReorderFailure,
    SingularPencil,
    UnitRoot,
    UnstableMatrix,
)
from .pencil import KernelData, OrderedQz, ordered_real_qz, pseudoinverse_and_kernel, solve_discrete_lyapunov
from .regularize import (
    BandWeight,
    ConstantWeight,
    QuadratureConfig,
    RegularizedSolution,
    SampledWeight,
    business_cycle_weight,
    compute_xi,
    loss,
    regularize,
)
from .solver import (
    CanonicalForm,
    LremModel,
    Solution,
    Tolerances,
    baseline_solution,
    check_existence,
    check_uniqueness,
    decompose,
    general_solution,
)

__version__ = "0.1.0"
