"""Quantum statistical functions: generating functions, quasiprobabilities,
discrete phase space, geometric-mean information quantities and moment-based
estimation for dense finite-dimensional operators."""

from . import config, errors, estimation, geometry, io, operators, ordering, quasiprob, statfuncs, wigner
from .config import DEFAULT as DEFAULT_TOLERANCES, Tolerances
from .errors import NumericalError, QStatError, ValidationError
from .estimation import (
    EstimationOptions,
    EstimationResult,
    ParameterizedModel,
    high_temp_moments,
    qgmm_estimate,
    qgmm_onestep_update,
    qmm_solve,
    quantum_covariance_matrix,
    simulate_measurements,
    tfim_hamiltonian,
    tfim_model,
    tfim_observables,
    thermal_state,
)
from .geometry import (
    chernoff,
    fidelity,
    geo_mean_trace_bound,
    geo_mgf,
    geo_mgf_derivatives,
    geometric_mean,
    golden_thompson_gap,
    relative_entropy,
    relative_entropy_variance,
)
from .operators import (
    DensityOperator,
    HermitianOperator,
    SpectralDecomposition,
    make_density,
    matrix_function,
    spectral_decompose,
    spectral_projectors,
)
from .ordering import WIGNER_LIMIT, OrderingSpec, ordering_function, preset, unitary_ordering_function
from .quasiprob import (
    BochnerReport,
    QuasiProbTable,
    Verdict,
    bochner_check,
    conditional_kd,
    kd_distribution,
    mh_distribution,
    npoint_correlation,
    weak_value,
    weak_variance,
)
from .statfuncs import (
    conditional_qcf,
    conditional_qmgf,
    covariance,
    modular_value,
    moments,
    multivariable_qcf,
    multivariable_qmgf,
    qcf,
    qcgf,
    qmgf,
    qscf,
)
from .wigner import WignerTable, discrete_qcf, displacement, reconstruct_state, wigner_function

__version__ = "0.1.0"
