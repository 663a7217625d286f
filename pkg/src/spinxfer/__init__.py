"""Localization and excitation transfer in disordered long-range spin chains."""

from .chain import (
    ChainConfig,
    DegenerateGeometryError,
    DisorderSpec,
    EndpointParams,
    HamiltonianMatrix,
    Model,
    SpinChainRealization,
    build_hamiltonian,
    dipole_coupling,
    extend_with_endpoints,
    nn_coupling_sigma,
    ordered_realization,
    sample_realization,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleSummary,
    LocalizationProfile,
    Protocol,
    localization_sweep,
    transfer_sweep,
    transfer_time_fit,
)
from .estimators import EigenstateLocalization
from .seeding import realization_seed
from .spectral import (
    EigenSystem,
    LocalizationRecord,
    boundary_support,
    coupling_rates,
    diagnostics,
    eigendecompose,
    expected_number_variance,
    ipr,
    localization_length,
    number_variance,
    ordered_long_range_spectrum,
    select_target_state,
)
from .transfer import (
    IntegratorAccuracyError,
    StaticProtocolParams,
    StirapParams,
    TransferTrace,
    effective_three_state,
    first_peak_time,
    integrate_tdse,
    propagate_static,
    pulse_area,
    pulse_value,
    run_static_protocol,
    run_stirap_protocol,
)

__version__ = "0.1.0"
