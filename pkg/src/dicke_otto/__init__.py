"""Quantum Otto machine with an open Dicke-model working substance."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    DimensionError,
    EigensolverError,
    HpLimitSpectrum,
    ModelParams,
    Spectrum,
    auto_converge,
    build_hamiltonian_bare,
    critical_coupling,
    diagonalize,
    diagonalize_bare,
    diagonalize_ecs,
    hp_deep_strong_levels,
    hp_normal_spectrum,
    hp_superradiant_spectrum,
)
from .cycle import (  # noqa: E402
    BathParams,
    CycleProtocol,
    CycleResult,
    ThermalState,
    coupling_protocol,
    frequency_protocol,
    pwc_threshold,
    run_cycle,
    steady_state,
    transition_rates,
)
from .correlations import (  # noqa: E402
    CorrelationReport,
    build_x_plus,
    correlate,
    g2_conventional,
    g2_generalized,
    negativity,
    thermal_density_matrix,
)
