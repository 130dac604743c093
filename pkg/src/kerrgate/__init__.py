"""Cross-Kerr interaction chains as a passive CPHASE gate: scattering
kernels, two-photon overlap quadrature, average gate fidelities, and the
parameter studies behind them."""

from .kerr import (
    INFINITE,
    Arrangement,
    ChainConfig,
    SiteParams,
    chain_phase_sum,
    gamma_fn,
    reduced_kernel,
    single_photon_phase,
)
from .spectral import (
    QuadratureSpec,
    WavePacket,
    build_grid,
    deform_phase,
    gaussian_amplitude,
)
from .fidelity import (
    FidelityResult,
    OverlapResult,
    avg_fidelity_full,
    avg_fidelity_product,
    evaluate,
    optimal_phase,
    scattered_state_norm,
    two_photon_overlap,
)
from .sweep import (
    BracketError,
    ChainMaximum,
    PowerLawFit,
    SaturationCurve,
    SweepRecord,
    deformed_input_study,
    fit_power_law,
    make_packet,
    maximize_over_sigma,
    optimize_site_parameters,
    predict_target,
    saturation_study,
    scan_n,
    scan_sigma,
)

__version__ = "0.1.0"
