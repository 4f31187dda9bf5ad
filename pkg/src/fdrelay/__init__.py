"""Outage analysis for full-duplex MIMO decode-and-forward relaying with
zero-forcing beamforming: exact closed forms plus a Monte Carlo validator."""

from .exppoly import ExpPoly, determinant, leading_coefficient
from .mcsim import (
    BeamformerSet,
    ChannelSample,
    DegenerateChannelError,
    OutageEstimate,
    TrialResult,
    design_receive_zf,
    design_transmit_zf,
    estimate_outage,
    instantaneous_snrs,
    left_null_projector,
    link_gain_samples,
    make_rng,
    power_identity_check,
    sample_channels,
    wilson_interval,
)
from .outage import (
    AntennaConfig,
    InvalidProbabilityError,
    LinkBudget,
    OutageQuery,
    ZFMode,
    diversity_order,
    e2e_outage,
    end_to_end_outage,
    link_dims,
    link_outage,
    link_snr_pdf,
    rate_to_snr_threshold,
    regularized_lower_gamma,
)
from .wishart import (
    CoeffTable,
    NonzeroResidualError,
    WishartDims,
    cached_table,
    extract_coefficients,
    load_table,
    max_eig_cdf,
    max_eig_density,
    normalization_constant,
    save_table,
)

__version__ = "0.1.0"
