"""Waveform design toolkit for joint MIMO radar sensing and multi-user
downlink communication with rate splitting."""

from .arrays import ArrayGeometry, steering, steering_derivative
from .channels import (
    ChannelFileError,
    ChannelSet,
    SatelliteBeamConfig,
    beam_gain,
    load_channels,
    rayleigh_channels,
    satellite_channels,
    save_channels,
)
from .comm import (
    NOMA,
    RSMA,
    SDMA,
    STRATEGIES,
    PrecodingMatrix,
    RateReport,
    default_noma_order,
    ee,
    mfr,
    noma_rates,
    rate_report,
    rsma_rates,
    sdma_rates,
    wsr,
)
from .estimator import (
    EchoBlock,
    EstimateRecord,
    RmseRow,
    SymbolBlock,
    estimate,
    music_spectrum,
    rmse_experiment,
    synth_echo,
    synth_symbols,
)
from .optimizer import (
    MODES,
    RATE_CONSTRAINED,
    TRADEOFF,
    DesignProblem,
    DesignSolution,
    Diagnostics,
    RateTargetInfeasibleError,
    SolverOptions,
    SweepPoint,
    fim_scale,
    solve,
    solve_radar_only,
    split_common_rate,
    sweep_lambda,
)
from .radar import (
    BeampatternSpec,
    FisherReport,
    RadarScene,
    UnidentifiableParametersError,
    beampattern,
    beampattern_mse,
    covariance,
    crb,
    fim,
    fim_from_moments,
    fim_linear_map,
    rmi,
)
from .rng import substream

__version__ = "0.1.0"
