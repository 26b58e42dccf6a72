"""Dual-bistatic fiber acoustic localization toolkit.

Simulates an acoustic PN/BPSK burst sensed by a two-receiver fiber pair,
estimates the delay difference between the receivers with the cross-
ambiguity function, maps it to a source position along the cable, and
provides the matching Cramer-Rao bounds for validation.
"""

__version__ = "0.1.0"

from .caf import (
    CafGrid,
    CafSurface,
    RefinedPeak,
    TermMoments,
    caf_direct,
    caf_discrete,
    ccdf,
    mean_variance_law,
    peak_search,
    refine_peak,
    sidelobe_cells,
    term_moments,
)
from .channel import (
    FIBER_LIGHT_SPEED,
    ChannelMeta,
    FiberScenario,
    ObservationPair,
    delay_pair,
    expected_snrs,
    kappa_of_position,
    propagate,
)
from .crb import (
    CrbCurve,
    PsdModel,
    crb_flat,
    crb_general,
    crb_position_sweep,
    feasible_region,
)
from .positioning import (
    McReport,
    PositionEstimate,
    delta_to_position,
    estimate_position,
    monte_carlo,
    spatial_resolution,
)
from .signal import (
    Baseband,
    PnSpec,
    WaveformSpec,
    gen_mseq,
    matched_filter,
    rrc_taps,
    shape_pulse,
)

__all__ = [
    "__version__",
    "FIBER_LIGHT_SPEED",
    "Baseband",
    "CafGrid",
    "CafSurface",
    "ChannelMeta",
    "CrbCurve",
    "FiberScenario",
    "McReport",
    "ObservationPair",
    "PnSpec",
    "PositionEstimate",
    "PsdModel",
    "RefinedPeak",
    "TermMoments",
    "WaveformSpec",
    "caf_direct",
    "caf_discrete",
    "ccdf",
    "crb_flat",
    "crb_general",
    "crb_position_sweep",
    "delay_pair",
    "delta_to_position",
    "estimate_position",
    "expected_snrs",
    "feasible_region",
    "gen_mseq",
    "kappa_of_position",
    "matched_filter",
    "mean_variance_law",
    "monte_carlo",
    "peak_search",
    "propagate",
    "refine_peak",
    "rrc_taps",
    "shape_pulse",
    "sidelobe_cells",
    "spatial_resolution",
    "term_moments",
]
