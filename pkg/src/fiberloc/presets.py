"""Bundled experiment configurations, one per studied figure family.

Every preset is a complete config document (same schema as user config
files) and runs deterministically from its embedded seed.
"""

from __future__ import annotations

import copy

_SCENARIO_60KM = {
    "length_m": 60_000.0,
    "loss_db_per_km": 0.1,
    "source_position_m": 1_000.0,
    "snr_ref_db": 10.0,
    "noise_floor_db": 0.0,
    "light_speed_mps": 2.0e8,
}

_WAVEFORM_PN127 = {
    "pn_degree": 7,
    "sample_rate_hz": 16_000.0,
    "oversampling": 4,
    "rolloff": 0.31,
    "filter_span": 8,
    "carrier_hz": 2_000.0,
}


def _scenario(**overrides) -> dict:
    sc = dict(_SCENARIO_60KM)
    sc.update(overrides)
    return sc


def _waveform(**overrides) -> dict:
    wf = dict(_WAVEFORM_PN127)
    wf.update(overrides)
    return wf


def _caf_preset(*, seed, noise, position_m, loss, pn_degree=7, snr_ref_db=10.0) -> dict:
    return {
        "experiment": "caf",
        "seed": seed,
        "scenario": _scenario(
            source_position_m=position_m, loss_db_per_km=loss, snr_ref_db=snr_ref_db
        ),
        "waveform": _waveform(pn_degree=pn_degree),
        "caf": {
            "noise": noise,
            "matched_filter": True,
            "doppler_half_bins": 2,
            "lag_margin": 2,
        },
    }


def _ccdf_preset(*, seed, noise, position_m, loss, pn_degree=7, snr_ref_db=10.0) -> dict:
    return {
        "experiment": "ccdf",
        "seed": seed,
        "scenario": _scenario(
            source_position_m=position_m, loss_db_per_km=loss, snr_ref_db=snr_ref_db
        ),
        "waveform": _waveform(pn_degree=pn_degree),
        "ccdf": {
            "noise": noise,
            "matched_filter": True,
            "doppler_half_bins": 2,
            "lag_margin": 16,
            "exclusion_lag_cells": 4,
            "exclusion_doppler_cells": 1,
            "n_thresholds": 201,
        },
    }


PRESETS: dict[str, dict] = {
    # Bound-versus-position curve families for the two studied loss factors.
    "fig_crb_loss01": {
        "experiment": "crb-sweep",
        "seed": 60101,
        "scenario": _scenario(loss_db_per_km=0.1, source_position_m=0.0),
        "crb_sweep": {
            "n_samples": [31, 63, 127, 255],
            "losses_db_per_km": [0.1],
            "n_positions": 121,
            "ts_s": 1.0,
        },
    },
    "fig_crb_loss05": {
        "experiment": "crb-sweep",
        "seed": 60105,
        "scenario": _scenario(loss_db_per_km=0.5, source_position_m=0.0),
        "crb_sweep": {
            "n_samples": [31, 63, 127, 255],
            "losses_db_per_km": [0.5],
            "n_positions": 121,
            "ts_s": 1.0,
        },
    },
    # Relative-scale-squared profile along the cable, three loss factors.
    "fig_kappa2": {
        "experiment": "kappa",
        "seed": 60200,
        "scenario": _scenario(source_position_m=0.0),
        "kappa": {"losses_db_per_km": [0.1, 0.2, 0.5], "n_positions": 121},
    },
    # Reference surfaces: no noise and noise only, PN 127, source near receiver 1.
    "fig_caf_noiseless_pn127": _caf_preset(
        seed=60300, noise=False, position_m=1_000.0, loss=0.1
    ),
    "fig_caf_noiseonly_pn127": _caf_preset(
        seed=60301, noise=True, position_m=1_000.0, loss=0.1, snr_ref_db=-70.0
    ),
    "fig_ccdf_noiseless_pn127": _ccdf_preset(
        seed=60310, noise=False, position_m=1_000.0, loss=0.1
    ),
    "fig_ccdf_noiseonly_pn127": _ccdf_preset(
        seed=60311, noise=True, position_m=1_000.0, loss=0.1, snr_ref_db=-70.0
    ),
    # Loss sweep at fixed PN length, positions 29 km and 2 km.
    "fig_caf_pos29_loss01": _caf_preset(
        seed=60400, noise=True, position_m=29_000.0, loss=0.1
    ),
    "fig_caf_pos29_loss05": _caf_preset(
        seed=60401, noise=True, position_m=29_000.0, loss=0.5
    ),
    "fig_ccdf_pos29_loss01": _ccdf_preset(
        seed=60410, noise=True, position_m=29_000.0, loss=0.1
    ),
    "fig_ccdf_pos29_loss05": _ccdf_preset(
        seed=60411, noise=True, position_m=29_000.0, loss=0.5
    ),
    "fig_ccdf_pos2_loss01": _ccdf_preset(
        seed=60420, noise=True, position_m=2_000.0, loss=0.1
    ),
    "fig_ccdf_pos2_loss05": _ccdf_preset(
        seed=60421, noise=True, position_m=2_000.0, loss=0.5
    ),
    # PN-length sweep at 29 km.
    "fig_caf_pos29_pn63_loss02": _caf_preset(
        seed=60500, noise=True, position_m=29_000.0, loss=0.2, pn_degree=6
    ),
    "fig_caf_pos29_pn255_loss02": _caf_preset(
        seed=60501, noise=True, position_m=29_000.0, loss=0.2, pn_degree=8
    ),
    "fig_ccdf_pos29_pn63_loss01": _ccdf_preset(
        seed=60510, noise=True, position_m=29_000.0, loss=0.1, pn_degree=6
    ),
    "fig_ccdf_pos29_pn255_loss01": _ccdf_preset(
        seed=60511, noise=True, position_m=29_000.0, loss=0.1, pn_degree=8
    ),
    "fig_ccdf_pos29_pn63_loss05": _ccdf_preset(
        seed=60512, noise=True, position_m=29_000.0, loss=0.5, pn_degree=6
    ),
    "fig_ccdf_pos29_pn255_loss05": _ccdf_preset(
        seed=60513, noise=True, position_m=29_000.0, loss=0.5, pn_degree=8
    ),
    # Estimator-versus-bound campaign at the cable midpoint.
    "mc_midpoint_pn511": {
        "experiment": "mc",
        "seed": 60600,
        "scenario": _scenario(source_position_m=30_000.0),
        "waveform": _waveform(pn_degree=9),
        "mc": {"trials": 200},
    },
}


def list_presets() -> list[str]:
    """Names of all bundled configurations."""
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    """A deep copy of one bundled configuration."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return copy.deepcopy(PRESETS[name])
