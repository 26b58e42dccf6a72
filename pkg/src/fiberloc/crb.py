"""Cramer-Rao bounds for the delay-difference estimator.

Two routes are provided: numerical integration of the general PSD form and
the closed form for flat spectra.  Position sweeps combine the bound with the
channel loss model to reproduce the bound-versus-position behavior, and
``feasible_region`` inverts a bound requirement into the admissible
(|kappa|, N) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from . import channel

PsdFunc = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PsdModel:
    """Signal and noise power spectral densities over the sampled band.

    The callables take a frequency array (Hz) and return PSD levels; the
    integration band is [-1/(2 Ts), +1/(2 Ts)].
    """

    signal: PsdFunc
    noise1: PsdFunc
    noise2: PsdFunc
    ts: float

    def __post_init__(self):
        if self.ts <= 0:
            raise ValueError("sample period must be positive")

    @property
    def band(self) -> tuple[float, float]:
        half = 1.0 / (2.0 * self.ts)
        return -half, half

    @classmethod
    def flat(cls, s_level: float, n1_level: float, n2_level: float, ts: float) -> "PsdModel":
        return cls(
            signal=lambda f: np.full_like(f, s_level, dtype=np.float64),
            noise1=lambda f: np.full_like(f, n1_level, dtype=np.float64),
            noise2=lambda f: np.full_like(f, n2_level, dtype=np.float64),
            ts=ts,
        )


@dataclass
class CrbCurve:
    """Delay CRB versus source position for one (N, loss, SNR, Ts) setting.

    ``crb_m2`` converts the delay variance to a position variance through the
    affine delay-to-position map; ``applicable`` flags positions where the
    normalized bound stays below one sample period squared (larger values are
    kept for plot continuity but are not usable).
    """

    positions_m: np.ndarray
    crb_s2: np.ndarray
    crb_m2: np.ndarray
    applicable: np.ndarray
    n_samples: int
    loss_db_per_km: float
    snr_ref_db: float
    ts: float


def _validate_kappa_n(kappa_mag: float, n_samples: int) -> None:
    if kappa_mag < 0.0 or kappa_mag > 1.0:
        raise ValueError(f"kappa magnitude {kappa_mag} violates 0 <= |kappa| <= 1")
    if kappa_mag == 0.0:
        raise ValueError("unbounded CRB: kappa magnitude is zero (no relative signal)")
    if n_samples < 1:
        raise ValueError("sample count must be >= 1")


def crb_general(
    psd: PsdModel,
    kappa_mag: float,
    n_samples: int,
    rel_tol: float = 1e-9,
    min_intervals: int = 1 << 14,
    max_intervals: int = 1 << 21,
) -> float:
    """Delay CRB by numerical integration of the PSD form.

    Integrates f^2 S^2(f) / Delta_kappa(f) over the band with composite
    Simpson on dyadically refined grids until the Richardson-style relative
    change drops below ``rel_tol``.
    """
    _validate_kappa_n(kappa_mag, n_samples)
    lo, hi = psd.band

    def integral(n_intervals: int) -> float:
        f = np.linspace(lo, hi, n_intervals + 1)
        s = np.asarray(psd.signal(f), dtype=np.float64)
        n1 = np.asarray(psd.noise1(f), dtype=np.float64)
        n2 = np.asarray(psd.noise2(f), dtype=np.float64)
        if np.any(s < 0):
            raise ValueError("invalid PSD: signal PSD must be nonnegative")
        if np.any(n1 <= 0) or np.any(n2 <= 0):
            raise ValueError("invalid PSD: noise PSDs must be positive")
        delta = (s + n1) * (s + n2) - kappa_mag**2 * s**2
        if np.any(delta <= 0):
            raise ValueError("invalid PSD/kappa combination: Delta_kappa not positive")
        return float(simpson(f**2 * s**2 / delta, x=f))

    n_int = min_intervals
    value = integral(n_int)
    while n_int < max_intervals:
        n_int *= 2
        refined = integral(n_int)
        if refined == 0.0:
            raise ValueError("unbounded CRB: spectral information integral is zero")
        if abs(refined - value) <= rel_tol * abs(refined):
            value = refined
            break
        value = refined
    if value <= 0.0:
        raise ValueError("unbounded CRB: spectral information integral is zero")
    info = 8.0 * np.pi**2 * kappa_mag**2 * n_samples * value
    return 1.0 / info


def crb_flat(
    s_level: float,
    n1_level: float,
    n2_level: float,
    kappa_mag: float,
    n_samples: int,
    ts: float = 1.0,
) -> float:
    """Closed-form delay CRB for flat signal and noise PSDs."""
    _validate_kappa_n(kappa_mag, n_samples)
    if ts <= 0:
        raise ValueError("sample period must be positive")
    if s_level <= 0:
        raise ValueError("unbounded CRB: flat signal PSD level must be positive")
    if n1_level <= 0 or n2_level <= 0:
        raise ValueError("invalid PSD: noise PSD levels must be positive")
    k2 = kappa_mag**2
    denom = (1.0 - k2) * s_level**2 + n1_level * n2_level + s_level * (n1_level + n2_level)
    info = (2.0 / 3.0) * (1.0 / ts**3) * np.pi**2 * k2 * n_samples * s_level**2 / denom
    return 1.0 / info


def crb_position_sweep(
    scenario: channel.FiberScenario,
    n_samples: int,
    positions_m: Sequence[float] | np.ndarray,
    ts: float = 1.0,
) -> CrbCurve:
    """Flat-PSD delay CRB along the cable for one sample count.

    The signal level at each position is the flat per-sample power of the
    reference (stronger) receiver implied by ``snr_ref_db`` and the loss
    model; both noise PSDs sit at the scenario noise floor.
    """
    positions = np.asarray(positions_m, dtype=np.float64)
    if positions.size == 0:
        raise ValueError("position grid is empty")
    if np.any(positions < 0) or np.any(positions > scenario.length_m):
        raise ValueError("position grid extends outside the cable")

    noise = scenario.noise_power
    crb = np.empty_like(positions)
    for i, pos in enumerate(positions):
        sc = replace(scenario, source_position_m=float(pos))
        kappa, _ = channel.kappa_of_position(sc)
        snr1, snr2 = channel.expected_snrs(sc)
        s_level = noise * 10.0 ** (max(snr1, snr2) / 10.0)
        if kappa == 0.0:
            crb[i] = np.inf
        else:
            crb[i] = crb_flat(s_level, noise, noise, kappa, n_samples, ts)

    v_half = scenario.light_speed_mps / 2.0
    applicable = np.isfinite(crb) & (crb <= ts**2)
    return CrbCurve(
        positions_m=positions,
        crb_s2=crb,
        crb_m2=crb * v_half**2,
        applicable=applicable,
        n_samples=n_samples,
        loss_db_per_km=scenario.loss_db_per_km,
        snr_ref_db=scenario.snr_ref_db,
        ts=ts,
    )


def feasible_region(
    crb_upper_bound: float,
    s_level: float,
    n1_level: float,
    n2_level: float,
    kappa_grid: Sequence[float],
    n_grid: Sequence[int],
    ts: float = 1.0,
) -> list[tuple[float, int]]:
    """All (|kappa|, N) pairs whose flat-PSD CRB meets the required bound."""
    if crb_upper_bound <= 0:
        raise ValueError("CRB upper bound must be positive")
    admitted = []
    for kappa in kappa_grid:
        for n in n_grid:
            if kappa == 0.0:
                value = np.inf
            else:
                value = crb_flat(s_level, n1_level, n2_level, kappa, n, ts)
            if value <= crb_upper_bound:
                admitted.append((float(kappa), int(n)))
    return admitted
