"""Dual-fiber propagation model.

An acoustic source at position d1 along a cable of length L modulates both
fibers; receiver 1 sees the modulation after a path of d1 meters at the
fiber light speed, receiver 2 after L - d1 meters.  Fiber loss attenuates
the weaker (longer) path relative to the stronger one by the complex scale
kappa, and each receiver adds independent circular complex white Gaussian
noise.  Bulk delay common to both receivers is dropped: only the delay
difference carries position information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal import Baseband

#: Default speed of light in fiber, m/s.
FIBER_LIGHT_SPEED = 2.0e8


@dataclass(frozen=True)
class FiberScenario:
    """World description: cable geometry, loss, source position, levels.

    ``snr_ref_db`` is anchored at the reference (stronger) receiver: it is the
    output SNR seen when the source sits at that receiver's own end of the
    cable.  ``noise_floor_db`` sets the receiver output noise power (0 dB is
    unit variance).
    """

    length_m: float
    loss_db_per_km: float
    source_position_m: float
    snr_ref_db: float = 10.0
    noise_floor_db: float = 0.0
    light_speed_mps: float = FIBER_LIGHT_SPEED

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError("cable length must be positive")
        if self.light_speed_mps <= 0:
            raise ValueError("fiber light speed must be positive")
        if self.loss_db_per_km < 0:
            raise ValueError("loss factor must be nonnegative")
        if not 0.0 <= self.source_position_m <= self.length_m:
            raise ValueError(
                f"source position {self.source_position_m} m outside cable [0, {self.length_m}] m"
            )

    @property
    def noise_power(self) -> float:
        return 10.0 ** (self.noise_floor_db / 10.0)


@dataclass(frozen=True)
class ChannelMeta:
    """Deterministic channel parameters attached to an observation pair."""

    tau1_s: float
    tau2_s: float
    delta_tau_s: float
    kappa_mag: float
    kappa_phase: float
    group_delay_s: float
    reference_receiver: int

    def __post_init__(self):
        if not 0.0 <= self.kappa_mag <= 1.0:
            raise ValueError(f"kappa magnitude {self.kappa_mag} outside [0, 1]")
        if self.reference_receiver not in (1, 2):
            raise ValueError("reference receiver must be 1 or 2")


@dataclass
class ObservationPair:
    """Two receiver streams with a common time origin plus channel metadata."""

    u1: Baseband
    u2: Baseband
    meta: ChannelMeta
    rng_seed: int

    def __post_init__(self):
        if self.u1.sample_rate != self.u2.sample_rate:
            raise ValueError("observation streams must share a sample rate")
        if self.u1.origin_time != self.u2.origin_time:
            raise ValueError("observation streams must share a time origin")


def delay_pair(scenario: FiberScenario) -> tuple[float, float, float]:
    """Per-receiver delays and their difference: (tau1, tau2, tau1 - tau2)."""
    tau1 = scenario.source_position_m / scenario.light_speed_mps
    tau2 = (scenario.length_m - scenario.source_position_m) / scenario.light_speed_mps
    return tau1, tau2, tau1 - tau2


def kappa_of_position(scenario: FiberScenario) -> tuple[float, int]:
    """Relative amplitude of the weaker receiver and the reference receiver id.

    |kappa| = 10^(-alpha |L - 2 d1| / 20) with alpha in dB/km: the amplitude
    of the longer-path signal over the shorter-path one.  Receiver 1 is the
    reference up to the midpoint, receiver 2 past it.
    """
    diff_km = abs(scenario.length_m - 2.0 * scenario.source_position_m) / 1000.0
    mag = 10.0 ** (-scenario.loss_db_per_km * diff_km / 20.0)
    ref = 1 if scenario.source_position_m <= scenario.length_m / 2.0 else 2
    return mag, ref


def expected_snrs(scenario: FiberScenario) -> tuple[float, float]:
    """Analytic per-receiver output SNRs in dB implied by the loss model."""
    d1_km = scenario.source_position_m / 1000.0
    d2_km = (scenario.length_m - scenario.source_position_m) / 1000.0
    snr1 = scenario.snr_ref_db - scenario.loss_db_per_km * d1_km
    snr2 = scenario.snr_ref_db - scenario.loss_db_per_km * d2_km
    return snr1, snr2


def _fractional_delay(x: np.ndarray, shift_samples: float) -> np.ndarray:
    """Delay a (zero-padded) stream by a possibly fractional sample count.

    Implemented as a frequency-domain linear phase ramp, exact for
    band-limited content; the caller must leave enough zero padding that
    circular wrap-around only moves negligible energy.
    """
    if shift_samples == 0.0:
        return x.astype(np.complex128, copy=True)
    n = x.size
    freqs = np.fft.fftfreq(n)
    ramp = np.exp(-2j * np.pi * freqs * shift_samples)
    return np.fft.ifft(np.fft.fft(x) * ramp)


def propagate(
    wave: Baseband,
    scenario: FiberScenario,
    seed: int,
    *,
    noise: bool = True,
    carrier_hz: float = 0.0,
    max_samples: int | None = None,
) -> ObservationPair:
    """Produce the two receiver observations for one transmitted burst.

    The stronger-path stream is scaled so its mean power over the emitted
    waveform meets the analytic SNR of its receiver; the weaker stream is
    additionally scaled by |kappa| and rotated by the kappa phase.  Delays
    are realized exactly via frequency-domain fractional shifts (the common
    bulk delay is dropped), and each stream gets an independent noise
    realization drawn from sub-seeds of ``seed``.
    """
    tau1, tau2, delta_tau = delay_pair(scenario)
    kappa_mag, ref = kappa_of_position(scenario)
    snr1, snr2 = expected_snrs(scenario)

    ts = 1.0 / wave.sample_rate
    tau_common = min(tau1, tau2)
    shift1 = (tau1 - tau_common) / ts
    shift2 = (tau2 - tau_common) / ts

    pad = int(math.ceil(max(shift1, shift2))) + 8
    k_buf = wave.k_samples + pad
    if max_samples is not None and k_buf > max_samples:
        raise ValueError(
            f"waveform needs a {k_buf}-sample buffer, exceeding the {max_samples}-sample limit"
        )

    buf = np.zeros(k_buf, dtype=np.complex128)
    buf[: wave.k_samples] = wave.samples
    mean_power = np.mean(np.abs(wave.samples) ** 2)
    if mean_power == 0.0:
        raise ValueError("waveform has zero power")

    target_power = scenario.noise_power * 10.0 ** (max(snr1, snr2) / 10.0)
    scale = math.sqrt(target_power / mean_power)

    # Phase of kappa: the weaker receiver is the farther one, so its relative
    # envelope delay versus the reference is |delta_tau| (ideal front end,
    # zero phase/group delay).
    kappa_phase = -2.0 * np.pi * carrier_hz * abs(delta_tau)
    rot = kappa_mag * np.exp(1j * kappa_phase)

    s1 = _fractional_delay(buf, shift1)
    s2 = _fractional_delay(buf, shift2)
    if ref == 1:
        u1 = scale * s1
        u2 = scale * rot * s2
    else:
        u1 = scale * rot * s1
        u2 = scale * s2

    if noise and scenario.noise_power > 0.0:
        ss = np.random.SeedSequence(seed)
        child1, child2 = ss.spawn(2)
        sigma = math.sqrt(scenario.noise_power / 2.0)
        for stream, child in ((u1, child1), (u2, child2)):
            rng = np.random.default_rng(child)
            stream += sigma * (
                rng.standard_normal(k_buf) + 1j * rng.standard_normal(k_buf)
            )

    meta = ChannelMeta(
        tau1_s=tau1,
        tau2_s=tau2,
        delta_tau_s=delta_tau,
        kappa_mag=kappa_mag,
        kappa_phase=kappa_phase,
        group_delay_s=0.0,
        reference_receiver=ref,
    )
    fs = wave.sample_rate
    return ObservationPair(
        u1=Baseband(u1, fs, wave.origin_time),
        u2=Baseband(u2, fs, wave.origin_time),
        meta=meta,
        rng_seed=seed,
    )
