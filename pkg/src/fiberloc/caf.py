"""Discrete cross-ambiguity function over a delay/Doppler grid.

The surface cell at integer lag l and Doppler nu is

    |(1/K) sum_k u1(k) conj(u2(k - l)) exp(-j 2 pi nu k Ts)|

with K the length of u1 and u2 zero-padded outside its support (aperiodic
correlation).  Axis conventions are chosen so the peak lag in seconds equals
the delay of u1 relative to u2 (tau1 - tau2 for a propagated pair) and the
peak Doppler equals the frequency offset of u1 relative to u2.  Any origin
difference between the two streams (e.g. one-sided filtering) is folded into
the lag axis so estimates stay unbiased.

``caf_discrete`` is the fast FFT-correlation implementation; ``caf_direct``
evaluates the same double sum literally and serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.fft import next_fast_len

from .channel import FiberScenario
from .signal import Baseband


@dataclass(frozen=True)
class CafGrid:
    """Delay/Doppler search grid: integer sample lags and Doppler bins in Hz."""

    delay_lags: np.ndarray
    doppler_hz: np.ndarray
    sample_rate: float

    def __post_init__(self):
        lags = np.asarray(self.delay_lags, dtype=np.int64)
        dops = np.asarray(self.doppler_hz, dtype=np.float64)
        if lags.size == 0 or dops.size == 0:
            raise ValueError("grid axes must be non-empty")
        if np.unique(lags).size != lags.size or np.any(np.diff(lags) <= 0):
            lags = np.unique(lags)
        if not np.any(dops == 0.0):
            raise ValueError("Doppler axis must contain the zero bin")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "delay_lags", lags)
        object.__setattr__(self, "doppler_hz", np.sort(dops))

    @classmethod
    def for_scenario(
        cls,
        scenario: FiberScenario,
        sample_rate: float,
        k_samples: int,
        doppler_half_bins: int = 2,
        lag_margin: int = 2,
    ) -> "CafGrid":
        """Grid covering the physical delay-difference range of a scenario.

        Lags span +/- L / v_f (rounded out) plus a margin so a peak at the
        range edge stays interior for interpolation; Doppler bins are spaced
        at the DFT resolution 1/(K Ts) around zero.
        """
        max_lag = int(np.ceil(scenario.length_m / scenario.light_speed_mps * sample_rate))
        max_lag += lag_margin
        lags = np.arange(-max_lag, max_lag + 1)
        bin_hz = sample_rate / k_samples
        dops = np.arange(-doppler_half_bins, doppler_half_bins + 1) * bin_hz
        return cls(delay_lags=lags, doppler_hz=dops, sample_rate=sample_rate)

    @property
    def ts(self) -> float:
        return 1.0 / self.sample_rate


@dataclass
class CafSurface:
    """Nonnegative CAF amplitudes indexed (lag, doppler)."""

    amplitudes: np.ndarray
    grid: CafGrid
    k_samples: int
    normalized: bool = True
    origin_offset_s: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        shape = (self.grid.delay_lags.size, self.grid.doppler_hz.size)
        if self.amplitudes.shape != shape:
            raise ValueError(f"amplitude grid {self.amplitudes.shape} does not match axes {shape}")
        if np.any(self.amplitudes < 0):
            raise ValueError("amplitudes must be nonnegative")

    @property
    def lag_seconds(self) -> np.ndarray:
        """Lag axis in seconds, corrected for any stream origin difference."""
        return self.grid.delay_lags * self.grid.ts + self.origin_offset_s


class RefinedPeak(NamedTuple):
    delta_tau_s: float
    doppler_hz: float
    amplitude: float
    refined: bool


class TermMoment(NamedTuple):
    mean: complex | None
    variance: float | None


@dataclass(frozen=True)
class TermMoments:
    """Mean/variance of the four CAF product terms.

    The pure-signal term carries no scalar moments here: its mean is the
    (scaled, delayed) waveform autocorrelation and is evaluated from the
    waveform itself, not from these closed forms.
    """

    signal_signal: TermMoment
    noise_signal: TermMoment
    signal_noise: TermMoment
    noise_noise: TermMoment

    def __post_init__(self):
        for name in ("noise_signal", "signal_noise", "noise_noise"):
            var = getattr(self, name).variance
            if var is not None and var < 0:
                raise ValueError(f"{name} variance must be nonnegative")


def _check_pair(u1: Baseband, u2: Baseband, grid: CafGrid) -> None:
    if u1.k_samples == 0 or u2.k_samples == 0:
        raise ValueError("empty input stream")
    if u1.sample_rate != u2.sample_rate:
        raise ValueError("sample-rate mismatch between streams")
    if u1.sample_rate != grid.sample_rate:
        raise ValueError("grid sample rate does not match the streams")
    max_abs_lag = int(np.max(np.abs(grid.delay_lags)))
    if max_abs_lag >= max(u1.k_samples, u2.k_samples):
        raise ValueError(
            f"grid lag {max_abs_lag} exceeds the padded correlation buffer"
        )


def caf_discrete(u1: Baseband, u2: Baseband, grid: CafGrid) -> CafSurface:
    """Fast CAF: one FFT cross-correlation per Doppler bin, 1/K normalized."""
    _check_pair(u1, u2, grid)
    x1 = u1.samples
    x2 = u2.samples
    k = u1.k_samples
    n = next_fast_len(x1.size + x2.size - 1)
    f2 = np.conj(np.fft.fft(x2, n))
    t = np.arange(x1.size)
    lags = grid.delay_lags
    amps = np.empty((lags.size, grid.doppler_hz.size), dtype=np.float64)
    ts = grid.ts
    for j, nu in enumerate(grid.doppler_hz):
        w = x1 * np.exp(-2j * np.pi * nu * ts * t)
        corr = np.fft.ifft(np.fft.fft(w, n) * f2)
        # corr[m % n] = sum_k w(k) conj(x2(k - m)) for m in the valid range.
        amps[:, j] = np.abs(corr[np.mod(lags, n)]) / k
    # Lags without any overlap are identically zero under zero padding.
    no_overlap = (lags > x1.size - 1) | (lags < -(x2.size - 1))
    amps[no_overlap, :] = 0.0
    return CafSurface(
        amplitudes=amps,
        grid=grid,
        k_samples=k,
        normalized=True,
        origin_offset_s=u1.origin_time - u2.origin_time,
    )


def caf_direct(u1: Baseband, u2: Baseband, grid: CafGrid) -> CafSurface:
    """Literal double-sum CAF; the independent oracle for ``caf_discrete``."""
    _check_pair(u1, u2, grid)
    x1 = u1.samples
    x2 = u2.samples
    k = u1.k_samples
    ts = grid.ts
    t = np.arange(k)
    amps = np.empty((grid.delay_lags.size, grid.doppler_hz.size), dtype=np.float64)
    for i, lag in enumerate(grid.delay_lags):
        idx = t - lag
        valid = (idx >= 0) & (idx < x2.size)
        x2_shift = np.zeros(k, dtype=np.complex128)
        x2_shift[valid] = x2[idx[valid]]
        prod = x1 * np.conj(x2_shift)
        for j, nu in enumerate(grid.doppler_hz):
            total = np.sum(prod * np.exp(-2j * np.pi * nu * ts * t))
            amps[i, j] = np.abs(total) / k
    return CafSurface(
        amplitudes=amps,
        grid=grid,
        k_samples=k,
        normalized=True,
        origin_offset_s=u1.origin_time - u2.origin_time,
    )


def _peak_indices(surface: CafSurface) -> tuple[int, int]:
    """Argmax cell with deterministic ties: smallest |lag|, then smallest |nu|."""
    amps = surface.amplitudes
    peak = np.max(amps)
    ties = np.argwhere(amps == peak)
    lags = surface.grid.delay_lags
    dops = surface.grid.doppler_hz
    order = sorted(
        (tuple(ij) for ij in ties),
        key=lambda ij: (
            abs(int(lags[ij[0]])),
            abs(float(dops[ij[1]])),
            int(lags[ij[0]]),
            float(dops[ij[1]]),
        ),
    )
    return order[0]


def peak_search(surface: CafSurface) -> tuple[int, float, float]:
    """Grid argmax: (integer lag, Doppler in Hz, amplitude)."""
    i, j = _peak_indices(surface)
    return (
        int(surface.grid.delay_lags[i]),
        float(surface.grid.doppler_hz[j]),
        float(surface.amplitudes[i, j]),
    )


def _parabolic_offset(a: float, b: float, c: float) -> float:
    """Vertex offset in [-0.5, 0.5] of a parabola through (-1,a), (0,b), (1,c)."""
    denom = a - 2.0 * b + c
    if denom == 0.0:
        return 0.0
    off = 0.5 * (a - c) / denom
    return float(np.clip(off, -0.5, 0.5))


def refine_peak(surface: CafSurface) -> RefinedPeak:
    """Sub-cell peak location by separable 3-point parabolic interpolation.

    Each axis with at least three points is refined when the peak is
    interior along it; a boundary peak leaves that axis at its grid value
    and clears the ``refined`` flag.  Axes too short to interpolate are
    returned as-is without affecting the flag.
    """
    i, j = _peak_indices(surface)
    amps = surface.amplitudes
    lags = surface.grid.delay_lags
    dops = surface.grid.doppler_hz
    ts = surface.grid.ts

    refined = True
    lag_val = float(lags[i])
    if lags.size >= 3:
        if 0 < i < lags.size - 1:
            lag_val += _parabolic_offset(amps[i - 1, j], amps[i, j], amps[i + 1, j])
        else:
            refined = False
    dop_val = float(dops[j])
    if dops.size >= 3:
        if 0 < j < dops.size - 1:
            step = (dops[j + 1] - dops[j - 1]) / 2.0
            dop_val += step * _parabolic_offset(amps[i, j - 1], amps[i, j], amps[i, j + 1])
        else:
            refined = False

    return RefinedPeak(
        delta_tau_s=lag_val * ts + surface.origin_offset_s,
        doppler_hz=dop_val,
        amplitude=float(amps[i, j]),
        refined=refined,
    )


def sidelobe_cells(
    surface: CafSurface, exclusion_radius: tuple[int, int] = (4, 1)
) -> np.ndarray:
    """Surface amplitudes outside the rectangle around the main peak.

    ``exclusion_radius`` is (lag cells, Doppler cells); the default drops one
    chip of four samples in lag and one bin in Doppler.
    """
    r_lag, r_dop = exclusion_radius
    if r_lag < 0 or r_dop < 0:
        raise ValueError("exclusion radius must be nonnegative")
    i, j = _peak_indices(surface)
    ii, jj = np.meshgrid(
        np.arange(surface.grid.delay_lags.size),
        np.arange(surface.grid.doppler_hz.size),
        indexing="ij",
    )
    keep = (np.abs(ii - i) > r_lag) | (np.abs(jj - j) > r_dop)
    cells = surface.amplitudes[keep]
    if cells.size == 0:
        raise ValueError("exclusion radius removes every surface cell")
    return cells


def ccdf(
    surface: CafSurface,
    exclusion_radius: tuple[int, int] = (4, 1),
    thresholds: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CCDF of peak-normalized amplitudes around the main peak.

    Returns (thresholds, fraction of retained cells exceeding each
    threshold); the curve is monotone non-increasing on [0, 1].
    """
    cells = sidelobe_cells(surface, exclusion_radius)
    _, _, peak = peak_search(surface)
    if peak == 0.0:
        raise ValueError("surface peak is zero; cannot normalize thresholds")
    normalized = cells / peak
    if thresholds is None:
        thresholds = np.linspace(0.0, 1.0, 201)
    else:
        thresholds = np.asarray(thresholds, dtype=np.float64)
    exceed = np.mean(normalized[None, :] > thresholds[:, None], axis=1)
    return thresholds, exceed


def term_moments(
    mu1: complex,
    mu2: complex,
    sigma1_sq: float,
    sigma2_sq: float,
    sigma_x1_sq: float,
    sigma_x2_sq: float,
) -> TermMoments:
    """Closed-form moments of the CAF product terms.

    Arguments are the noise means and variances of the two streams plus the
    (zero-mean) signal-component variances.  All factors in the noise-bearing
    products are statistically independent, so the noise-only product has
    mean mu1 mu2 and the mixed products have mean zero.
    """
    if sigma1_sq < 0 or sigma2_sq < 0 or sigma_x1_sq < 0 or sigma_x2_sq < 0:
        raise ValueError("variances must be nonnegative")
    p1 = sigma1_sq + abs(mu1) ** 2
    p2 = sigma2_sq + abs(mu2) ** 2
    return TermMoments(
        signal_signal=TermMoment(mean=None, variance=None),
        noise_signal=TermMoment(mean=0.0, variance=p1 * sigma_x2_sq),
        signal_noise=TermMoment(mean=0.0, variance=p2 * sigma_x1_sq),
        noise_noise=TermMoment(
            mean=mu1 * mu2,
            variance=p1 * p2 - abs(mu1) ** 2 * abs(mu2) ** 2,
        ),
    )


def mean_variance_law(sigma_b_sq: float, m_samples: int) -> float:
    """Variance of an M-sample mean of zero-mean samples with variance sigma^2."""
    if m_samples < 1:
        raise ValueError("sample count must be >= 1")
    if sigma_b_sq < 0:
        raise ValueError("variance must be nonnegative")
    return sigma_b_sq / m_samples
