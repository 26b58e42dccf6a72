"""Acoustic waveform synthesis: m-sequences, pulse shaping, matched filtering.

The transmitted payload is one period of a maximal-length PN sequence,
BPSK-mapped to +/-1 chips, zero-stuffed to the output rate and shaped with a
root-raised-cosine (RRC) filter.  The receiver applies the conjugate
time-reversed RRC as a matched filter, so the cascade is a (near-)Nyquist
raised-cosine pulse with negligible inter-chip interference.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.signal import fftconvolve

# Feedback polynomials over GF(2), one primitive polynomial per register
# length.  {m, t, ...} encodes x^m + x^t + ... + 1 (Fibonacci LFSR taps).
PRIMITIVE_TAPS: dict[int, frozenset[int]] = {
    2: frozenset({2, 1}),
    3: frozenset({3, 1}),
    4: frozenset({4, 1}),
    5: frozenset({5, 2}),
    6: frozenset({6, 1}),
    7: frozenset({7, 3}),
    8: frozenset({8, 6, 5, 4}),
    9: frozenset({9, 4}),
    10: frozenset({10, 7}),
}


@dataclass(frozen=True)
class PnSpec:
    """Maximal-length PN sequence generator configuration.

    ``taps`` defaults to the built-in primitive polynomial for ``degree``;
    any override must still be primitive (checked at generation time by a
    full cycle test).  Chip mapping is fixed: bit 0 -> +1, bit 1 -> -1.
    """

    degree: int
    taps: frozenset[int] | None = None
    seed_state: int = 1

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError(f"degree must be >= 2, got {self.degree}")
        if self.taps is None:
            if self.degree not in PRIMITIVE_TAPS:
                raise ValueError(
                    f"no built-in polynomial for degree {self.degree}; pass taps"
                )
            object.__setattr__(self, "taps", PRIMITIVE_TAPS[self.degree])
        else:
            object.__setattr__(self, "taps", frozenset(int(t) for t in self.taps))
            bad = [t for t in self.taps if not 1 <= t <= self.degree]
            if bad:
                raise ValueError(f"tap positions {bad} outside 1..{self.degree}")
        if not 0 < self.seed_state < (1 << self.degree):
            if self.seed_state == 0:
                raise ValueError("degenerate LFSR: seed state must be nonzero")
            raise ValueError(
                f"seed state {self.seed_state} does not fit a {self.degree}-bit register"
            )

    @property
    def period(self) -> int:
        return (1 << self.degree) - 1


@dataclass(frozen=True)
class WaveformSpec:
    """Transmit waveform parameters.

    ``sample_rate`` is the output rate (chip rate times ``oversampling``);
    ``carrier_hz`` is carried as metadata only, all processing is complex
    baseband.  The shaping filter has ``filter_span * oversampling + 1``
    symmetric taps.
    """

    pn: PnSpec
    sample_rate: float = 16_000.0
    oversampling: int = 4
    rolloff: float = 0.31
    filter_span: int = 8
    carrier_hz: float = 0.0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.oversampling < 1:
            raise ValueError("oversampling must be a positive integer")
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in (0, 1], got {self.rolloff}")
        if self.filter_span < 1:
            raise ValueError("filter_span must be >= 1")
        if (self.filter_span * self.oversampling) % 2 != 0:
            raise ValueError("filter_span * oversampling must be even for a symmetric filter")

    @property
    def chip_rate(self) -> float:
        return self.sample_rate / self.oversampling

    @property
    def ts(self) -> float:
        """Sample period in seconds."""
        return 1.0 / self.sample_rate

    @property
    def filter_taps(self) -> int:
        return self.filter_span * self.oversampling + 1


@dataclass
class Baseband:
    """Complex baseband sample stream.

    ``origin_time`` is the absolute time of the first sample; filters update
    it by their group delay so downstream delay estimates stay unbiased.
    """

    samples: np.ndarray
    sample_rate: float
    origin_time: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain NaN or Inf")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def k_samples(self) -> int:
        """Sample count K used by the discrete CAF normalization."""
        return self.samples.size

    @property
    def ts(self) -> float:
        return 1.0 / self.sample_rate


def gen_mseq(spec: PnSpec) -> np.ndarray:
    """Generate one full period of a maximal-length +/-1 chip sequence.

    Runs a Fibonacci LFSR realizing the recurrence b[i] = XOR of b[i-t] over
    the tap exponents t: bit t-1 of the state holds b[i-t], the emitted bit
    is the oldest register bit and the feedback is shifted in at the bottom.
    The state cycle is checked explicitly, so a non-primitive tap set is
    rejected rather than silently producing a short period.
    """
    m = spec.degree
    n = spec.period
    mask = 0
    for t in spec.taps:
        mask |= 1 << (t - 1)
    full = (1 << m) - 1
    state = spec.seed_state
    bits = np.empty(n, dtype=np.int8)
    for i in range(n):
        bits[i] = (state >> (m - 1)) & 1
        fb = (state & mask).bit_count() & 1
        state = ((state << 1) | fb) & full
        if state == spec.seed_state and i < n - 1:
            raise ValueError(
                f"non-maximal polynomial: taps {sorted(spec.taps)} cycle after {i + 1} steps"
            )
    if state != spec.seed_state:
        raise ValueError(
            f"non-maximal polynomial: taps {sorted(spec.taps)} do not close a {n}-state cycle"
        )
    return (1 - 2 * bits).astype(np.int8)


def _rrc_closed_form(oversampling: int, span: int, rolloff: float) -> np.ndarray:
    """Time-truncated analytic root-raised-cosine impulse response."""
    n = span * oversampling + 1
    t = (np.arange(n) - (n - 1) / 2.0) / oversampling  # in chip periods
    beta = rolloff
    h = np.empty(n, dtype=np.float64)

    zero = np.isclose(t, 0.0)
    brk = np.isclose(np.abs(t), 1.0 / (4.0 * beta))
    h[zero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    h[brk] = (beta / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta))
    )
    rest = ~(zero | brk)
    tr = t[rest]
    h[rest] = (
        np.sin(np.pi * tr * (1.0 - beta)) + 4.0 * beta * tr * np.cos(np.pi * tr * (1.0 + beta))
    ) / (np.pi * tr * (1.0 - (4.0 * beta * tr) ** 2))

    return h / np.sqrt(np.sum(h * h))


def _cascade_isi(h: np.ndarray, oversampling: int) -> np.ndarray:
    """Peak-normalized cascade values at nonzero chip instants."""
    g = np.convolve(h, h)
    c = g.size // 2
    ks = range(1, (g.size - 1 - c) // oversampling + 1)
    return np.array([g[c + k * oversampling] for k in ks]) / g[c]


@lru_cache(maxsize=32)
def _rrc_design(oversampling: int, span: int, rolloff: float) -> np.ndarray:
    """Finite-span RRC with the cascade Nyquist property restored.

    Hard truncation of the analytic RRC leaves the Tx/matched-filter cascade
    with inter-chip interference near 1e-2 at these spans, so the truncated
    response is touched up by a least-squares search over the symmetric taps
    that drives the cascade's chip-instant samples to zero while pinning the
    out-of-band leakage at the raised-cosine band edge.  Falls back to the
    plain truncation if the search does not improve it.
    """
    h0 = _rrc_closed_form(oversampling, span, rolloff)
    if oversampling < 2:
        return h0
    n = h0.size
    half0 = h0[n // 2 :]

    nfft = 2048
    fgrid = np.fft.rfftfreq(nfft, d=1.0 / oversampling)
    stop = fgrid > (1.0 + rolloff) / 2.0 * 1.02
    shift = -(n // 2)

    def build(half: np.ndarray) -> np.ndarray:
        return np.concatenate([half[:0:-1], half])

    def cost(half: np.ndarray) -> float:
        h = build(half)
        isi = _cascade_isi(h, oversampling)
        padded = np.roll(np.concatenate([h, np.zeros(nfft - n)]), shift)
        leak = np.abs(np.fft.rfft(padded))[stop]
        return (
            1e6 * float(np.sum(isi**2))
            + float(np.sum((h - h0) ** 2))
            + 300.0 * float(np.sum(leak**2))
        )

    result = minimize(
        cost, half0, method="L-BFGS-B", options={"maxiter": 4000, "ftol": 1e-18, "gtol": 1e-14}
    )
    h = build(result.x)
    h = h / np.sqrt(np.sum(h * h))
    if np.max(np.abs(_cascade_isi(h, oversampling))) >= np.max(
        np.abs(_cascade_isi(h0, oversampling))
    ):
        return h0
    return h


def rrc_taps(oversampling: int, span: int, rolloff: float) -> np.ndarray:
    """Unit-energy root-raised-cosine shaping filter.

    ``span * oversampling + 1`` symmetric taps; the Tx filter convolved with
    its matched filter is Nyquist at chip instants to well below 1e-3 (see
    ``_rrc_design`` for the finite-span correction).
    """
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must lie in (0, 1], got {rolloff}")
    if oversampling < 1 or span < 1:
        raise ValueError("oversampling and span must be positive integers")
    return _rrc_design(int(oversampling), int(span), float(rolloff)).copy()


def shape_pulse(chips: np.ndarray, spec: WaveformSpec) -> Baseband:
    """Zero-stuff +/-1 chips to the sample rate and apply the RRC filter.

    Output length is ``len(chips) * oversampling + filter transient`` and the
    origin time is set to minus the filter group delay, so the pulse center
    of chip k sits at t = k / chip_rate.
    """
    chips = np.asarray(chips)
    if chips.size == 0:
        raise ValueError("chips must be non-empty")
    if not np.all(np.isin(chips, (-1, 1))):
        raise ValueError("chips must take values in {+1, -1}")
    os = spec.oversampling
    up = np.zeros(chips.size * os, dtype=np.float64)
    up[::os] = chips.astype(np.float64)
    h = rrc_taps(os, spec.filter_span, spec.rolloff)
    y = fftconvolve(up, h, mode="full")
    group_delay = (h.size - 1) / 2.0 * spec.ts
    return Baseband(y.astype(np.complex128), spec.sample_rate, origin_time=-group_delay)


def matched_filter(rx: Baseband, spec: WaveformSpec) -> Baseband:
    """Convolve with the conjugate time-reversed transmit pulse.

    The filter group delay is absorbed into ``origin_time``; on a shaped
    stream the cascade samples to a raised-cosine pulse train.
    """
    if rx.sample_rate != spec.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: stream {rx.sample_rate} Hz, spec {spec.sample_rate} Hz"
        )
    h = rrc_taps(spec.oversampling, spec.filter_span, spec.rolloff)
    mf = np.conj(h[::-1])
    y = fftconvolve(rx.samples, mf, mode="full")
    group_delay = (h.size - 1) / 2.0 * spec.ts
    return Baseband(y, rx.sample_rate, origin_time=rx.origin_time - group_delay)
