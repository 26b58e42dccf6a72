"""Cross-ambiguity function tests: oracle equivalence, covariances, peak
refinement, CCDF statistics, product-term moments."""

import numpy as np
import pytest

from fiberloc import (
    Baseband,
    CafGrid,
    CafSurface,
    FiberScenario,
    PnSpec,
    WaveformSpec,
    caf_direct,
    caf_discrete,
    ccdf,
    delay_pair,
    gen_mseq,
    mean_variance_law,
    peak_search,
    propagate,
    refine_peak,
    shape_pulse,
    sidelobe_cells,
    term_moments,
)

FS = 16_000.0
SPEC = WaveformSpec(pn=PnSpec(7))


def grid_of(lags, dopplers, fs=FS):
    return CafGrid(np.asarray(lags), np.asarray(dopplers), fs)


def noise_stream(rng, n, power=1.0, fs=FS):
    scale = np.sqrt(power / 2.0)
    return Baseband(scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)), fs)


def scenario(position_m, loss=0.1, snr=10.0):
    return FiberScenario(60_000.0, loss, position_m, snr_ref_db=snr)


class TestOracleEquivalence:
    def test_random_streams_fast_equals_direct(self):
        rng = np.random.default_rng(0)
        u1 = noise_stream(rng, 256)
        u2 = noise_stream(rng, 290)
        bin_hz = FS / 256
        grid = grid_of(np.arange(-64, 65), np.arange(-3, 4) * bin_hz)
        fast = caf_discrete(u1, u2, grid)
        direct = caf_direct(u1, u2, grid)
        assert np.abs(fast.amplitudes - direct.amplitudes).max() < 1e-10

    def test_extreme_and_no_overlap_lags(self):
        rng = np.random.default_rng(1)
        u1 = noise_stream(rng, 48)
        u2 = noise_stream(rng, 32)
        grid = grid_of(np.arange(-31, 48, 3), [0.0, FS / 48])
        fast = caf_discrete(u1, u2, grid)
        direct = caf_direct(u1, u2, grid)
        assert np.abs(fast.amplitudes - direct.amplitudes).max() < 1e-12

    def test_autocorrelation_peak_is_mean_power(self):
        wave = shape_pulse(gen_mseq(SPEC.pn), SPEC)
        u = Baseband(wave.samples, FS)
        grid = grid_of([0], [0.0])
        surf = caf_discrete(u, u, grid)
        assert surf.amplitudes[0, 0] == pytest.approx(
            np.mean(np.abs(u.samples) ** 2), rel=1e-12
        )


class TestCovariances:
    def _streams(self):
        rng = np.random.default_rng(7)
        base = shape_pulse(gen_mseq(SPEC.pn), SPEC).samples
        return Baseband(base, FS), rng

    def test_integer_shift_moves_peak_by_minus_shift(self):
        u1, _ = self._streams()
        grid = grid_of(np.arange(-8, 9), [0.0])
        for d in (-3, 0, 2, 5):
            shifted = np.zeros_like(u1.samples)
            if d >= 0:
                shifted[d:] = u1.samples[: u1.k_samples - d]
            else:
                shifted[:d] = u1.samples[-d:]
            surf = caf_discrete(u1, Baseband(shifted, FS), grid)
            lag, _, _ = peak_search(surf)
            assert lag == -d

    def test_amplitude_scale_covariance(self):
        u1, _ = self._streams()
        grid = grid_of(np.arange(-5, 6), [0.0, FS / u1.k_samples])
        base = caf_discrete(u1, u1, grid)
        scaled = caf_discrete(u1, Baseband(3.5 * u1.samples, FS), grid)
        assert np.allclose(scaled.amplitudes, 3.5 * base.amplitudes, rtol=1e-12)
        assert peak_search(scaled)[:2] == peak_search(base)[:2]

    def test_doppler_covariance_on_bin(self):
        u1, _ = self._streams()
        k = u1.k_samples
        bin_hz = FS / k
        grid = grid_of(np.arange(-4, 5), np.arange(-3, 4) * bin_hz)
        t = np.arange(k)
        for bins in (-2, 1, 3):
            nu0 = bins * bin_hz
            u2 = Baseband(u1.samples * np.exp(-2j * np.pi * nu0 * t / FS), FS)
            surf = caf_discrete(u1, u2, grid)
            _, dop, _ = peak_search(surf)
            assert dop == pytest.approx(nu0)


class TestPeakSearch:
    def test_single_nonzero_cell(self):
        grid = grid_of(np.arange(-2, 3), [-10.0, 0.0, 10.0])
        amps = np.zeros((5, 3))
        amps[4, 0] = 2.0
        surf = CafSurface(amps, grid, k_samples=100)
        assert peak_search(surf) == (2, -10.0, 2.0)

    def test_tie_breaks_toward_smallest_lag_then_doppler(self):
        grid = grid_of(np.arange(-2, 3), [-10.0, 0.0, 10.0])
        surf = CafSurface(np.ones((5, 3)), grid, k_samples=10)
        lag, dop, amp = peak_search(surf)
        assert (lag, dop, amp) == (0, 0.0, 1.0)
        # Tie between symmetric lags resolves deterministically (negative first).
        amps = np.zeros((5, 3))
        amps[1, 1] = amps[3, 1] = 1.0
        surf = CafSurface(amps, grid, k_samples=10)
        assert peak_search(surf)[0] == -1


class TestRefinePeak:
    def test_symmetric_pattern_keeps_grid_location(self):
        grid = grid_of(np.arange(-2, 3), [-10.0, 0.0, 10.0])
        amps = np.full((5, 3), 0.2)
        amps[2, 1] = 1.0
        amps[1, 1] = amps[3, 1] = 0.5
        amps[2, 0] = amps[2, 2] = 0.5
        surf = CafSurface(amps, grid, k_samples=10)
        ref = refine_peak(surf)
        assert ref.refined
        assert ref.delta_tau_s == pytest.approx(0.0, abs=1e-15)
        assert ref.doppler_hz == pytest.approx(0.0, abs=1e-12)

    def test_fractional_delay_recovered_within_tolerance(self):
        # Ground truth +0.25 sample injected through the channel's exact
        # fractional delay: position offset from center by 0.25 * v_f * Ts / 2.
        offset_m = 0.25 * 2e8 / FS / 2
        sc = scenario(30_000.0 + offset_m, loss=0.0)
        wave = shape_pulse(gen_mseq(SPEC.pn), SPEC)
        pair = propagate(wave, sc, seed=0, noise=False)
        _, _, truth = delay_pair(sc)
        assert truth * FS == pytest.approx(0.25, rel=1e-12)
        grid = CafGrid.for_scenario(sc, FS, pair.u1.k_samples)
        surf = caf_discrete(pair.u1, pair.u2, grid)
        ref = refine_peak(surf)
        assert ref.refined
        assert abs(ref.delta_tau_s - truth) * FS < 0.05

    def test_boundary_peak_flagged_unrefined(self):
        grid = grid_of(np.arange(-2, 3), [-10.0, 0.0, 10.0])
        amps = np.zeros((5, 3))
        amps[0, 1] = 1.0  # on the lag boundary
        surf = CafSurface(amps, grid, k_samples=10)
        ref = refine_peak(surf)
        assert not ref.refined
        assert ref.delta_tau_s == pytest.approx(-2 / FS)

    def test_origin_offset_folded_into_estimate(self):
        grid = grid_of(np.arange(-2, 3), [0.0])
        amps = np.zeros((5, 1))
        amps[2, 0] = 1.0
        surf = CafSurface(amps, grid, k_samples=10, origin_offset_s=3e-5)
        assert refine_peak(surf).delta_tau_s == pytest.approx(3e-5)


class TestCcdf:
    def test_constant_surface_step_function(self):
        grid = grid_of(np.arange(-3, 4), [0.0])
        surf = CafSurface(np.full((7, 1), 0.7), grid, k_samples=10)
        thresholds, values = ccdf(surf, exclusion_radius=(0, 0))
        # Normalized cells all equal 1: CCDF is 1 below the value, 0 at/above.
        assert np.all(values[thresholds < 1.0] == 1.0)
        assert values[-1] == 0.0

    def test_all_cells_excluded_is_an_error(self):
        grid = grid_of(np.arange(-1, 2), [0.0])
        surf = CafSurface(np.ones((3, 1)), grid, k_samples=10)
        with pytest.raises(ValueError, match="every surface cell"):
            ccdf(surf, exclusion_radius=(5, 5))

    def test_noiseless_pn127_sparse_sidelobes(self):
        # Reference noiseless surface: essentially no cell beyond the
        # mainlobe reaches half the peak.
        sc = scenario(1_000.0)
        wave = shape_pulse(gen_mseq(SPEC.pn), SPEC)
        pair = propagate(wave, sc, seed=0, noise=False)
        grid = grid_of(np.arange(-40, 41), np.arange(-2, 3) * FS / pair.u1.k_samples)
        surf = caf_discrete(pair.u1, pair.u2, grid)
        thresholds, values = ccdf(surf, exclusion_radius=(4, 1))
        at_half = values[np.searchsorted(thresholds, 0.5)]
        assert at_half < 1e-2

    def test_monotone_non_increasing(self):
        rng = np.random.default_rng(3)
        u1 = noise_stream(rng, 400)
        u2 = noise_stream(rng, 400)
        grid = grid_of(np.arange(-10, 11), [0.0])
        surf = caf_discrete(u1, u2, grid)
        _, values = ccdf(surf, exclusion_radius=(1, 0))
        assert np.all(np.diff(values) <= 0)
        assert values.max() <= 1.0 and values.min() >= 0.0


class TestNoiseFluctuation:
    def test_rms_scales_inverse_sqrt_k(self):
        # Sample-mean law: quadrupling K halves the cell RMS (within 10%).
        rng = np.random.default_rng(11)
        rms = {}
        for k in (1 << 10, 1 << 12):
            cells = []
            grid = grid_of(np.arange(-5, 6), np.arange(-2, 3) * FS / k)
            for _ in range(20):
                surf = caf_discrete(noise_stream(rng, k), noise_stream(rng, k), grid)
                cells.append(surf.amplitudes.ravel())
            rms[k] = np.sqrt(np.mean(np.concatenate(cells) ** 2))
        ratio = rms[1 << 10] / rms[1 << 12]
        assert ratio == pytest.approx(2.0, rel=0.10)


class TestTermMoments:
    def test_zero_mean_unit_variance_noise_product(self):
        tm = term_moments(0.0, 0.0, 1.0, 1.0, 1.0, 1.0)
        assert tm.noise_noise.mean == 0.0
        assert tm.noise_noise.variance == pytest.approx(1.0)

    def test_cross_terms_have_zero_mean(self):
        tm = term_moments(0.3 + 0.1j, -0.2, 1.0, 2.0, 0.5, 0.25)
        assert tm.noise_signal.mean == 0.0
        assert tm.signal_noise.mean == 0.0
        assert tm.noise_signal.variance == pytest.approx((1.0 + abs(0.3 + 0.1j) ** 2) * 0.25)
        assert tm.signal_noise.variance == pytest.approx((2.0 + 0.04) * 0.5)

    def test_example_means_and_variance(self):
        tm = term_moments(1.0, 2.0, 1.0, 4.0, 1.0, 1.0)
        assert tm.noise_noise.mean == pytest.approx(2.0)
        assert tm.noise_noise.variance == pytest.approx(12.0)

    def test_monte_carlo_oracle_within_three_sigma(self):
        rng = np.random.default_rng(99)
        n = 1_000_000
        mu1, mu2, s1, s2 = 1.0, 2.0, 1.0, 4.0
        n1 = mu1 + np.sqrt(s1 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        n2 = mu2 + np.sqrt(s2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        prod = n1 * n2
        tm = term_moments(mu1, mu2, s1, s2, 1.0, 1.0)
        mean_se = np.sqrt(tm.noise_noise.variance / n)
        assert abs(np.mean(prod) - tm.noise_noise.mean) < 3 * mean_se
        dev = np.abs(prod - tm.noise_noise.mean) ** 2
        var_hat = np.mean(dev)
        var_se = np.std(dev) / np.sqrt(n)
        assert abs(var_hat - tm.noise_noise.variance) < 3 * var_se

    def test_signal_term_left_to_autocorrelation(self):
        tm = term_moments(0.0, 0.0, 1.0, 1.0, 1.0, 1.0)
        assert tm.signal_signal.mean is None
        assert tm.signal_signal.variance is None

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError, match="variances"):
            term_moments(0.0, 0.0, -1.0, 1.0, 1.0, 1.0)


class TestMeanVarianceLaw:
    def test_point_values(self):
        assert mean_variance_law(1.0, 1) == 1.0
        assert mean_variance_law(1.0, 100) == pytest.approx(0.01)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            mean_variance_law(1.0, 0)
        with pytest.raises(ValueError):
            mean_variance_law(-1.0, 10)


class TestGridValidation:
    def test_zero_doppler_bin_required(self):
        with pytest.raises(ValueError, match="zero bin"):
            grid_of([0, 1], [5.0, 10.0])

    def test_lags_exceeding_buffer_rejected(self):
        rng = np.random.default_rng(0)
        u = noise_stream(rng, 16)
        grid = grid_of(np.arange(-20, 21), [0.0])
        with pytest.raises(ValueError, match="exceeds the padded"):
            caf_discrete(u, u, grid)

    def test_empty_stream_rejected(self):
        rng = np.random.default_rng(0)
        u = noise_stream(rng, 16)
        empty = Baseband(np.zeros(0, dtype=complex), FS)
        with pytest.raises(ValueError, match="empty input"):
            caf_discrete(empty, u, grid_of([0], [0.0]))

    def test_sample_rate_mismatch_rejected(self):
        rng = np.random.default_rng(0)
        u1 = noise_stream(rng, 16)
        u2 = noise_stream(rng, 16, fs=8_000.0)
        with pytest.raises(ValueError, match="sample-rate mismatch"):
            caf_discrete(u1, u2, grid_of([0], [0.0]))

    def test_sidelobe_cells_kept_count(self):
        grid = grid_of(np.arange(-3, 4), [-1.0, 0.0, 1.0])
        amps = np.ones((7, 3))
        amps[3, 1] = 2.0
        surf = CafSurface(amps, grid, k_samples=10)
        cells = sidelobe_cells(surf, exclusion_radius=(1, 0))
        # Excluded: |i-3|<=1 and |j-1|<=0 -> 3 cells of 21.
        assert cells.size == 18
