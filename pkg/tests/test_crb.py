"""CRB tests: closed form against hand values, integral against oracles,
position sweeps, feasibility sets."""

import numpy as np
import pytest
from scipy.integrate import quad

from fiberloc import (
    FiberScenario,
    PsdModel,
    crb_flat,
    crb_general,
    crb_position_sweep,
    feasible_region,
)


def scenario(loss, snr=10.0):
    return FiberScenario(
        length_m=60_000.0,
        loss_db_per_km=loss,
        source_position_m=0.0,
        snr_ref_db=snr,
        noise_floor_db=0.0,
    )


class TestCrbFlat:
    def test_hand_evaluated_point(self):
        # Independent arithmetic: denominator (1-1)*100 + 1 + 10 + 10 = 21,
        # information (2/3) pi^2 * 127 * 100 / 21.
        value = crb_flat(10.0, 1.0, 1.0, kappa_mag=1.0, n_samples=127, ts=1.0)
        oracle = 21.0 / ((2.0 / 3.0) * np.pi**2 * 127 * 100.0)
        assert value == pytest.approx(oracle, rel=1e-14)
        assert value == pytest.approx(2.513084476e-4, rel=1e-9)

    def test_kappa_unity_cancels_signal_squared_term(self):
        s, n1, n2, n = 7.0, 1.3, 0.8, 63
        full = crb_flat(s, n1, n2, 1.0, n)
        manual = (n1 * n2 + s * (n1 + n2)) / ((2 / 3) * np.pi**2 * n * s**2)
        assert full == pytest.approx(manual, rel=1e-14)

    def test_monotone_decreasing_in_signal_level(self):
        values = [crb_flat(s, 1.0, 1.0, 0.7, 127) for s in (1.0, 2.0, 5.0, 20.0)]
        assert np.all(np.diff(values) < 0)

    def test_doubling_n_halves_the_bound(self):
        a = crb_flat(10.0, 1.0, 1.0, 0.5, 100)
        b = crb_flat(10.0, 1.0, 1.0, 0.5, 200)
        assert b == pytest.approx(a / 2, rel=1e-14)

    def test_ts_cubed_scaling_exact(self):
        a = crb_flat(10.0, 1.0, 1.0, 0.5, 100, ts=1.0)
        b = crb_flat(10.0, 1.0, 1.0, 0.5, 100, ts=2.0)
        assert b == pytest.approx(a * 8.0, rel=1e-14)

    def test_kappa_zero_unbounded(self):
        with pytest.raises(ValueError, match="unbounded CRB"):
            crb_flat(10.0, 1.0, 1.0, 0.0, 127)

    def test_kappa_above_one_invalid(self):
        with pytest.raises(ValueError, match="kappa"):
            crb_flat(10.0, 1.0, 1.0, 1.01, 127)

    def test_nonpositive_noise_invalid(self):
        with pytest.raises(ValueError, match="noise PSD"):
            crb_flat(10.0, 0.0, 1.0, 0.5, 127)


class TestCrbGeneral:
    @pytest.mark.parametrize("kappa", [0.25, 0.5, 1.0])
    @pytest.mark.parametrize("n", [31, 127])
    def test_flat_psd_matches_closed_form(self, kappa, n):
        psd = PsdModel.flat(10.0, 1.0, 1.0, ts=1.0)
        general = crb_general(psd, kappa, n)
        flat = crb_flat(10.0, 1.0, 1.0, kappa, n, ts=1.0)
        assert general == pytest.approx(flat, rel=1e-6)

    def test_linear_in_inverse_n(self):
        psd = PsdModel.flat(5.0, 1.0, 2.0, ts=1.0)
        a = crb_general(psd, 0.8, 64)
        b = crb_general(psd, 0.8, 128)
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_gaussian_psd_against_quadrature_oracle(self):
        # Smooth non-flat signal PSD; oracle is adaptive quadrature.
        ts = 1.0
        kappa, n = 0.6, 127

        def s_func(f):
            return 8.0 * np.exp(-((f / 0.2) ** 2))

        psd = PsdModel(
            signal=lambda f: s_func(np.asarray(f, dtype=np.float64)),
            noise1=lambda f: np.full_like(np.asarray(f, dtype=np.float64), 1.0),
            noise2=lambda f: np.full_like(np.asarray(f, dtype=np.float64), 1.5),
            ts=ts,
        )

        def integrand(f):
            s = s_func(f)
            delta = (s + 1.0) * (s + 1.5) - kappa**2 * s**2
            return f**2 * s**2 / delta

        oracle_integral, err = quad(integrand, -0.5, 0.5, epsabs=1e-14, epsrel=1e-12)
        oracle = 1.0 / (8 * np.pi**2 * kappa**2 * n * oracle_integral)
        assert crb_general(psd, kappa, n) == pytest.approx(oracle, rel=1e-8)

    def test_kappa_zero_unbounded(self):
        psd = PsdModel.flat(10.0, 1.0, 1.0, ts=1.0)
        with pytest.raises(ValueError, match="unbounded CRB"):
            crb_general(psd, 0.0, 127)

    def test_invalid_psd_detected(self):
        bad = PsdModel(
            signal=lambda f: np.full_like(f, 10.0),
            noise1=lambda f: np.full_like(f, -1.0),
            noise2=lambda f: np.full_like(f, 1.0),
            ts=1.0,
        )
        with pytest.raises(ValueError, match="invalid PSD"):
            crb_general(bad, 0.5, 127)


class TestPositionSweep:
    POSITIONS = np.linspace(0.0, 60_000.0, 121)

    def test_minimum_at_cable_center(self):
        curve = crb_position_sweep(scenario(0.1), 127, self.POSITIONS)
        assert curve.positions_m[int(np.argmin(curve.crb_s2))] == pytest.approx(30_000.0)

    def test_mirror_symmetry_about_center(self):
        curve = crb_position_sweep(scenario(0.5), 63, self.POSITIONS)
        assert np.allclose(curve.crb_s2, curve.crb_s2[::-1], rtol=1e-10)

    def test_larger_n_lowers_curve_pointwise(self):
        c31 = crb_position_sweep(scenario(0.1), 31, self.POSITIONS)
        c255 = crb_position_sweep(scenario(0.1), 255, self.POSITIONS)
        assert np.all(c255.crb_s2 < c31.crb_s2)

    def test_higher_loss_raises_curve_pointwise(self):
        lo = crb_position_sweep(scenario(0.1), 127, self.POSITIONS)
        hi = crb_position_sweep(scenario(0.5), 127, self.POSITIONS)
        assert np.all(hi.crb_s2 > lo.crb_s2)

    def test_position_variance_conversion(self):
        curve = crb_position_sweep(scenario(0.1), 127, self.POSITIONS)
        assert np.allclose(curve.crb_m2, curve.crb_s2 * (2e8 / 2) ** 2, rtol=1e-14)

    def test_positive_and_flagged(self):
        curve = crb_position_sweep(scenario(0.5), 31, self.POSITIONS)
        assert np.all(curve.crb_s2 > 0)
        assert curve.applicable.dtype == bool
        # With Ts = 1 the flag marks bound values above 1.0.
        assert np.array_equal(curve.applicable, curve.crb_s2 <= 1.0)

    def test_grid_outside_cable_rejected(self):
        with pytest.raises(ValueError, match="outside the cable"):
            crb_position_sweep(scenario(0.1), 127, [-5.0, 10.0])


class TestFeasibleRegion:
    KAPPAS = [0.0, 0.2, 0.5, 0.8, 1.0]
    NS = [31, 63, 127, 255]

    def test_infinite_bound_admits_everything(self):
        region = feasible_region(np.inf, 10.0, 1.0, 1.0, self.KAPPAS, self.NS)
        assert len(region) == len(self.KAPPAS) * len(self.NS)

    def test_bound_below_best_case_is_empty(self):
        best = crb_flat(10.0, 1.0, 1.0, 1.0, max(self.NS))
        region = feasible_region(best * 0.999, 10.0, 1.0, 1.0, self.KAPPAS, self.NS)
        assert region == []

    def test_matches_brute_force_oracle(self):
        bound = 5e-4
        region = feasible_region(bound, 10.0, 1.0, 1.0, self.KAPPAS, self.NS)
        oracle = set()
        for k in self.KAPPAS:
            for n in self.NS:
                if k > 0 and crb_flat(10.0, 1.0, 1.0, k, n) <= bound:
                    oracle.add((k, n))
        assert set(region) == oracle
        assert region  # this bound admits at least the strongest settings

    def test_nonpositive_bound_rejected(self):
        with pytest.raises(ValueError, match="bound"):
            feasible_region(0.0, 10.0, 1.0, 1.0, self.KAPPAS, self.NS)
