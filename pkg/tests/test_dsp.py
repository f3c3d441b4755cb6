import math

import numpy as np
import pytest

from retarget import dsp, fixtures
from retarget.dsp import (
    EcgSignal, InvalidConfig, InvalidSchedule, PtConfig, SignalTooShort,
    bandpass_taps, ekg_peak_det, hr_series_from_peaks, pan_tompkin, synth_ecg,
)


def matched(planted, detected, tol):
    used = set()
    hits = 0
    for p in planted:
        best = None
        for k, d in enumerate(detected):
            if k in used or abs(d - p) > tol:
                continue
            if best is None or abs(d - p) < abs(detected[best] - p):
                best = k
        if best is not None:
            used.add(best)
            hits += 1
    return hits


class TestSynth:
    def test_steady_minute_schedule(self):
        sig, planted = synth_ecg([(0.0, 10.0, 60)], fs=360)
        assert len(planted) == 10
        assert all(b - a == 360 for a, b in zip(planted, planted[1:]))
        assert len(sig.samples) == 3600

    def test_two_phase_gap_switch(self):
        _, planted = synth_ecg([(0.0, 120.0, 70), (120.0, 210.0, 120)], fs=360)
        gaps = [b - a for a, b in zip(planted, planted[1:])]
        lo = round(60.0 / 70.0 * 360)
        hi = round(60.0 / 120.0 * 360)
        boundary = 120 * 360
        before = [g for a, g in zip(planted, gaps) if a + g < boundary]
        after = [g for a, g in zip(planted, gaps) if a > boundary]
        assert all(abs(g - lo) <= 1 for g in before)
        assert all(abs(g - hi) <= 1 for g in after)

    def test_noise_does_not_move_truth(self):
        _, clean = synth_ecg([(0.0, 20.0, 75)], fs=360, noise_amplitude=0.0)
        _, noisy = synth_ecg([(0.0, 20.0, 75)], fs=360, noise_amplitude=0.05, seed=3)
        assert clean == noisy

    def test_generator_is_deterministic(self):
        a, _ = synth_ecg([(0.0, 5.0, 80)], fs=200, noise_amplitude=0.03, seed=9)
        b, _ = synth_ecg([(0.0, 5.0, 80)], fs=200, noise_amplitude=0.03, seed=9)
        assert a.samples == b.samples

    def test_invalid_schedules(self):
        with pytest.raises(InvalidSchedule):
            synth_ecg([], fs=360)
        with pytest.raises(InvalidSchedule):
            synth_ecg([(0.0, 10.0, 25)], fs=360)  # bpm below 30
        with pytest.raises(InvalidSchedule):
            synth_ecg([(0.0, 10.0, 60), (11.0, 20.0, 80)], fs=360)  # gap
        with pytest.raises(InvalidSchedule):
            synth_ecg([(5.0, 5.0, 60)], fs=360)  # not increasing


class TestDetector:
    def test_thirty_second_steady_rate(self):
        sig, planted = synth_ecg([(0.0, 30.0, 60)], fs=360)
        det = pan_tompkin(sig)
        assert abs(len(det.peak_indices) - 30) <= 1
        tol = int(round(0.050 * 360))
        assert matched(planted, det.peak_indices, tol) >= len(det.peak_indices) - 1

    def test_flat_zero_signal(self):
        det = pan_tompkin(EcgSignal((0.0,) * 3600, 360))
        assert det.peak_indices == ()

    def test_constant_signal_has_no_energy(self):
        det = pan_tompkin(EcgSignal((0.7,) * 3600, 360))
        assert det.peak_indices == ()
        x = np.full(1000, 0.7)
        assert np.all(dsp._five_point_derivative(x) == 0.0)

    def test_two_rate_interval_clusters(self):
        sig, _ = synth_ecg([(0.0, 120.0, 70), (120.0, 210.0, 120)], fs=360)
        det = pan_tompkin(sig)
        gaps = np.diff(det.peak_indices) / 360.0
        slow = gaps[gaps > 0.65]
        fast = gaps[gaps <= 0.65]
        assert len(slow) and len(fast)
        assert np.all(np.abs(slow - 60.0 / 70.0) <= 0.1 * 60.0 / 70.0)
        assert np.all(np.abs(fast - 60.0 / 120.0) <= 0.1 * 60.0 / 120.0)

    def test_refractory_and_order_invariants(self):
        for fx in fixtures.FIXTURES:
            sig, _ = fixtures.generate(fx)
            det = pan_tompkin(sig)
            refr = int(round(0.2 * fx.fs))
            idx = det.peak_indices
            assert all(b - a >= refr for a, b in zip(idx, idx[1:]))
            assert all(0 <= i < len(sig.samples) for i in idx)
            assert len(det.peak_amplitudes) == len(idx)

    def test_signal_too_short(self):
        with pytest.raises(SignalTooShort):
            pan_tompkin(EcgSignal((0.0,) * 100, 360))

    def test_invalid_config(self):
        with pytest.raises(InvalidConfig):
            pan_tompkin(EcgSignal((0.0,) * 1000, 200),
                        PtConfig(band_low_hz=50.0, band_high_hz=40.0))
        with pytest.raises(InvalidConfig):
            pan_tompkin(EcgSignal((0.0,) * 1000, 200),
                        PtConfig(band_high_hz=150.0))  # above Nyquist

    def test_config_is_data_not_constants(self):
        sig, _ = synth_ecg([(0.0, 20.0, 60)], fs=360)
        wide = pan_tompkin(sig, PtConfig(band_low_hz=3.0, band_high_hz=20.0))
        assert len(wide.peak_indices) >= 18  # still detects with retuned chain


class TestBandpassDesign:
    def test_taps_are_odd_and_symmetric(self):
        for fs in (200, 360, 500):
            taps = bandpass_taps(fs, 5.0, 15.0)
            assert len(taps) % 2 == 1
            assert all(math.isclose(a, b, rel_tol=1e-12)
                       for a, b in zip(taps, reversed(taps)))

    def test_unit_gain_at_band_center(self):
        fs = 360
        taps = bandpass_taps(fs, 5.0, 15.0)
        mid = (len(taps) - 1) // 2
        fc = 0.5 * (5.0 + 15.0) / fs
        re = sum(t * math.cos(2 * math.pi * fc * (i - mid)) for i, t in enumerate(taps))
        im = sum(t * math.sin(2 * math.pi * fc * (i - mid)) for i, t in enumerate(taps))
        assert math.isclose(math.hypot(re, im), 1.0, rel_tol=1e-9)

    def test_dc_is_attenuated(self):
        # exact DC rejection comes from the derivative stage; the bandpass
        # only needs to keep the skirt low relative to its unit passband
        taps = bandpass_taps(360, 5.0, 15.0)
        assert abs(sum(taps)) < 0.05


class TestHeartRateFormulas:
    def test_forced_three_peaks(self):
        series = hr_series_from_peaks([100, 200, 300], fs=100)
        assert series.iHR == (60.0, 60.0)
        assert series.tHR == (1.5, 2.5)

    def test_forced_single_peak(self):
        series = hr_series_from_peaks([150], fs=100)
        assert series.iHR == (30.0,)
        assert series.tHR == ()

    def test_no_peaks(self):
        series = hr_series_from_peaks([], fs=100)
        assert series.iHR == (30.0,)
        assert series.tHR == ()

    def test_exact_second_spacing_gives_exactly_sixty(self):
        for fs in (200, 360, 500):
            series = hr_series_from_peaks(list(range(0, 10 * fs, fs)), fs)
            assert all(v == 60.0 for v in series.iHR)

    def test_rate_times_interval_recovers_constant(self):
        # exact in real arithmetic; one rounding of slack in floats
        for fs in (200, 360, 500):
            sig, _ = synth_ecg([(0.0, 20.0, 73)], fs=fs)
            series = ekg_peak_det(sig)
            rr = [b - a for a, b in zip(series.peaks, series.peaks[1:])]
            budget = math.ulp(60.0 * fs)
            for v, d in zip(series.iHR, rr):
                assert abs(v * d - 60.0 * fs) <= budget

    def test_timestamps_strictly_increase(self):
        for fx in fixtures.FIXTURES:
            sig, _ = fixtures.generate(fx)
            series = ekg_peak_det(sig)
            assert all(b > a for a, b in zip(series.tHR, series.tHR[1:]))
            assert all(v > 0 for v in series.iHR)
            if len(series.peaks) >= 2:
                assert len(series.iHR) == len(series.tHR) == len(series.peaks) - 1

    def test_index_base_duality(self):
        peaks0 = [100, 200, 300, 457]
        fs = 360
        zero_based = hr_series_from_peaks(peaks0, fs)
        one_based = hr_series_from_peaks([p + 1 for p in peaks0], fs)
        assert zero_based.iHR == one_based.iHR
        shift = 1.0 / fs
        for a, b in zip(zero_based.tHR, one_based.tHR):
            assert math.isclose(b - a, shift, rel_tol=1e-9)

    def test_series_uses_detector_output(self):
        sig, planted = synth_ecg([(0.0, 20.0, 60)], fs=360)
        series = ekg_peak_det(sig)
        det = pan_tompkin(sig)
        assert series.peaks == det.peak_indices
