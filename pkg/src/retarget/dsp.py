"""Native QRS detection and heart-rate computation, plus a synthetic ECG
generator used as the validation oracle.

The detector is the classic real-time pipeline: five-point derivative,
bandpass filtering, squaring, moving-window integration, then dual adaptive
thresholds (running signal/noise estimates) with search-back, a 200 ms
refractory period, and a 360 ms T-wave slope test. Two deliberate
implementation choices:

* The derivative runs first (the stages are linear, so the order is
  equivalent); exact cancellation in the differences maps any constant
  input to an exactly-zero integrated waveform.
* Every filter is a linear-phase FIR applied with a centered window, so the
  chain has no net group delay and reported `delay` is 0. The bandpass taps
  are designed at run time for the configured cutoffs with explicit,
  portable arithmetic (windowed sinc, Hamming window, unit gain at the band
  center) rather than a library call, so a twin implementation in another
  language can reproduce them bit for bit.

Peak indices are 0-based throughout this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mathcore as mc
from .errors import RetargetError


class SignalTooShort(RetargetError):
    pass


class InvalidConfig(RetargetError):
    pass


class InvalidSchedule(RetargetError):
    pass


@dataclass(frozen=True)
class EcgSignal:
    samples: tuple
    fs: int

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(float(x) for x in self.samples))
        if self.fs < 60:
            raise InvalidConfig(f"sampling rate must be at least 60 Hz, got {self.fs}")
        if len(self.samples) < 1:
            raise InvalidConfig("signal must contain at least one sample")


@dataclass(frozen=True)
class QrsDetection:
    peak_indices: tuple  # strictly ascending, 0-based
    peak_amplitudes: tuple  # filtered-waveform amplitude per peak
    delay: int  # net group delay of the filter chain, in samples


@dataclass(frozen=True)
class HeartRateSeries:
    iHR: tuple  # beats per minute
    tHR: tuple  # seconds, midpoints between consecutive peaks
    peaks: tuple  # 0-based sample indices


@dataclass(frozen=True)
class PtConfig:
    band_low_hz: float = 5.0
    band_high_hz: float = 15.0
    integration_window_s: float = 0.150
    refractory_s: float = 0.200
    twave_window_s: float = 0.360
    slope_window_s: float = 0.075
    level_weight: float = 0.125  # running level update: w*peak + (1-w)*level
    searchback_weight: float = 0.25
    threshold_fraction: float = 0.25  # THR = noise + fraction*(signal - noise)
    searchback_factor: float = 1.66
    learning_s: float = 2.0

    def validate(self, fs: int):
        if not (0.0 < self.band_low_hz < self.band_high_hz < fs / 2.0):
            raise InvalidConfig(
                f"bandpass {self.band_low_hz}-{self.band_high_hz} Hz invalid for fs={fs}")
        for name in ("integration_window_s", "refractory_s", "twave_window_s",
                     "slope_window_s", "learning_s"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")


def _sinc(x: float) -> float:
    if x == 0.0:
        return 1.0
    return math.sin(math.pi * x) / (math.pi * x)


def bandpass_taps(fs: int, low_hz: float, high_hz: float) -> list:
    """Odd-length linear-phase FIR bandpass: windowed sinc under a Hamming
    window, normalized to unit gain at the band center. Sequential scalar
    arithmetic only, so other implementations can match it exactly."""
    order = int(round(0.30 * fs))
    if order % 2 == 1:
        order += 1
    order = max(order, 8)
    mid = order // 2
    f1 = 2.0 * low_hz / fs
    f2 = 2.0 * high_hz / fs
    taps = []
    for i in range(order + 1):
        k = i - mid
        h = f2 * _sinc(f2 * k) - f1 * _sinc(f1 * k)
        w = 0.54 - 0.46 * math.cos(2.0 * math.pi * i / order)
        taps.append(h * w)
    fc = 0.5 * (low_hz + high_hz) / fs
    re = 0.0
    im = 0.0
    for i in range(order + 1):
        ang = 2.0 * math.pi * fc * (i - mid)
        re += taps[i] * math.cos(ang)
        im -= taps[i] * math.sin(ang)
    gain = math.hypot(re, im)
    return [t / gain for t in taps]


def _five_point_derivative(x: np.ndarray) -> np.ndarray:
    """(2*(x[i+1]-x[i-1]) + (x[i+2]-x[i-2])) / 8 with clamped edges; the
    differences cancel exactly on constant input."""
    n = len(x)
    idx = np.arange(n)
    xp1 = x[np.minimum(idx + 1, n - 1)]
    xp2 = x[np.minimum(idx + 2, n - 1)]
    xm1 = x[np.maximum(idx - 1, 0)]
    xm2 = x[np.maximum(idx - 2, 0)]
    return (2.0 * (xp1 - xm1) + (xp2 - xm2)) / 8.0


def _convolve_same(x: np.ndarray, taps) -> np.ndarray:
    return np.convolve(x, np.asarray(taps, dtype=np.float64), mode="same")


def _local_maxima(m: np.ndarray, min_dist: int) -> list:
    """Strict local maxima thinned so survivors are at least min_dist apart,
    preferring taller peaks (ties: the earlier one)."""
    if len(m) < 3:
        return []
    cand = np.flatnonzero((m[1:-1] > m[:-2]) & (m[1:-1] > m[2:])) + 1
    if len(cand) == 0:
        return []
    order = sorted(cand, key=lambda i: (-m[i], i))
    kept: list = []
    for i in order:
        if all(abs(i - j) >= min_dist for j in kept):
            kept.append(i)
    kept.sort()
    return kept


class _Levels:
    """One adaptive signal/noise level pair and its derived thresholds."""

    def __init__(self, seg: np.ndarray, cfg: PtConfig):
        self.signal = float(np.max(seg)) / 3.0
        self.noise = float(np.mean(seg)) / 2.0
        self.cfg = cfg
        self._refresh()

    def _refresh(self):
        frac = self.cfg.threshold_fraction
        self.thr_signal = self.noise + frac * (self.signal - self.noise)
        self.thr_noise = 0.5 * self.thr_signal

    def beat(self, peak: float, weight: float | None = None):
        w = self.cfg.level_weight if weight is None else weight
        self.signal = w * peak + (1.0 - w) * self.signal
        self._refresh()

    def nonbeat(self, peak: float):
        w = self.cfg.level_weight
        self.noise = w * peak + (1.0 - w) * self.noise
        self._refresh()


def pan_tompkin(sig: EcgSignal, cfg: PtConfig | None = None) -> QrsDetection:
    """Detect R peaks; returns 0-based indices into the original signal."""
    cfg = cfg or PtConfig()
    cfg.validate(sig.fs)
    fs = sig.fs
    x = np.asarray(sig.samples, dtype=np.float64)
    n = len(x)
    learn = int(round(cfg.learning_s * fs))
    if n < learn:
        raise SignalTooShort(
            f"need at least {cfg.learning_s:g} s of signal ({learn} samples), got {n}")

    taps = bandpass_taps(fs, cfg.band_low_hz, cfg.band_high_hz)
    deriv = _five_point_derivative(x)
    energy = _convolve_same(deriv, taps)
    squared = energy * energy
    win = max(int(round(cfg.integration_window_s * fs)), 1)
    integrated = _convolve_same(squared, [1.0 / win] * win)
    filtered = _convolve_same(x, taps)  # for localization and amplitudes

    refractory = max(int(round(cfg.refractory_s * fs)), 1)
    twave = int(round(cfg.twave_window_s * fs))
    slope_w = max(int(round(cfg.slope_window_s * fs)), 2)
    candidates = _local_maxima(integrated, refractory)

    lv_int = _Levels(integrated[:learn], cfg)
    lv_flt = _Levels(filtered[:learn], cfg)

    fiducials: list = []  # accepted beat locations in the integrated waveform
    rr_hist: list = []
    peaks: list = []
    amps: list = []

    def refine(loc: int):
        lo = max(loc - win, 0)
        hi = min(loc + win + 1, n)
        seg = filtered[lo:hi]
        off = int(np.argmax(seg))
        return lo + off, float(seg[off])

    def mean_slope(loc: int) -> float:
        lo = max(loc - slope_w, 0)
        seg = integrated[lo : loc + 1]
        if len(seg) < 2:
            return 0.0
        return float(np.mean(np.diff(seg)))

    def accept(loc: int, weight: float | None = None):
        pk = float(integrated[loc])
        if fiducials:
            rr_hist.append(loc - fiducials[-1])
        fiducials.append(loc)
        lv_int.beat(pk, weight)
        ri, y = refine(loc)
        if y >= lv_flt.thr_signal or weight is not None:
            peaks.append(ri)
            amps.append(y)
            lv_flt.beat(y, weight)

    for loc in candidates:
        pk = float(integrated[loc])
        ri, y = refine(loc)

        # search-back: a long silent gap is rescanned at the lower threshold
        if fiducials and rr_hist:
            rr_avg = sum(rr_hist[-8:]) / len(rr_hist[-8:])
            if loc - fiducials[-1] > cfg.searchback_factor * rr_avg:
                lo = fiducials[-1] + refractory
                hi = loc - refractory
                if hi > lo:
                    seg = integrated[lo:hi]
                    cand = lo + int(np.argmax(seg))
                    if float(integrated[cand]) > lv_int.thr_noise:
                        accept(cand, weight=cfg.searchback_weight)

        if fiducials:
            gap = loc - fiducials[-1]
            if gap < refractory:
                continue
            if gap < twave:
                if abs(mean_slope(loc)) <= 0.5 * abs(mean_slope(fiducials[-1])):
                    lv_int.nonbeat(pk)
                    lv_flt.nonbeat(y)
                    continue

        if pk >= lv_int.thr_signal:
            accept(loc)
        else:
            lv_int.nonbeat(pk)
            lv_flt.nonbeat(y)

    # enforce order and the refractory invariant on the refined indices
    final_peaks: list = []
    final_amps: list = []
    for p, a in zip(peaks, amps):
        if final_peaks and p - final_peaks[-1] < refractory:
            continue
        if final_peaks and p <= final_peaks[-1]:
            continue
        final_peaks.append(int(p))
        final_amps.append(a)
    return QrsDetection(tuple(final_peaks), tuple(final_amps), 0)


def hr_series_from_peaks(peaks, fs: int) -> HeartRateSeries:
    """Instantaneous heart rate and timestamps from 0-based peak indices.

    With more than one peak the sample distances drive the rate; with one
    (or none) the literal fallback distance of 200 samples applies, so the
    single rate value depends on fs. Timestamps are midpoints between
    consecutive peaks and are empty until there are two peaks.
    """
    peaks = tuple(int(p) for p in peaks)
    pv = mc.ivec(peaks)
    if len(peaks) > 1:
        rr = mc.diff(pv)
    else:
        rr = mc.rvec([200.0])
    ihr = mc.ew("*", mc.ew("/", mc.rscalar(60.0), rr), mc.iscalar(fs))
    head = mc.slice(pv, mc.span(0, len(peaks) - 2))
    thr = mc.ew("/", mc.ew("+", head, mc.ew("/", rr, mc.rscalar(2.0))), mc.iscalar(fs))
    return HeartRateSeries(tuple(ihr.data), tuple(thr.data), peaks)


def ekg_peak_det(sig: EcgSignal, cfg: PtConfig | None = None) -> HeartRateSeries:
    """Detect peaks and derive the heart-rate series natively."""
    det = pan_tompkin(sig, cfg)
    return hr_series_from_peaks(det.peak_indices, sig.fs)


# ---------------------------------------------------------------------------
# Synthetic ECG


_QRS_SIGMA_S = 0.013
_T_AMPLITUDE = 0.15
_T_SIGMA_S = 0.060
_T_OFFSET_S = 0.300
_T_MIN_GAP_S = 0.42


def _add_ricker(x: np.ndarray, center: int, sigma: float, amp: float):
    half = int(4 * sigma)
    lo = max(center - half, 0)
    hi = min(center + half + 1, len(x))
    k = np.arange(lo, hi) - center
    u = k / sigma
    x[lo:hi] += amp * (1.0 - u * u) * np.exp(-0.5 * u * u)


def _add_gaussian(x: np.ndarray, center: int, sigma: float, amp: float):
    half = int(4 * sigma)
    lo = max(center - half, 0)
    hi = min(center + half + 1, len(x))
    k = np.arange(lo, hi) - center
    u = k / sigma
    x[lo:hi] += amp * np.exp(-0.5 * u * u)


def synth_ecg(schedule, fs: int, noise_amplitude: float = 0.0,
              seed: int = 0) -> tuple:
    """Build a synthetic ECG from (start_s, end_s, bpm) spans.

    Beats are planted on the schedule (first beat half a period into the
    first span), each as a sharp Ricker wavelet with a low, wide T bump
    after it when the next beat is far enough away. Returns the signal and
    the ground-truth planted peak indices; noise never moves the truth.
    """
    spans = [(float(a), float(b), float(bpm)) for a, b, bpm in schedule]
    if not spans:
        raise InvalidSchedule("empty schedule")
    for a, b, bpm in spans:
        if b <= a:
            raise InvalidSchedule(f"span {a}-{b} is not increasing")
        if not (30.0 <= bpm <= 220.0):
            raise InvalidSchedule(f"bpm {bpm} outside [30, 220]")
    for (_, b1, _), (a2, _, _) in zip(spans, spans[1:]):
        if b1 != a2:
            raise InvalidSchedule(f"spans are not contiguous at {b1} vs {a2}")

    t_end = spans[-1][1]
    n = int(round(t_end * fs))

    def rate_at(t: float) -> float:
        for a, b, bpm in spans:
            if a <= t < b:
                return bpm
        return spans[-1][2]

    beats: list = []
    t = spans[0][0] + 0.5 * (60.0 / spans[0][2])
    while t < t_end:
        idx = int(round(t * fs))
        if idx >= n:
            break
        if not beats or idx > beats[-1]:
            beats.append(idx)
        t += 60.0 / rate_at(t)

    x = np.zeros(n, dtype=np.float64)
    qrs_sigma = _QRS_SIGMA_S * fs
    t_sigma = _T_SIGMA_S * fs
    for k, b in enumerate(beats):
        _add_ricker(x, b, qrs_sigma, 1.0)
        nxt = beats[k + 1] if k + 1 < len(beats) else n + int(fs)
        if nxt - b > _T_MIN_GAP_S * fs:
            _add_gaussian(x, b + int(round(_T_OFFSET_S * fs)), t_sigma, _T_AMPLITUDE)
    if noise_amplitude:
        rng = np.random.default_rng(seed)
        x = x + noise_amplitude * rng.standard_normal(n)
    return EcgSignal(tuple(x), fs), tuple(beats)
