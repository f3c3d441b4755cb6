// Precompiled QRS detector for emitted units: the same pipeline as the
// toolkit's native engine (five-point derivative first, then a run-time
// designed linear-phase FIR bandpass, squaring, centered moving-window
// integration, dual adaptive thresholds with search-back, refractory and
// T-wave rejection), ported operation for operation so detected peak
// indices agree with the reference.
#include "m2cpp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace {

constexpr double kBandLowHz = 5.0;
constexpr double kBandHighHz = 15.0;
constexpr double kIntegrationWindowS = 0.150;
constexpr double kRefractoryS = 0.200;
constexpr double kTwaveWindowS = 0.360;
constexpr double kSlopeWindowS = 0.075;
constexpr double kLevelWeight = 0.125;
constexpr double kSearchbackWeight = 0.25;
constexpr double kThresholdFraction = 0.25;
constexpr double kSearchbackFactor = 1.66;
constexpr double kLearningS = 2.0;
constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

std::vector<double> bandpass_taps(int fs, double lo, double hi) {
    int order = static_cast<int>(std::llround(0.30 * fs));
    if (order % 2 == 1) order += 1;
    if (order < 8) order = 8;
    const int mid = order / 2;
    const double f1 = 2.0 * lo / fs;
    const double f2 = 2.0 * hi / fs;
    std::vector<double> taps(order + 1);
    for (int i = 0; i <= order; ++i) {
        const int k = i - mid;
        const double h = f2 * sinc(f2 * k) - f1 * sinc(f1 * k);
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * i / order);
        taps[i] = h * w;
    }
    const double fc = 0.5 * (lo + hi) / fs;
    double re = 0.0;
    double im = 0.0;
    for (int i = 0; i <= order; ++i) {
        const double ang = 2.0 * kPi * fc * (i - mid);
        re += taps[i] * std::cos(ang);
        im -= taps[i] * std::sin(ang);
    }
    const double gain = std::hypot(re, im);
    for (double& t : taps) t /= gain;
    return taps;
}

std::vector<double> five_point_derivative(const std::vector<double>& x) {
    const long long n = static_cast<long long>(x.size());
    std::vector<double> y(x.size());
    auto at = [&](long long i) {
        if (i < 0) i = 0;
        if (i >= n) i = n - 1;
        return x[static_cast<std::size_t>(i)];
    };
    for (long long i = 0; i < n; ++i) {
        y[i] = (2.0 * (at(i + 1) - at(i - 1)) + (at(i + 2) - at(i - 2))) / 8.0;
    }
    return y;
}

std::vector<double> convolve_same(const std::vector<double>& x,
                                  const std::vector<double>& taps) {
    const std::size_t n = x.size();
    const std::size_t m = taps.size();
    const std::size_t off = (m - 1) / 2;
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kk = k + off;
        const std::size_t jlo = kk >= n - 1 ? kk - (n - 1) : 0;
        const std::size_t jhi = std::min(kk, m - 1);
        double acc = 0.0;
        for (std::size_t j = jlo; j <= jhi; ++j) {
            acc += taps[j] * x[kk - j];
        }
        out[k] = acc;
    }
    return out;
}

std::vector<long long> local_maxima(const std::vector<double>& m, long long min_dist) {
    std::vector<long long> cand;
    for (std::size_t i = 1; i + 1 < m.size(); ++i) {
        if (m[i] > m[i - 1] && m[i] > m[i + 1]) cand.push_back(static_cast<long long>(i));
    }
    std::stable_sort(cand.begin(), cand.end(), [&](long long a, long long b) {
        if (m[a] != m[b]) return m[a] > m[b];
        return a < b;
    });
    std::vector<long long> kept;
    for (long long i : cand) {
        bool ok = true;
        for (long long j : kept) {
            if (std::llabs(i - j) < min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

struct Levels {
    double signal = 0.0;
    double noise = 0.0;
    double thr_signal = 0.0;
    double thr_noise = 0.0;

    void init(const std::vector<double>& wave, std::size_t learn) {
        double mx = wave[0];
        double total = 0.0;
        for (std::size_t i = 0; i < learn; ++i) {
            if (wave[i] > mx) mx = wave[i];
            total += wave[i];
        }
        signal = mx / 3.0;
        noise = (total / static_cast<double>(learn)) / 2.0;
        refresh();
    }

    void refresh() {
        thr_signal = noise + kThresholdFraction * (signal - noise);
        thr_noise = 0.5 * thr_signal;
    }

    void beat(double peak, double weight) {
        signal = weight * peak + (1.0 - weight) * signal;
        refresh();
    }

    void nonbeat(double peak) {
        noise = kLevelWeight * peak + (1.0 - kLevelWeight) * noise;
        refresh();
    }
};

}  // namespace

void pan_tompkin(mat& sig, int fs, mat& qrs_amp_raw, vec& qrs_i_raw, int& delay) {
    const std::vector<double>& x = sig.data;
    const long long n = static_cast<long long>(x.size());
    const std::size_t learn = static_cast<std::size_t>(std::llround(kLearningS * fs));
    if (x.size() < learn) {
        std::fprintf(stderr, "pan_tompkin: signal shorter than the learning window\n");
        std::abort();
    }

    const std::vector<double> taps = bandpass_taps(fs, kBandLowHz, kBandHighHz);
    const std::vector<double> deriv = five_point_derivative(x);
    const std::vector<double> energy = convolve_same(deriv, taps);
    std::vector<double> squared(energy.size());
    for (std::size_t i = 0; i < energy.size(); ++i) squared[i] = energy[i] * energy[i];
    long long win = std::llround(kIntegrationWindowS * fs);
    if (win < 1) win = 1;
    const std::vector<double> integrated =
        convolve_same(squared, std::vector<double>(win, 1.0 / static_cast<double>(win)));
    const std::vector<double> filtered = convolve_same(x, taps);

    long long refractory = std::llround(kRefractoryS * fs);
    if (refractory < 1) refractory = 1;
    const long long twave = std::llround(kTwaveWindowS * fs);
    long long slope_w = std::llround(kSlopeWindowS * fs);
    if (slope_w < 2) slope_w = 2;

    const std::vector<long long> candidates = local_maxima(integrated, refractory);

    Levels lv_int;
    lv_int.init(integrated, learn);
    Levels lv_flt;
    lv_flt.init(filtered, learn);

    std::vector<long long> fiducials;
    std::vector<long long> rr_hist;
    std::vector<long long> peaks;
    std::vector<double> amps;

    auto refine = [&](long long loc, long long* out_idx, double* out_amp) {
        long long lo = loc - win;
        if (lo < 0) lo = 0;
        long long hi = loc + win + 1;
        if (hi > n) hi = n;
        long long best = lo;
        double best_val = filtered[static_cast<std::size_t>(lo)];
        for (long long i = lo + 1; i < hi; ++i) {
            const double v = filtered[static_cast<std::size_t>(i)];
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        *out_idx = best;
        *out_amp = best_val;
    };

    auto mean_slope = [&](long long loc) {
        long long lo = loc - slope_w;
        if (lo < 0) lo = 0;
        const long long len = loc + 1 - lo;
        if (len < 2) return 0.0;
        double total = 0.0;
        for (long long i = lo; i < loc; ++i) {
            total += integrated[static_cast<std::size_t>(i + 1)] -
                     integrated[static_cast<std::size_t>(i)];
        }
        return total / static_cast<double>(len - 1);
    };

    auto accept = [&](long long loc, double weight, bool searchback) {
        const double pk = integrated[static_cast<std::size_t>(loc)];
        if (!fiducials.empty()) rr_hist.push_back(loc - fiducials.back());
        fiducials.push_back(loc);
        lv_int.beat(pk, weight);
        long long ri = 0;
        double y = 0.0;
        refine(loc, &ri, &y);
        if (y >= lv_flt.thr_signal || searchback) {
            peaks.push_back(ri);
            amps.push_back(y);
            lv_flt.beat(y, weight);
        }
    };

    for (long long loc : candidates) {
        const double pk = integrated[static_cast<std::size_t>(loc)];
        long long ri = 0;
        double y = 0.0;
        refine(loc, &ri, &y);

        if (!fiducials.empty() && !rr_hist.empty()) {
            std::size_t take = rr_hist.size() < 8 ? rr_hist.size() : 8;
            double rr_total = 0.0;
            for (std::size_t i = rr_hist.size() - take; i < rr_hist.size(); ++i) {
                rr_total += static_cast<double>(rr_hist[i]);
            }
            const double rr_avg = rr_total / static_cast<double>(take);
            if (static_cast<double>(loc - fiducials.back()) > kSearchbackFactor * rr_avg) {
                const long long lo = fiducials.back() + refractory;
                const long long hi = loc - refractory;
                if (hi > lo) {
                    long long best = lo;
                    double best_val = integrated[static_cast<std::size_t>(lo)];
                    for (long long i = lo + 1; i < hi; ++i) {
                        const double v = integrated[static_cast<std::size_t>(i)];
                        if (v > best_val) {
                            best_val = v;
                            best = i;
                        }
                    }
                    if (best_val > lv_int.thr_noise) {
                        accept(best, kSearchbackWeight, true);
                    }
                }
            }
        }

        if (!fiducials.empty()) {
            const long long gap = loc - fiducials.back();
            if (gap < refractory) continue;
            if (gap < twave) {
                if (std::fabs(mean_slope(loc)) <= 0.5 * std::fabs(mean_slope(fiducials.back()))) {
                    lv_int.nonbeat(pk);
                    lv_flt.nonbeat(y);
                    continue;
                }
            }
        }

        if (pk >= lv_int.thr_signal) {
            accept(loc, kLevelWeight, false);
        } else {
            lv_int.nonbeat(pk);
            lv_flt.nonbeat(y);
        }
    }

    std::vector<double> final_peaks;
    std::vector<double> final_amps;
    long long last = -1;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (last >= 0 && peaks[i] - last < refractory) continue;
        if (last >= 0 && peaks[i] <= last) continue;
        last = peaks[i];
        final_peaks.push_back(static_cast<double>(peaks[i]));
        final_amps.push_back(amps[i]);
    }

    qrs_i_raw.assign(std::move(final_peaks));
    qrs_amp_raw.assign_column(std::move(final_amps));
    delay = 0;
}
