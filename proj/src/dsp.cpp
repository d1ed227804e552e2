#include "emap/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace emap::dsp {

namespace {

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

void require_window(std::span<const double> s, const char* what) {
    if (s.size() != kWindowLen)
        throw std::invalid_argument(fmt::format("{}: expected {} samples, got {}", what, kWindowLen, s.size()));
}

double energy(std::span<const double> s) {
    double e = 0.0;
    for (double v : s) e += v * v;
    return e;
}

}  // namespace

FirFilter::FirFilter(std::vector<double> taps) : taps_(std::move(taps)) {
    if (taps_.size() != kNumTaps)
        throw std::invalid_argument(fmt::format("FIR filter needs {} taps, got {}", kNumTaps, taps_.size()));
    if (!std::all_of(taps_.begin(), taps_.end(), [](double t) { return std::isfinite(t); }))
        throw std::invalid_argument("FIR filter taps must be finite");
}

bool FirFilter::is_linear_phase(double tol) const {
    const std::size_t n = taps_.size();
    for (std::size_t i = 0; i < n / 2; ++i)
        if (std::abs(taps_[i] - taps_[n - 1 - i]) > tol) return false;
    return true;
}

SignalWindow::SignalWindow(std::span<const double> samples, std::size_t timestep_index)
    : timestep_index_(timestep_index) {
    require_window(samples, "SignalWindow");
    for (std::size_t i = 0; i < kWindowLen; ++i) {
        if (!std::isfinite(samples[i]))
            throw std::invalid_argument(fmt::format("SignalWindow: sample {} is not finite", i));
        samples_[i] = samples[i];
    }
}

FirFilter design_bandpass(double low_hz, double high_hz, int sample_rate_hz, int num_taps) {
    if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be positive");
    const double nyquist = sample_rate_hz / 2.0;
    if (!(low_hz > 0.0)) throw std::invalid_argument(fmt::format("low band edge {} Hz must be positive", low_hz));
    if (!(low_hz < high_hz))
        throw std::invalid_argument(fmt::format("band edges inverted: low {} Hz >= high {} Hz", low_hz, high_hz));
    if (!(high_hz < nyquist))
        throw std::invalid_argument(fmt::format("high band edge {} Hz at or above Nyquist {} Hz", high_hz, nyquist));
    if (num_taps != static_cast<int>(kNumTaps))
        throw std::invalid_argument(fmt::format("num_taps must be {}", kNumTaps));

    const double fl = low_hz / sample_rate_hz;
    const double fh = high_hz / sample_rate_hz;
    const double centre = (num_taps - 1) / 2.0;
    std::vector<double> taps(static_cast<std::size_t>(num_taps));
    for (int n = 0; n < num_taps; ++n) {
        const double m = n - centre;
        const double ideal = 2.0 * fh * sinc(2.0 * fh * m) - 2.0 * fl * sinc(2.0 * fl * m);
        const double hamming = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (num_taps - 1));
        taps[static_cast<std::size_t>(n)] = ideal * hamming;
    }

    // normalize the magnitude response at the band centre to 1
    const double w0 = 2.0 * std::numbers::pi * ((low_hz + high_hz) / 2.0) / sample_rate_hz;
    double re = 0.0, im = 0.0;
    for (int n = 0; n < num_taps; ++n) {
        re += taps[static_cast<std::size_t>(n)] * std::cos(w0 * n);
        im -= taps[static_cast<std::size_t>(n)] * std::sin(w0 * n);
    }
    const double gain = std::hypot(re, im);
    for (double& t : taps) t /= gain;
    // exact mirror so the symmetry survives rounding
    for (int n = 0; n < num_taps / 2; ++n)
        taps[static_cast<std::size_t>(num_taps - 1 - n)] = taps[static_cast<std::size_t>(n)];
    return FirFilter(std::move(taps));
}

const FirFilter& emap_bandpass() {
    static const FirFilter filter = design_bandpass(kBandLowHz, kBandHighHz, kBaseRateHz);
    return filter;
}

std::vector<double> apply_filter(const FirFilter& filter, std::span<const double> samples) {
    const auto taps = filter.taps();
    std::vector<double> out(samples.size(), 0.0);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const std::size_t n = std::min(taps.size(), k + 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += taps[i] * samples[k - i];
        out[k] = acc;
    }
    return out;
}

RawSignal apply_filter(const FirFilter& filter, const RawSignal& signal) {
    if (signal.samples.empty()) throw std::invalid_argument("apply_filter: empty signal");
    return {apply_filter(filter, std::span<const double>(signal.samples)), signal.sample_rate_hz};
}

RawSignal resample(const RawSignal& signal, int target_hz) {
    if (target_hz <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (signal.sample_rate_hz <= 0) throw std::invalid_argument("resample: source rate must be positive");
    if (signal.samples.empty()) throw std::invalid_argument("resample: empty signal");
    if (target_hz == signal.sample_rate_hz) return signal;

    const auto src = static_cast<long long>(signal.sample_rate_hz);
    const auto dst = static_cast<long long>(target_hz);
    const auto n = static_cast<long long>(signal.samples.size());
    const long long m = std::max(1LL, (n * dst + src / 2) / src);

    RawSignal out{std::vector<double>(static_cast<std::size_t>(m)), target_hz};
    for (long long j = 0; j < m; ++j) {
        // source position j * src / dst, split exactly into index and fraction
        const long long num = j * src;
        const long long idx = num / dst;
        const double frac = static_cast<double>(num % dst) / static_cast<double>(dst);
        double v;
        if (idx >= n - 1) {
            v = signal.samples.back();
        } else {
            const double a = signal.samples[static_cast<std::size_t>(idx)];
            const double b = signal.samples[static_cast<std::size_t>(idx + 1)];
            v = frac == 0.0 ? a : a + (b - a) * frac;
        }
        out.samples[static_cast<std::size_t>(j)] = v;
    }
    return out;
}

WindowCorrelator::WindowCorrelator(std::span<const double> reference) {
    require_window(reference, "xcorr");
    std::copy(reference.begin(), reference.end(), reference_.begin());
    const double e = energy(reference_);
    if (!(e > 0.0)) throw DegenerateSignalError("xcorr: reference window has zero energy");
    reference_norm_ = std::sqrt(e);
}

std::optional<double> WindowCorrelator::try_correlate(std::span<const double> segment) const {
    require_window(segment, "xcorr");
    double dot = 0.0;
    double e = 0.0;
    for (std::size_t n = 0; n < kWindowLen; ++n) {
        dot += reference_[n] * segment[n];
        e += segment[n] * segment[n];
    }
    if (!(e > 0.0)) return std::nullopt;
    const double omega = dot / (reference_norm_ * std::sqrt(e));
    return std::clamp(omega, -1.0, 1.0);
}

double WindowCorrelator::operator()(std::span<const double> segment) const {
    if (auto omega = try_correlate(segment)) return *omega;
    throw DegenerateSignalError("xcorr: segment has zero energy");
}

double xcorr(std::span<const double> a, std::span<const double> b) {
    return WindowCorrelator(a)(b);
}

double area_between(std::span<const double> a, std::span<const double> b) {
    require_window(a, "area_between");
    require_window(b, "area_between");
    double area = 0.0;
    for (std::size_t i = 0; i < kWindowLen; ++i) area += std::abs(a[i] - b[i]);
    return area;
}

double rms(std::span<const double> samples) {
    if (samples.empty()) return 0.0;
    return std::sqrt(energy(samples) / static_cast<double>(samples.size()));
}

double tone_gain(const FirFilter& filter, double freq_hz, int sample_rate_hz, double duration_s,
                 std::size_t warmup) {
    const auto n = static_cast<std::size_t>(duration_s * sample_rate_hz);
    if (n <= warmup) throw std::invalid_argument("tone_gain: tone shorter than warm-up");
    std::vector<double> tone(n);
    for (std::size_t k = 0; k < n; ++k)
        tone[k] = std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(k) / sample_rate_hz);
    const auto out = apply_filter(filter, std::span<const double>(tone));
    const std::span<const double> in_tail(tone.begin() + static_cast<std::ptrdiff_t>(warmup), tone.end());
    const std::span<const double> out_tail(out.begin() + static_cast<std::ptrdiff_t>(warmup), out.end());
    return rms(out_tail) / rms(in_tail);
}

}  // namespace emap::dsp
