#pragma once

// Signal primitives shared by the cloud and edge tiers: bandpass design and
// application, linear resampling, normalized cross-correlation and the
// area-between-curves distance.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace emap::dsp {

inline constexpr int kBaseRateHz = 256;
inline constexpr std::size_t kWindowLen = 256;
inline constexpr std::size_t kNumTaps = 100;
inline constexpr double kBandLowHz = 11.0;
inline constexpr double kBandHighHz = 40.0;

/// Thrown when a correlation operand has zero energy.
class DegenerateSignalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RawSignal {
    std::vector<double> samples;
    int sample_rate_hz = kBaseRateHz;

    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

class FirFilter {
public:
    /// Requires exactly kNumTaps finite coefficients.
    explicit FirFilter(std::vector<double> taps);

    std::span<const double> taps() const { return taps_; }
    bool is_linear_phase(double tol = 1e-12) const;

private:
    std::vector<double> taps_;
};

/// One second of filtered signal at the base rate.
class SignalWindow {
public:
    SignalWindow() = default;
    /// Requires exactly kWindowLen finite samples.
    explicit SignalWindow(std::span<const double> samples, std::size_t timestep_index = 0);

    std::span<const double, kWindowLen> samples() const { return samples_; }
    std::size_t timestep_index() const { return timestep_index_; }

    bool operator==(const SignalWindow&) const = default;

private:
    std::array<double, kWindowLen> samples_{};
    std::size_t timestep_index_ = 0;
};

/// Hamming-windowed sinc bandpass, unity gain at band centre.
FirFilter design_bandpass(double low_hz, double high_hz, int sample_rate_hz,
                          int num_taps = static_cast<int>(kNumTaps));

/// The default acquisition filter (11-40 Hz at 256 Hz).
const FirFilter& emap_bandpass();

/// Causal direct-form convolution; samples before the start are taken as zero.
RawSignal apply_filter(const FirFilter& filter, const RawSignal& signal);
std::vector<double> apply_filter(const FirFilter& filter, std::span<const double> samples);

/// Linear-interpolation resampling to target_hz.
RawSignal resample(const RawSignal& signal, int target_hz);

/// Caches the norm of one operand so repeated correlations against many
/// segments cost one dot product and one energy sum each.
class WindowCorrelator {
public:
    /// Throws DegenerateSignalError if the reference has zero energy.
    explicit WindowCorrelator(std::span<const double> reference);

    /// nullopt when the segment has zero energy.
    std::optional<double> try_correlate(std::span<const double> segment) const;
    /// Throws DegenerateSignalError when the segment has zero energy.
    double operator()(std::span<const double> segment) const;

private:
    std::array<double, kWindowLen> reference_{};
    double reference_norm_ = 0.0;
};

/// Cosine-normalized cross-correlation of two 256-sample windows, in [-1, 1].
double xcorr(std::span<const double> a, std::span<const double> b);
inline double xcorr(const SignalWindow& a, std::span<const double> b) { return xcorr(a.samples(), b); }

/// Sum of absolute sample differences of two 256-sample windows.
double area_between(std::span<const double> a, std::span<const double> b);
inline double area_between(const SignalWindow& a, std::span<const double> b) {
    return area_between(a.samples(), b);
}

// Elementary-operation cost model per 256-sample window. One op is one
// add, subtract, multiply or abs; sqrt and divide count as one each.
struct OpCount {
    std::size_t arithmetic = 0;
    std::size_t sqrt = 0;
    std::size_t divide = 0;
    constexpr std::size_t total() const { return arithmetic + sqrt + divide; }
};
inline constexpr OpCount area_op_count() { return {3 * kWindowLen, 0, 0}; }
// dot product plus two energy sums, each a multiply and an add per sample
inline constexpr OpCount xcorr_op_count() { return {3 * 2 * kWindowLen, 2, 1}; }

/// Steady-state RMS gain of the filter for a unit sine at freq_hz, measured on
/// a duration_s tone after dropping the first warmup samples.
double tone_gain(const FirFilter& filter, double freq_hz, int sample_rate_hz = kBaseRateHz,
                 double duration_s = 4.0, std::size_t warmup = kNumTaps);

double rms(std::span<const double> samples);

}  // namespace emap::dsp
