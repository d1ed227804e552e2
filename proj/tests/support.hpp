#pragma once

#include "emap/dsp.hpp"
#include "emap/mdb.hpp"

#include <cmath>
#include <numbers>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::vector<double> random_samples(std::uint64_t seed, std::size_t n, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

inline std::vector<double> tone(double hz, std::size_t n, double amp = 1.0, double phase = 0.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 256.0 + phase);
    return v;
}

// values exactly representable in float32, so the store keeps them unchanged
inline std::vector<double> as_float(std::vector<double> v) {
    for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
    return v;
}

inline emap::mdb::SourceSignal signal(emap::mdb::SignalId id, std::vector<double> samples,
                                      std::vector<emap::mdb::AnomalySpan> spans = {}, std::string tag = "test") {
    emap::mdb::SourceSignal s;
    s.id = id;
    s.samples = std::move(samples);
    s.anomaly_spans = std::move(spans);
    s.dataset_tag = std::move(tag);
    return s;
}

inline emap::dsp::SignalWindow window(std::span<const double> samples, std::size_t offset = 0) {
    return emap::dsp::SignalWindow(samples.subspan(offset, emap::dsp::kWindowLen));
}

class TempDir {
public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() /
                (name + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
