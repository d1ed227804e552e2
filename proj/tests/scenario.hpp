#pragma once

// Hand-built stores where the fate of every tracked candidate is known in
// advance. Each reference recording copies a stretch of the live signal (plus
// a little noise) from some live second onward, follows it for a set number
// of further seconds and then wanders off into unrelated activity.

#include "emap/dsp.hpp"
#include "emap/mdb.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace scenario {

struct Group {
    std::size_t start_window = 0;       // live second placed at sample 0 of the recording
    std::size_t count = 0;
    bool anomalous = false;
    std::optional<std::size_t> follow;  // seconds of agreement after the matched one; nullopt = all of it
};

struct Scenario {
    emap::mdb::SourceSignal live;
    emap::mdb::MdbStore store;
};

inline constexpr double kLiveRms = 5.0;
inline constexpr double kNoiseRms = 1.0;
inline constexpr std::size_t kRecordingLen = 4000;

// band-limited noise at the requested RMS, warm-up dropped
inline std::vector<double> band_noise(std::mt19937_64& rng, std::size_t n, double target_rms) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> white(n + emap::dsp::kNumTaps);
    for (auto& v : white) v = d(rng);
    auto y = emap::dsp::apply_filter(emap::dsp::emap_bandpass(), std::span<const double>(white));
    y.erase(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(emap::dsp::kNumTaps));
    const double r = emap::dsp::rms(y);
    for (auto& v : y) v *= target_rms / r;
    return y;
}

inline Scenario build(std::uint64_t seed, std::size_t live_seconds, const std::vector<Group>& groups,
                      std::size_t distractors = 50) {
    std::mt19937_64 rng(seed);
    const std::size_t W = emap::dsp::kWindowLen;
    std::size_t reach = live_seconds * W;
    for (const auto& g : groups) reach = std::max(reach, g.start_window * W + kRecordingLen);
    const auto truth = band_noise(rng, reach, kLiveRms);

    Scenario sc;
    sc.live.id = 1'000'000;
    sc.live.samples.assign(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(live_seconds * W));
    sc.live.dataset_tag = "scenario-live";

    std::vector<emap::mdb::SourceSignal> refs;
    emap::mdb::SignalId id = 1;
    auto add = [&](std::vector<double> samples, bool anomalous) {
        emap::mdb::SourceSignal s;
        s.id = id++;
        s.samples = std::move(samples);
        if (anomalous) s.anomaly_spans.push_back({0, s.samples.size(), "seizure"});
        s.dataset_tag = "scenario";
        refs.push_back(std::move(s));
    };
    for (const auto& g : groups) {
        for (std::size_t c = 0; c < g.count; ++c) {
            auto x = band_noise(rng, kRecordingLen, kLiveRms);
            const auto noise = band_noise(rng, kRecordingLen, kNoiseRms);
            const std::size_t agree = g.follow ? (1 + *g.follow) * W : kRecordingLen;
            for (std::size_t i = 0; i < std::min(agree, kRecordingLen); ++i)
                x[i] = truth[g.start_window * W + i] + noise[i];
            add(std::move(x), g.anomalous);
        }
    }
    for (std::size_t c = 0; c < distractors; ++c) add(band_noise(rng, kRecordingLen, kLiveRms), c % 2 == 1);
    sc.store = emap::mdb::MdbStore::from_signals(std::move(refs));
    return sc;
}

// 22 anomalous references among the 100 that match the first live second;
// normal ones drop away a few at a time over five seconds.
inline Scenario probability_growth(std::uint64_t seed = 2024) {
    return build(seed, 6,
                 {{0, 22, true, std::nullopt},
                  {0, 18, false, 0},
                  {0, 15, false, 1},
                  {0, 13, false, 2},
                  {0, 10, false, 3},
                  {0, 8, false, 4},
                  {0, 14, false, std::nullopt}});
}

// Under the default link the first set arrives for live second 4. From there
// the tracked set collapses below the tracking threshold on its third step
// (second 6); a second group of references matches that second, so the
// background re-search has something to deliver.
inline Scenario early_collapse(std::uint64_t seed = 77) {
    return build(seed, 14,
                 {{0, 40, false, 3},
                  {0, 30, false, 4},
                  {0, 20, false, 5},
                  {0, 5, false, 5},
                  {0, 5, true, std::nullopt},
                  {6, 15, false, std::nullopt},
                  {6, 15, true, std::nullopt}});
}

}  // namespace scenario
