#pragma once

// Experiment configuration. The file form is one `key = value` per line with
// `#` comments; keys are dotted by module (search.alpha, tracker.area_threshold,
// link.uplink_fixed_us, ...).

#include "emap/orchestrator.hpp"
#include "emap/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emap {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CorpusSettings {
    int n_normal = 0;
    int n_anomalous = 0;
    std::string kind = "seizure";
    mdb::SynthParams params;
};

struct RunConfig {
    std::uint64_t seed = 7;
    unsigned threads = 1;

    // fixed by the signal model; kept so a config file states them explicitly
    int sample_rate_hz = 256;
    std::size_t window_len = 256;
    std::size_t slice_len = 1000;

    sim::SimConfig sim;
    std::size_t batch_size = 20;

    CorpusSettings store_corpus;  // reference material for the store
    CorpusSettings eval_corpus;   // disjoint live streams

    std::string store_dir;
    std::string corpus_dir;
    std::string out_dir;

    RunConfig();

    /// Seeds for the two synthetic corpora, both derived from `seed`.
    std::uint64_t store_seed() const { return seed; }
    std::uint64_t eval_seed() const { return seed + 1; }

    std::string to_text() const;
    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Sets one key from its text form, as a config line or CLI override would.
    void set(std::string_view key, std::string_view value);
    static std::vector<std::string> keys();

    void validate() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace emap
