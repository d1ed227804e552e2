#pragma once

// Mega-database of labeled, filtered 1000-sample signal-sets, persisted as a
// directory: manifest.json, index.json and one float32 payload per source.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace emap::mdb {

inline constexpr std::size_t kSliceLen = 1000;
inline constexpr int kFormatVersion = 1;

using SignalId = std::int64_t;
using SetId = std::int64_t;

/// Malformed or inconsistent input data (bad CSV rows, spans, store files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Half-open sample interval [start, end) carrying an anomaly.
struct AnomalySpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string kind;

    bool overlaps(std::size_t lo, std::size_t hi) const { return start < hi && end > lo; }
    bool operator==(const AnomalySpan&) const = default;
};

struct SourceSignal {
    SignalId id = 0;
    std::vector<double> samples;  // filtered, 256 Hz
    std::vector<AnomalySpan> anomaly_spans;
    std::string dataset_tag;

    bool is_anomalous() const { return !anomaly_spans.empty(); }
    std::optional<std::size_t> onset_sample() const;
    /// Throws DataError unless spans are ordered, non-overlapping and in range.
    void validate() const;
};

enum class Label : int { normal = 0, anomalous = 1 };

struct SignalSet {
    SetId set_id = 0;
    SignalId parent_id = 0;
    std::size_t parent_offset = 0;
    std::vector<double> samples;
    Label label = Label::normal;
    std::string anomaly_kind;  // empty for normal sets
};

/// Non-overlapping kSliceLen slices; the trailing remainder is dropped.
/// Set ids are assigned from first_set_id upward.
std::vector<SignalSet> slice_signal(const SourceSignal& signal, SetId first_set_id = 0);

/// Label by any-overlap of [offset, offset + kSliceLen) with a span.
std::pair<Label, std::string> label_for(const SourceSignal& signal, std::size_t offset);

/// Reads one amplitude per line ('#' comments, blank lines and a single
/// leading header line are skipped), resamples to 256 Hz and bandpass filters.
/// Spans are given in source-rate samples and rescaled to 256 Hz.
SourceSignal ingest_csv(const std::filesystem::path& path, int sample_rate_hz,
                        std::vector<AnomalySpan> anomaly_spans, std::string dataset_tag, SignalId id = 0);

/// Parses the raw amplitude column of a CSV file without any processing.
std::vector<double> read_csv_samples(const std::filesystem::path& path);

/// Scales spans from a source rate to the base rate, rounding to the nearest sample.
std::vector<AnomalySpan> rescale_spans(const std::vector<AnomalySpan>& spans, int from_hz, int to_hz);

struct IndexEntry {
    SetId set_id = 0;
    SignalId parent_id = 0;
    std::size_t parent_offset = 0;
    Label label = Label::normal;
    std::string anomaly_kind;

    bool operator==(const IndexEntry&) const = default;
};

/// Immutable store; safe for concurrent readers.
class MdbStore {
public:
    MdbStore() = default;

    /// In-memory store. Samples are rounded to float32, as they are on disk.
    static MdbStore from_signals(std::vector<SourceSignal> signals);
    static MdbStore open(const std::filesystem::path& dir);
    void write(const std::filesystem::path& dir) const;

    std::size_t num_slices() const { return index_.size(); }
    bool empty() const { return index_.empty(); }
    const std::vector<IndexEntry>& index() const { return index_; }
    const IndexEntry& entry(SetId set_id) const;
    const std::vector<SourceSignal>& signals() const { return signals_; }
    const SourceSignal& parent(SignalId id) const;

    std::span<const double> slice_samples(SetId set_id) const;
    SignalSet slice(SetId set_id) const;

    /// Parent samples [parent_offset + offset, + len) of a set; nullopt when the
    /// parent ends before that range does (the candidate is exhausted).
    std::optional<std::span<const double>> parent_segment(SetId set_id, std::size_t offset, std::size_t len) const;
    /// Same, addressed by absolute parent position.
    std::optional<std::span<const double>> parent_samples(SignalId parent_id, std::size_t position,
                                                          std::size_t len) const;

    std::size_t count_label(Label label) const;
    std::size_t discarded_samples() const;

private:
    std::vector<SourceSignal> signals_;
    std::unordered_map<SignalId, std::size_t> by_id_;
    std::vector<IndexEntry> index_;
};

/// Builds the store from signals and writes it to out_dir.
MdbStore build_store(std::vector<SourceSignal> signals, const std::filesystem::path& out_dir);

/// Order-sensitive FNV-1a hash over the float32 bit patterns of the samples;
/// used to detect corpus/store overlap.
std::uint64_t fingerprint(std::span<const double> samples);

std::string to_string(Label label);

}  // namespace emap::mdb
