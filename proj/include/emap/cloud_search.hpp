#pragma once

// Cross-correlation search of one input window against every signal-set of the
// store. The sliding variant advances the offset inside a set by
// round(alpha^(omega - 1)) samples, so it strides over dissimilar regions and
// creeps through similar ones; the exhaustive variant visits every offset and
// serves as the reference.

#include "emap/dsp.hpp"
#include "emap/mdb.hpp"

#include <chrono>
#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

namespace emap::search {

inline constexpr std::size_t kMaxOffset = mdb::kSliceLen - dsp::kWindowLen;  // 744, inclusive

struct Candidate {
    mdb::SetId set_id = 0;
    double omega = 0.0;
    std::size_t beta = 0;

    bool operator==(const Candidate&) const = default;
};

/// Total order used for ranking: omega descending, then set id, then offset.
bool ranks_before(const Candidate& a, const Candidate& b);

struct SearchConfig {
    double alpha = 0.004;
    double delta = 0.8;
    std::size_t top_k = 100;
    std::optional<std::size_t> max_comparisons;
    unsigned threads = 1;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct SearchResult {
    std::vector<Candidate> candidates;  // ranked, at most top_k, one per set
    std::size_t comparisons_made = 0;
    std::size_t slices_scanned = 0;
    std::size_t degenerate_windows = 0;
    std::size_t matches_found = 0;  // offsets above delta, before per-set reduction
    bool truncated = false;         // max_comparisons reached
    std::chrono::nanoseconds elapsed{0};

    /// Everything except the wall-clock duration.
    bool same_outcome(const SearchResult& other) const;
};

/// One correlation evaluation, for inspecting the step schedule.
struct TraceEntry {
    mdb::SetId set_id = 0;
    std::size_t beta = 0;
    double omega = 0.0;  // before clamping
    std::size_t step = 0;
};

/// max(1, round(alpha^(omega - 1))) with omega clamped below at 0.
std::size_t step_for(double omega, double alpha);

SearchResult sliding_search(const dsp::SignalWindow& input, const mdb::MdbStore& store, const SearchConfig& cfg,
                            std::vector<TraceEntry>* trace = nullptr);

SearchResult exhaustive_search(const dsp::SignalWindow& input, const mdb::MdbStore& store, const SearchConfig& cfg,
                               std::vector<TraceEntry>* trace = nullptr);

/// Mean omega of the returned candidates; 0 when there are none.
double mean_omega(const SearchResult& result);

struct SweepRow {
    double alpha = 0.0;
    double mean_comparisons = 0.0;
    double mean_matches = 0.0;
    double mean_top_omega = 0.0;
};

std::vector<SweepRow> alpha_sweep(const std::vector<dsp::SignalWindow>& inputs, const mdb::MdbStore& store,
                                  const std::vector<double>& alphas, const SearchConfig& base = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace emap::search
