#pragma once

// Edge-side tracking of the correlation set. Each second the live window is
// compared, by area between curves, with the continuation of every tracked
// signal-set in its parent recording; sets that drift apart are dropped and
// the anomaly probability is the anomalous share of the survivors.

#include "emap/cloud_search.hpp"
#include "emap/dsp.hpp"
#include "emap/mdb.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emap::edge {

struct TrackerConfig {
    double area_threshold = 900.0;
    std::size_t tracking_threshold = 10;  // H
    std::size_t trend_window = 2;
    double pa_floor = 0.5;
    std::size_t max_iterations_per_set = 5;

    void validate() const;
};

/// Thrown by TrackerState::init on an empty correlation set.
class EmptyCorrelationSetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class RemovalReason { none, dissimilar, exhausted };
enum class Classification { anomaly_predicted, normal, undecided };
enum class CloudCallReason { threshold, cadence };

std::string to_string(RemovalReason r);
std::string to_string(Classification c);
std::string to_string(CloudCallReason r);

struct TrackedCandidate {
    mdb::SetId set_id = 0;
    mdb::SignalId parent_id = 0;
    mdb::Label label = mdb::Label::normal;
    std::size_t cursor = 0;  // absolute parent position of the next segment to compare
    double omega_at_match = 0.0;
    bool alive = true;
    RemovalReason removal = RemovalReason::none;
};

/// One area evaluation in a step, enough to replay it against the store.
struct AreaEvaluation {
    mdb::SetId set_id = 0;
    mdb::SignalId parent_id = 0;
    std::size_t position = 0;
    double area = 0.0;
    bool removed = false;
};

struct IterationReport {
    std::size_t iteration = 0;
    std::size_t alive = 0;
    std::size_t removed_dissimilar = 0;
    std::size_t removed_exhausted = 0;
    double p_anomaly = 0.0;
    Classification classification = Classification::undecided;
    std::optional<CloudCallReason> cloud_call;
    std::int64_t step_micros = 0;
    bool degraded = false;
    std::vector<AreaEvaluation> evaluations;
};

/// Single-line JSON with the fields iteration, alive, removed_dissimilar,
/// removed_exhausted, p_anomaly, classification, cloud_call, step_micros.
std::string to_json_line(const IterationReport& report);

class TrackerState {
public:
    /// Starts tracking a search result. lag_windows is how many windows past the
    /// searched one the next step's input lies (1 when it is the very next second).
    static TrackerState init(const search::SearchResult& result, const mdb::MdbStore& store,
                             const TrackerConfig& cfg, std::size_t lag_windows = 1);

    IterationReport step(const dsp::SignalWindow& input, const mdb::MdbStore& store);

    /// Replaces the tracked set, keeping the probability history; the new set's
    /// starting probability is appended to it, as init does. An empty result
    /// leaves the current set in place, flags degraded mode and returns false.
    bool swap_in(const search::SearchResult& fresh, const mdb::MdbStore& store, std::size_t lag_windows = 1);

    const std::vector<TrackedCandidate>& tracked() const { return tracked_; }
    const std::vector<double>& pa_history() const { return pa_history_; }
    const TrackerConfig& config() const { return cfg_; }
    /// Steps taken over the lifetime of the tracker.
    std::size_t iteration() const { return iteration_; }
    /// Steps taken on the current correlation set.
    std::size_t set_iteration() const { return set_iteration_; }
    std::size_t alive_count() const;
    std::size_t exhausted_at_init() const { return exhausted_at_init_; }
    double p_anomaly() const { return pa_history_.back(); }
    bool degraded() const { return degraded_; }

private:
    explicit TrackerState(const TrackerConfig& cfg) : cfg_(cfg) {}
    void load(const search::SearchResult& result, const mdb::MdbStore& store, std::size_t lag_windows);
    double current_probability() const;

    TrackerConfig cfg_;
    std::vector<TrackedCandidate> tracked_;
    std::vector<double> pa_history_;
    std::size_t iteration_ = 0;
    std::size_t set_iteration_ = 0;
    std::size_t exhausted_at_init_ = 0;
    bool degraded_ = false;
};

struct CloudCallDecision {
    bool needed = false;
    std::optional<CloudCallReason> reason;
};

CloudCallDecision needs_cloud_call(const TrackerState& state);

Classification classify(const TrackerState& state);
Classification classify_history(std::span<const double> pa_history, const TrackerConfig& cfg);

}  // namespace emap::edge
