#pragma once

// Discrete-event simulation of the cloud-edge loop. A simulated clock ticks
// once per acquired second; uplink, cloud search and downlink are scheduled
// future events, so the edge keeps tracking its current set while a fresh one
// is on its way.

#include "emap/cloud_search.hpp"
#include "emap/edge_tracker.hpp"
#include "emap/mdb.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace emap::sim {

using Nanos = std::chrono::nanoseconds;

/// fixed_overhead + per_unit_cost * units, per direction.
struct LinkModel {
    Nanos uplink_fixed{400'000};
    Nanos uplink_per_sample{2'000};
    Nanos downlink_fixed{50'000'000};
    Nanos downlink_per_signal{1'500'000};

    Nanos uplink_latency(std::size_t n_samples) const;
    Nanos downlink_latency(std::size_t n_signals) const;
    void validate() const;

    static LinkModel ideal() { return {Nanos{0}, Nanos{0}, Nanos{0}, Nanos{0}}; }
};

enum class SearchLatencyMode { constant, measured };

struct SimConfig {
    search::SearchConfig search;
    edge::TrackerConfig tracker;
    LinkModel link;
    SearchLatencyMode latency_mode = SearchLatencyMode::constant;
    Nanos search_latency{2'800'000'000};
    /// Modeled edge compute per tracked candidate per step (about 0.9 s for 100).
    Nanos edge_cost_per_candidate{9'000'000};
    /// Cloud calls after the initial search that fall inside the evaluation
    /// horizon; negative means the whole stream.
    int eval_cloud_calls = 2;
    /// Run cloud searches on a worker thread while the loop continues.
    bool concurrent_search = false;
    /// Report measured step wall time instead of the modeled edge cost.
    bool report_wall_time = false;

    void validate() const;
};

struct TimelineEvent {
    Nanos t{0};
    std::string kind;  // sample|uplink|search_start|search_done|downlink|swap_in|track_step|cloud_call_request
    nlohmann::ordered_json detail;
};

std::string to_json_line(const TimelineEvent& event);

/// One round trip to the cloud.
struct CloudCall {
    bool initial = false;
    std::size_t window = 0;  // index of the window sent
    std::optional<edge::CloudCallReason> reason;
    Nanos requested{0};
    Nanos delta_ec{0};
    Nanos delta_cs{0};
    Nanos delta_ce{0};
    Nanos delivered{0};
    std::optional<Nanos> applied;  // swap boundary, if reached before the stream ended
    std::size_t candidates = 0;
    std::size_t old_set_iterations = 0;  // steps on the previous set while this call was in flight

    Nanos round_trip() const { return delta_ec + delta_cs + delta_ce; }
};

struct TimingReport {
    Nanos delta_ec{0};
    Nanos delta_cs{0};
    Nanos delta_ce{0};
    Nanos delta_initial{0};
    std::vector<Nanos> step_durations;
    std::vector<CloudCall> calls;
};

struct RunOutcome {
    mdb::SignalId live_id = 0;
    bool ground_truth_anomalous = false;
    std::optional<double> onset_s;
    edge::Classification classification = edge::Classification::undecided;
    std::optional<double> first_prediction_s;
    std::optional<double> lead_time_s;
    std::vector<edge::IterationReport> reports;
    std::vector<double> report_times_s;  // end of the window each report consumed
    std::size_t horizon_reports = 0;     // reports inside the evaluation horizon
    std::size_t cloud_calls = 0;         // requests after the initial search
    std::vector<TimelineEvent> timeline;
    TimingReport timing;

    bool predicted_anomaly() const { return classification == edge::Classification::anomaly_predicted; }
};

/// Thrown for inputs the simulation cannot run on (short stream, empty store).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

RunOutcome run_stream(const mdb::SourceSignal& live, const mdb::MdbStore& store, const SimConfig& cfg);

void write_timeline(std::ostream& out, const RunOutcome& outcome);
void write_reports(std::ostream& out, const RunOutcome& outcome);

struct AccuracyRow {
    std::string batch;
    std::string anomaly_kind;
    std::size_t n = 0;
    double accuracy = 0.0;
    std::optional<double> false_positive_rate;
    std::optional<double> mean_lead_time_s;
};

struct AccuracyTable {
    std::vector<AccuracyRow> rows;  // one per batch, then "mean"
    std::vector<RunOutcome> outcomes;
    double accuracy = 0.0;  // pooled over all streams
    double false_positive_rate = 0.0;
    double sensitivity = 0.0;
};

/// Runs every stream, shuffled by seed into batches of batch_size.
/// Throws SimulationError if any stream also appears in the store.
AccuracyTable evaluate_batch(const std::vector<mdb::SourceSignal>& corpus, const mdb::MdbStore& store,
                             const SimConfig& cfg, std::size_t batch_size = 20, std::uint64_t seed = 0);

void write_accuracy_csv(std::ostream& out, const AccuracyTable& table);

struct OffsetPrediction {
    double offset_s = 0.0;
    bool evaluated = false;  // false when too little signal precedes the cut
    bool predicted = false;
};

/// Truncates the stream at (onset - offset) for each offset and reports
/// whether an anomaly had been predicted by then.
std::vector<OffsetPrediction> predict_at_offsets(const mdb::SourceSignal& live, const std::vector<double>& offsets_s,
                                                 const mdb::MdbStore& store, const SimConfig& cfg);

}  // namespace emap::sim
