#include "emap/edge_tracker.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>
#include <json.hpp>

namespace emap::edge {

void TrackerConfig::validate() const {
    if (!(area_threshold > 0.0)) throw std::invalid_argument("area threshold must be positive");
    if (tracking_threshold < 1 || tracking_threshold >= 100)
        throw std::invalid_argument(fmt::format("tracking threshold {} outside [1, 100)", tracking_threshold));
    if (trend_window < 1) throw std::invalid_argument("trend window must be at least 1");
    if (max_iterations_per_set < 1) throw std::invalid_argument("max iterations per set must be at least 1");
}

std::string to_string(RemovalReason r) {
    switch (r) {
        case RemovalReason::none: return "none";
        case RemovalReason::dissimilar: return "dissimilar";
        case RemovalReason::exhausted: return "exhausted";
    }
    return "?";
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::anomaly_predicted: return "anomaly_predicted";
        case Classification::normal: return "normal";
        case Classification::undecided: return "undecided";
    }
    return "?";
}

std::string to_string(CloudCallReason r) { return r == CloudCallReason::threshold ? "threshold" : "cadence"; }

std::string to_json_line(const IterationReport& r) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["alive"] = r.alive;
    j["removed_dissimilar"] = r.removed_dissimilar;
    j["removed_exhausted"] = r.removed_exhausted;
    j["p_anomaly"] = r.p_anomaly;
    j["classification"] = to_string(r.classification);
    j["cloud_call"] = r.cloud_call ? nlohmann::ordered_json(to_string(*r.cloud_call)) : nlohmann::ordered_json(nullptr);
    j["step_micros"] = r.step_micros;
    return j.dump();
}

TrackerState TrackerState::init(const search::SearchResult& result, const mdb::MdbStore& store,
                                const TrackerConfig& cfg, std::size_t lag_windows) {
    cfg.validate();
    if (result.candidates.empty()) throw EmptyCorrelationSetError("cannot start tracking an empty correlation set");
    TrackerState state(cfg);
    state.load(result, store, lag_windows);
    state.pa_history_.push_back(state.current_probability());
    return state;
}

void TrackerState::load(const search::SearchResult& result, const mdb::MdbStore& store, std::size_t lag_windows) {
    tracked_.clear();
    exhausted_at_init_ = 0;
    for (const auto& c : result.candidates) {
        const auto& e = store.entry(c.set_id);
        TrackedCandidate t{c.set_id, e.parent_id, e.label,
                           e.parent_offset + c.beta + lag_windows * dsp::kWindowLen, c.omega, true,
                           RemovalReason::none};
        if (!store.parent_samples(t.parent_id, t.cursor, dsp::kWindowLen)) {
            t.alive = false;
            t.removal = RemovalReason::exhausted;
            ++exhausted_at_init_;
        }
        tracked_.push_back(t);
    }
    std::sort(tracked_.begin(), tracked_.end(), [](const auto& a, const auto& b) { return a.set_id < b.set_id; });
    set_iteration_ = 0;
    degraded_ = alive_count() == 0;
}

std::size_t TrackerState::alive_count() const {
    return static_cast<std::size_t>(std::count_if(tracked_.begin(), tracked_.end(), [](const auto& t) { return t.alive; }));
}

double TrackerState::current_probability() const {
    std::size_t alive = 0, anomalous = 0;
    for (const auto& t : tracked_) {
        if (!t.alive) continue;
        ++alive;
        if (t.label == mdb::Label::anomalous) ++anomalous;
    }
    if (alive == 0) return pa_history_.empty() ? 0.0 : pa_history_.back();
    return static_cast<double>(anomalous) / static_cast<double>(alive);
}

IterationReport TrackerState::step(const dsp::SignalWindow& input, const mdb::MdbStore& store) {
    const auto started = std::chrono::steady_clock::now();
    IterationReport report;
    // tracked_ is kept in set-id order, so removals are applied in that order
    for (auto& t : tracked_) {
        if (!t.alive) continue;
        const auto segment = store.parent_samples(t.parent_id, t.cursor, dsp::kWindowLen);
        if (!segment) {
            t.alive = false;
            t.removal = RemovalReason::exhausted;
            ++report.removed_exhausted;
            continue;
        }
        const double area = dsp::area_between(input.samples(), *segment);
        const bool removed = area > cfg_.area_threshold;
        report.evaluations.push_back({t.set_id, t.parent_id, t.cursor, area, removed});
        if (removed) {
            t.alive = false;
            t.removal = RemovalReason::dissimilar;
            ++report.removed_dissimilar;
        } else {
            t.cursor += dsp::kWindowLen;
        }
    }
    ++iteration_;
    ++set_iteration_;
    const std::size_t alive = alive_count();
    if (alive == 0) degraded_ = true;
    pa_history_.push_back(current_probability());

    report.iteration = iteration_;
    report.alive = alive;
    report.p_anomaly = pa_history_.back();
    report.classification = classify(*this);
    report.cloud_call = needs_cloud_call(*this).reason;
    report.degraded = degraded_;
    report.step_micros = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started).count();
    return report;
}

bool TrackerState::swap_in(const search::SearchResult& fresh, const mdb::MdbStore& store, std::size_t lag_windows) {
    if (fresh.candidates.empty()) {
        degraded_ = true;
        return false;
    }
    load(fresh, store, lag_windows);
    // the fresh set's own starting probability, as init records it
    if (alive_count() > 0) pa_history_.push_back(current_probability());
    return true;
}

CloudCallDecision needs_cloud_call(const TrackerState& state) {
    const auto& cfg = state.config();
    if (state.alive_count() <= cfg.tracking_threshold) return {true, CloudCallReason::threshold};
    if (state.set_iteration() >= cfg.max_iterations_per_set) return {true, CloudCallReason::cadence};
    return {};
}

Classification classify_history(std::span<const double> h, const TrackerConfig& cfg) {
    const std::size_t w = cfg.trend_window;
    if (h.size() < w + 1) return Classification::undecided;
    bool rising = true, flat_or_falling = true;
    for (std::size_t i = h.size() - w; i < h.size(); ++i) {
        if (!(h[i] > h[i - 1])) rising = false;
        if (h[i] > h[i - 1]) flat_or_falling = false;
    }
    if (rising && h.back() >= cfg.pa_floor) return Classification::anomaly_predicted;
    if (flat_or_falling) return Classification::normal;
    return Classification::undecided;
}

Classification classify(const TrackerState& state) { return classify_history(state.pa_history(), state.config()); }

}  // namespace emap::edge
