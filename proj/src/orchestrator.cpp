#include "emap/orchestrator.hpp"

#include <algorithm>
#include <future>
#include <random>
#include <set>

#include <fmt/format.h>

namespace emap::sim {

namespace {

constexpr Nanos kSecond{1'000'000'000};

double seconds(Nanos t) { return std::chrono::duration<double>(t).count(); }
double millis(Nanos t) { return std::chrono::duration<double, std::milli>(t).count(); }

struct Pending {
    std::size_t call_index = 0;
    std::size_t window = 0;
    Nanos search_done{0};
    bool resolved = false;
    std::future<search::SearchResult> future;  // concurrent mode
    std::optional<search::SearchResult> result;
};

}  // namespace

Nanos LinkModel::uplink_latency(std::size_t n_samples) const {
    return uplink_fixed + uplink_per_sample * static_cast<std::int64_t>(n_samples);
}

Nanos LinkModel::downlink_latency(std::size_t n_signals) const {
    return downlink_fixed + downlink_per_signal * static_cast<std::int64_t>(n_signals);
}

void LinkModel::validate() const {
    if (uplink_fixed.count() < 0 || uplink_per_sample.count() < 0 || downlink_fixed.count() < 0 ||
        downlink_per_signal.count() < 0)
        throw std::invalid_argument("link latencies must be non-negative");
}

void SimConfig::validate() const {
    search.validate();
    tracker.validate();
    link.validate();
    if (search_latency.count() < 0 || edge_cost_per_candidate.count() < 0)
        throw std::invalid_argument("simulated durations must be non-negative");
}

std::string to_json_line(const TimelineEvent& e) {
    nlohmann::ordered_json j;
    j["t_sim_ms"] = millis(e.t);
    j["kind"] = e.kind;
    j["detail"] = e.detail.is_null() ? nlohmann::ordered_json::object() : e.detail;
    return j.dump();
}

RunOutcome run_stream(const mdb::SourceSignal& live, const mdb::MdbStore& store, const SimConfig& cfg) {
    cfg.validate();
    const std::size_t n_windows = live.samples.size() / dsp::kWindowLen;
    if (n_windows < 2)
        throw SimulationError(fmt::format("live signal {} holds {} samples; at least two seconds are needed", live.id,
                                          live.samples.size()));
    if (store.empty()) throw SimulationError("the store holds no signal-sets");

    std::vector<dsp::SignalWindow> windows;
    windows.reserve(n_windows);
    for (std::size_t k = 0; k < n_windows; ++k)
        windows.emplace_back(std::span<const double>(live.samples).subspan(k * dsp::kWindowLen, dsp::kWindowLen), k);

    RunOutcome out;
    out.live_id = live.id;
    out.ground_truth_anomalous = live.is_anomalous();
    if (const auto onset = live.onset_sample()) out.onset_s = static_cast<double>(*onset) / dsp::kBaseRateHz;

    std::optional<edge::TrackerState> tracker;
    std::optional<Pending> pending;
    std::optional<std::size_t> horizon;
    auto& timeline = out.timeline;
    auto& calls = out.timing.calls;

    auto emit = [&](Nanos t, std::string kind, nlohmann::ordered_json detail) {
        timeline.push_back({t, std::move(kind), std::move(detail)});
    };

    auto run_search = [&store, search_cfg = cfg.search](const dsp::SignalWindow& w) {
        return search::sliding_search(w, store, search_cfg);
    };

    const bool concurrent = cfg.concurrent_search && cfg.latency_mode == SearchLatencyMode::constant;

    auto request = [&](Nanos t, std::size_t window, std::optional<edge::CloudCallReason> reason) {
        CloudCall call;
        call.initial = !tracker;  // retries until a first set is accepted count as the initial search
        call.window = window;
        call.reason = reason;
        call.requested = t;
        call.delta_ec = cfg.link.uplink_latency(dsp::kWindowLen);

        Pending p;
        p.call_index = calls.size();
        p.window = window;
        if (concurrent) {
            p.future = std::async(std::launch::async, run_search, windows[window]);
            call.delta_cs = cfg.search_latency;
        } else {
            auto result = run_search(windows[window]);
            call.delta_cs = cfg.latency_mode == SearchLatencyMode::measured
                                ? std::chrono::duration_cast<Nanos>(result.elapsed)
                                : cfg.search_latency;
            p.result = std::move(result);
        }

        if (!call.initial) {
            ++out.cloud_calls;
            emit(t, "cloud_call_request", {{"window", window}, {"reason", reason ? edge::to_string(*reason) : "degraded"}});
            if (cfg.eval_cloud_calls >= 0 && !horizon && out.cloud_calls > static_cast<std::size_t>(cfg.eval_cloud_calls))
                horizon = out.reports.size();
        }
        const Nanos search_start = t + call.delta_ec;
        p.search_done = search_start + call.delta_cs;
        emit(t, "uplink", {{"window", window}, {"samples", dsp::kWindowLen}, {"latency_ms", millis(call.delta_ec)}});
        emit(search_start, "search_start", {{"window", window}});
        emit(p.search_done, "search_done", {{"window", window}, {"latency_ms", millis(call.delta_cs)}});
        calls.push_back(call);
        pending = std::move(p);
    };

    // The downlink size depends on the result, so delivery is scheduled once the
    // simulated clock has passed search_done; both modes resolve at the same point.
    auto resolve = [&]() {
        if (!pending || pending->resolved) return;
        if (!pending->result) pending->result = pending->future.get();
        auto& call = calls[pending->call_index];
        call.candidates = pending->result->candidates.size();
        call.delta_ce = cfg.link.downlink_latency(call.candidates);
        call.delivered = pending->search_done + call.delta_ce;
        emit(call.delivered, "downlink",
             {{"window", pending->window}, {"signals", call.candidates}, {"latency_ms", millis(call.delta_ce)}});
        pending->resolved = true;
    };

    for (std::size_t k = 0; k < n_windows; ++k) {
        const Nanos boundary = kSecond * static_cast<std::int64_t>(k + 1);
        emit(boundary, "sample", {{"window", k}});

        if (pending && boundary >= pending->search_done) resolve();

        // apply a delivered set at the first boundary after delivery, never to the window it was computed on
        if (pending && pending->resolved && k > pending->window && calls[pending->call_index].delivered <= boundary) {
            auto& call = calls[pending->call_index];
            auto result = std::move(*pending->result);
            const std::size_t lag = k - pending->window;
            bool accepted = !result.candidates.empty();
            if (!tracker) {
                if (accepted) tracker = edge::TrackerState::init(result, store, cfg.tracker, lag);
            } else {
                accepted = tracker->swap_in(result, store, lag);
            }
            call.applied = boundary;
            emit(boundary, "swap_in",
                 {{"window", pending->window},
                  {"initial", call.initial},
                  {"candidates", result.candidates.size()},
                  {"accepted", accepted},
                  {"old_set_iterations", call.old_set_iterations}});
            pending.reset();
        }

        Nanos step_cost{0};
        if (tracker) {
            const std::size_t evaluated = tracker->alive_count();
            auto report = tracker->step(windows[k], store);
            step_cost = cfg.edge_cost_per_candidate * static_cast<std::int64_t>(evaluated);
            if (!cfg.report_wall_time)
                report.step_micros = std::chrono::duration_cast<std::chrono::microseconds>(step_cost).count();
            out.timing.step_durations.push_back(step_cost);
            emit(boundary, "track_step",
                 {{"window", k}, {"iteration", report.iteration}, {"alive", report.alive},
                  {"p_anomaly", report.p_anomaly}, {"classification", edge::to_string(report.classification)}});
            if (pending) ++calls[pending->call_index].old_set_iterations;
            out.reports.push_back(std::move(report));
            out.report_times_s.push_back(seconds(boundary));
        }

        if (!pending) {
            const auto decision = tracker ? edge::needs_cloud_call(*tracker) : edge::CloudCallDecision{true, std::nullopt};
            if (decision.needed) request(boundary + step_cost, k, decision.reason);
        }
    }
    resolve();

    if (!calls.empty()) {
        const auto& first = calls.front();
        out.timing.delta_ec = first.delta_ec;
        out.timing.delta_cs = first.delta_cs;
        out.timing.delta_ce = first.delta_ce;
        out.timing.delta_initial = first.delta_ec + first.delta_cs + first.delta_ce;
    }

    std::stable_sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

    out.horizon_reports = horizon.value_or(out.reports.size());
    for (std::size_t i = 0; i < out.horizon_reports; ++i) {
        if (out.reports[i].classification == edge::Classification::anomaly_predicted) {
            out.classification = edge::Classification::anomaly_predicted;
            out.first_prediction_s = out.report_times_s[i];
            break;
        }
    }
    if (!out.first_prediction_s && out.horizon_reports > 0)
        out.classification = out.reports[out.horizon_reports - 1].classification;
    if (out.first_prediction_s && out.onset_s && *out.first_prediction_s < *out.onset_s)
        out.lead_time_s = *out.onset_s - *out.first_prediction_s;
    return out;
}

void write_timeline(std::ostream& out, const RunOutcome& outcome) {
    for (const auto& e : outcome.timeline) out << to_json_line(e) << '\n';
}

void write_reports(std::ostream& out, const RunOutcome& outcome) {
    for (const auto& r : outcome.reports) out << edge::to_json_line(r) << '\n';
}

AccuracyTable evaluate_batch(const std::vector<mdb::SourceSignal>& corpus, const mdb::MdbStore& store,
                             const SimConfig& cfg, std::size_t batch_size, std::uint64_t seed) {
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    std::set<std::uint64_t> stored;
    for (const auto& s : store.signals()) stored.insert(mdb::fingerprint(s.samples));
    for (const auto& s : corpus)
        if (stored.count(mdb::fingerprint(s.samples)))
            throw SimulationError(fmt::format("evaluation stream {} also appears in the store", s.id));

    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    AccuracyTable table;
    table.outcomes.resize(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) table.outcomes[i] = run_stream(corpus[i], store, cfg);

    struct Tally {
        std::size_t n = 0, correct = 0, normals = 0, false_pos = 0, anomalous = 0, true_pos = 0;
        double lead_sum = 0.0;
        std::size_t leads = 0;
        std::set<std::string> kinds;
        void add(const RunOutcome& o, const mdb::SourceSignal& s) {
            ++n;
            const bool predicted = o.predicted_anomaly();
            if (predicted == o.ground_truth_anomalous) ++correct;
            if (o.ground_truth_anomalous) {
                ++anomalous;
                if (predicted) ++true_pos;
                for (const auto& sp : s.anomaly_spans) kinds.insert(sp.kind);
            } else {
                ++normals;
                if (predicted) ++false_pos;
            }
            if (o.lead_time_s) {
                lead_sum += *o.lead_time_s;
                ++leads;
            }
        }
        AccuracyRow row(std::string name) const {
            std::string kind;
            for (const auto& k : kinds) kind += (kind.empty() ? "" : "+") + k;
            AccuracyRow r{std::move(name), kind.empty() ? "none" : kind, n,
                          n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0, std::nullopt, std::nullopt};
            if (normals) r.false_positive_rate = static_cast<double>(false_pos) / static_cast<double>(normals);
            if (leads) r.mean_lead_time_s = lead_sum / static_cast<double>(leads);
            return r;
        }
    };

    Tally total;
    for (std::size_t start = 0, b = 1; start < order.size(); start += batch_size, ++b) {
        Tally batch;
        for (std::size_t j = start; j < std::min(order.size(), start + batch_size); ++j) {
            batch.add(table.outcomes[order[j]], corpus[order[j]]);
            total.add(table.outcomes[order[j]], corpus[order[j]]);
        }
        table.rows.push_back(batch.row(std::to_string(b)));
    }

    // mean row: batch-averaged metrics
    if (!table.rows.empty()) {
        AccuracyRow mean = total.row("mean");
        double acc = 0.0, fpr = 0.0, lead = 0.0;
        std::size_t n_fpr = 0, n_lead = 0;
        for (const auto& r : table.rows) {
            acc += r.accuracy;
            if (r.false_positive_rate) fpr += *r.false_positive_rate, ++n_fpr;
            if (r.mean_lead_time_s) lead += *r.mean_lead_time_s, ++n_lead;
        }
        mean.accuracy = acc / static_cast<double>(table.rows.size());
        mean.false_positive_rate = n_fpr ? std::optional(fpr / static_cast<double>(n_fpr)) : std::nullopt;
        mean.mean_lead_time_s = n_lead ? std::optional(lead / static_cast<double>(n_lead)) : std::nullopt;
        table.rows.push_back(mean);
    }

    table.accuracy = total.n ? static_cast<double>(total.correct) / static_cast<double>(total.n) : 0.0;
    table.false_positive_rate =
        total.normals ? static_cast<double>(total.false_pos) / static_cast<double>(total.normals) : 0.0;
    table.sensitivity =
        total.anomalous ? static_cast<double>(total.true_pos) / static_cast<double>(total.anomalous) : 0.0;
    return table;
}

void write_accuracy_csv(std::ostream& out, const AccuracyTable& table) {
    out << "batch,anomaly_kind,n,accuracy,false_positive_rate,mean_lead_time_s\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string(); };
    for (const auto& r : table.rows)
        out << fmt::format("{},{},{},{:.4f},{},{}\n", r.batch, r.anomaly_kind, r.n, r.accuracy,
                           opt(r.false_positive_rate), opt(r.mean_lead_time_s));
}

std::vector<OffsetPrediction> predict_at_offsets(const mdb::SourceSignal& live, const std::vector<double>& offsets_s,
                                                 const mdb::MdbStore& store, const SimConfig& cfg) {
    const auto onset = live.onset_sample();
    if (!onset) throw std::invalid_argument(fmt::format("signal {} has no anomaly onset", live.id));
    const double onset_s = static_cast<double>(*onset) / dsp::kBaseRateHz;
    SimConfig whole = cfg;
    whole.eval_cloud_calls = -1;

    std::vector<OffsetPrediction> out;
    for (double offset : offsets_s) {
        OffsetPrediction p{offset, false, false};
        const double cut_s = onset_s - offset;
        if (cut_s >= 2.0) {
            const auto windows = static_cast<std::size_t>(cut_s);
            mdb::SourceSignal prefix{live.id,
                                     {live.samples.begin(),
                                      live.samples.begin() + static_cast<std::ptrdiff_t>(windows * dsp::kWindowLen)},
                                     {},
                                     live.dataset_tag};
            const auto outcome = run_stream(prefix, store, whole);
            p.evaluated = true;
            p.predicted = outcome.predicted_anomaly();
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace emap::sim
