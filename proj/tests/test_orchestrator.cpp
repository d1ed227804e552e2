#include "emap/orchestrator.hpp"
#include "emap/synth.hpp"
#include "scenario.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace emap;
using namespace emap::sim;
using namespace std::chrono_literals;

namespace {

std::string timeline_text(const RunOutcome& o) {
    std::ostringstream s;
    write_timeline(s, o);
    write_reports(s, o);
    return s.str();
}

SimConfig instant() {
    SimConfig c;
    c.link = LinkModel::ideal();
    c.search_latency = Nanos{0};
    c.edge_cost_per_candidate = Nanos{0};
    return c;
}

void check_additivity(const RunOutcome& o) {
    const auto& t = o.timing;
    CHECK(t.delta_initial == t.delta_ec + t.delta_cs + t.delta_ce);
    for (const auto& c : t.calls) {
        CHECK(c.round_trip() == c.delta_ec + c.delta_cs + c.delta_ce);
        if (c.delivered.count() > 0) CHECK(c.delivered == c.requested + c.round_trip());
    }
}

}  // namespace

TEST_CASE("default link budgets") {
    const LinkModel link;
    CHECK(link.uplink_latency(256) <= 1ms);
    CHECK(link.downlink_latency(100) <= 200ms);
    for (std::size_t n = 0; n < 300; ++n) {
        CHECK(link.uplink_latency(n) >= Nanos{0});
        CHECK(link.uplink_latency(n + 1) >= link.uplink_latency(n));
        CHECK(link.downlink_latency(n + 1) >= link.downlink_latency(n));
    }
    CHECK(LinkModel::ideal().downlink_latency(100) == Nanos{0});
    LinkModel bad;
    bad.downlink_fixed = Nanos{-1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("initial overhead adds up to three seconds") {
    const auto sc = scenario::probability_growth();
    SimConfig cfg;
    cfg.link = {1ms, Nanos{0}, 199ms, Nanos{0}};
    cfg.search_latency = 2800ms;
    const auto o = run_stream(sc.live, sc.store, cfg);
    CHECK(o.timing.delta_ec == 1ms);
    CHECK(o.timing.delta_cs == 2800ms);
    CHECK(o.timing.delta_ce == 199ms);
    CHECK(o.timing.delta_initial == 3000ms);
    check_additivity(o);
}

TEST_CASE("zero latency simulation equals stepping the tracker directly") {
    const auto sc = scenario::probability_growth();
    const auto cfg = instant();
    const auto o = run_stream(sc.live, sc.store, cfg);

    const dsp::SignalWindow w0(std::span<const double>(sc.live.samples).first(256));
    auto t = edge::TrackerState::init(search::sliding_search(w0, sc.store, cfg.search), sc.store, cfg.tracker);
    REQUIRE(o.reports.size() == 5);
    for (std::size_t k = 1; k <= 5; ++k) {
        const auto r = t.step(testing::window(sc.live.samples, 256 * k), sc.store);
        const auto& s = o.reports[k - 1];
        CHECK(s.iteration == r.iteration);
        CHECK(s.alive == r.alive);
        CHECK(s.removed_dissimilar == r.removed_dissimilar);
        CHECK(s.removed_exhausted == r.removed_exhausted);
        CHECK(s.p_anomaly == r.p_anomaly);
        CHECK(s.classification == r.classification);
        CHECK(s.cloud_call == r.cloud_call);
    }
    CHECK(o.predicted_anomaly() == (edge::classify(t) == edge::Classification::anomaly_predicted));
}

TEST_CASE("background re-search overlaps continued tracking") {
    const auto sc = scenario::early_collapse();
    const SimConfig cfg;
    const auto o = run_stream(sc.live, sc.store, cfg);
    check_additivity(o);
    REQUIRE(o.timing.calls.size() >= 2);
    const auto& call = o.timing.calls[1];
    CHECK_FALSE(call.initial);
    CHECK(call.reason == edge::CloudCallReason::threshold);
    CHECK(call.window == 6);
    REQUIRE(call.applied.has_value());
    CHECK(call.candidates > 0);

    const auto needed = static_cast<std::size_t>(std::ceil(std::chrono::duration<double>(call.delta_cs + call.delta_ce).count()));
    CHECK(call.old_set_iterations >= needed);

    // the timeline shows old-set steps between the request and the swap
    std::size_t req = 0, swap = 0, steps_between = 0;
    for (std::size_t i = 0; i < o.timeline.size(); ++i) {
        const auto& e = o.timeline[i];
        if (e.kind == "cloud_call_request" && req == 0) req = i;
        if (e.kind == "swap_in" && req != 0 && swap == 0) swap = i;
    }
    REQUIRE(req > 0);
    REQUIRE(swap > req);
    bool saw_search_done = false;
    for (std::size_t i = req; i < swap; ++i) {
        if (o.timeline[i].kind == "track_step") ++steps_between;
        if (o.timeline[i].kind == "search_done") saw_search_done = true;
    }
    CHECK(saw_search_done);
    CHECK(steps_between == call.old_set_iterations);
}

TEST_CASE("causality: sets are applied on whole-second boundaries after delivery") {
    for (auto sc : {scenario::probability_growth(), scenario::early_collapse()}) {
        const auto o = run_stream(sc.live, sc.store, SimConfig{});
        for (const auto& c : o.timing.calls) {
            if (!c.applied) continue;
            CHECK(*c.applied >= c.delivered);
            CHECK(c.applied->count() % 1'000'000'000 == 0);
            CHECK(*c.applied - c.delivered < 1s);
        }
        // timeline is ordered in simulated time
        for (std::size_t i = 1; i < o.timeline.size(); ++i) CHECK(o.timeline[i - 1].t <= o.timeline[i].t);
    }
}

TEST_CASE("run_stream is deterministic across modes") {
    const auto sc = scenario::early_collapse();
    SimConfig cfg;
    const auto a = timeline_text(run_stream(sc.live, sc.store, cfg));
    CHECK(a == timeline_text(run_stream(sc.live, sc.store, cfg)));
    cfg.search.threads = 4;
    CHECK(a == timeline_text(run_stream(sc.live, sc.store, cfg)));
    cfg.concurrent_search = true;
    CHECK(a == timeline_text(run_stream(sc.live, sc.store, cfg)));
}

TEST_CASE("input errors") {
    const auto sc = scenario::probability_growth();
    auto short_live = sc.live;
    short_live.samples.resize(511);
    CHECK_THROWS_AS(run_stream(short_live, sc.store, SimConfig{}), SimulationError);
    CHECK_THROWS_AS(run_stream(sc.live, mdb::MdbStore{}, SimConfig{}), SimulationError);
}

TEST_CASE("evaluate_batch refuses overlap with the store") {
    const auto sc = scenario::probability_growth();
    std::vector<mdb::SourceSignal> corpus{sc.store.signals()[3]};
    corpus[0].id = 555;
    CHECK_THROWS_AS(evaluate_batch(corpus, sc.store, SimConfig{}), SimulationError);
}

TEST_CASE("evaluate_batch tables") {
    mdb::SynthParams sp;
    sp.duration_s = 40.0;
    const auto store = mdb::MdbStore::from_signals(mdb::synth_corpus(5, 30, 8, "seizure", sp));
    mdb::SynthParams lp;
    lp.first_id = 1000;
    lp.duration_s = 20.0;
    lp.onset_min_s = 2.0;
    lp.onset_max_s = 4.0;
    lp.span_min_s = 30.0;
    lp.span_max_s = 30.0;
    const auto live = mdb::synth_corpus(6, 3, 3, "seizure", lp);
    const auto table = evaluate_batch(live, store, SimConfig{}, 4, 1);
    REQUIRE(table.rows.size() == 3);  // two batches and the mean
    CHECK(table.rows[0].n == 4);
    CHECK(table.rows[1].n == 2);
    CHECK(table.rows[2].batch == "mean");
    CHECK(table.outcomes.size() == 6);
    CHECK(table.accuracy >= 0.0);
    CHECK(table.accuracy <= 1.0);
    std::size_t correct = 0;
    for (const auto& o : table.outcomes) {
        correct += o.predicted_anomaly() == o.ground_truth_anomalous;
        CHECK(o.horizon_reports <= o.reports.size());
        // lead time present iff there is an onset and the prediction came first
        const bool expect_lead = o.onset_s && o.first_prediction_s && *o.first_prediction_s < *o.onset_s;
        CHECK(o.lead_time_s.has_value() == expect_lead);
        check_additivity(o);
    }
    CHECK(table.accuracy == doctest::Approx(static_cast<double>(correct) / 6.0));

    std::ostringstream csv;
    write_accuracy_csv(csv, table);
    CHECK(csv.str().rfind("batch,anomaly_kind,n,accuracy,false_positive_rate,mean_lead_time_s\n", 0) == 0);
}

TEST_CASE("evaluation horizon counts tracker cloud calls") {
    const auto sc = scenario::early_collapse();
    SimConfig cfg;
    cfg.eval_cloud_calls = 0;
    const auto o = run_stream(sc.live, sc.store, cfg);
    // the horizon closes when the first tracker call is requested (after the third step)
    CHECK(o.horizon_reports == 3);
    cfg.eval_cloud_calls = -1;
    CHECK(run_stream(sc.live, sc.store, cfg).horizon_reports == o.reports.size());
}

TEST_CASE("predict_at_offsets") {
    mdb::SynthParams p;
    p.duration_s = 40.0;
    p.onset_min_s = 20.0;
    p.onset_max_s = 20.0;
    const auto live = mdb::synth_corpus(8, 0, 1, "seizure", p).front();
    const auto store = mdb::MdbStore::from_signals(mdb::synth_corpus(9, 20, 5, "seizure"));
    const auto preds = predict_at_offsets(live, {5.0, 10.0, 19.0, 30.0}, store, SimConfig{});
    REQUIRE(preds.size() == 4);
    CHECK(preds[0].evaluated);
    CHECK(preds[1].evaluated);
    CHECK_FALSE(preds[2].evaluated);
    CHECK_FALSE(preds[3].evaluated);
    CHECK_THROWS_AS(predict_at_offsets(mdb::synth_corpus(8, 1, 0, "seizure").front(), {5.0}, store, SimConfig{}),
                    std::invalid_argument);
}

TEST_CASE("timeline JSON lines") {
    const TimelineEvent e{1500ms, "uplink", {{"window", 0}}};
    const auto j = nlohmann::json::parse(to_json_line(e));
    CHECK(j["t_sim_ms"] == 1500.0);
    CHECK(j["kind"] == "uplink");
    CHECK(j["detail"]["window"] == 0);
}
