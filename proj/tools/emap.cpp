// emap: command-line front end for corpus generation, store building, search,
// stream simulation and batch evaluation.

#include "emap/config.hpp"
#include "emap/orchestrator.hpp"
#include "emap/synth.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

using namespace emap;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit : int { kOk = 0, kBadArgs = 2, kDataError = 3, kBudget = 4 };

// Raised when --strict is set and a real-time budget is missed.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool strict = false;
    std::vector<std::string> overrides;
};

RunConfig load_config(const Globals& g) {
    RunConfig cfg = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    cfg.validate();
    cfg.sim.search.threads = cfg.threads;
    return cfg;
}

fs::path pick(const std::string& flag, const std::string& from_config, const char* what) {
    const auto& p = flag.empty() ? from_config : flag;
    if (p.empty()) throw ConfigError(fmt::format("no {} given (flag or config path)", what));
    return p;
}

// ---- corpus files: signal_<id>.csv with a JSON sidecar of the same stem ----

struct Sidecar {
    mdb::SignalId id = 0;
    int sample_rate_hz = dsp::kBaseRateHz;
    std::string dataset_tag;
    std::vector<mdb::AnomalySpan> spans;
};

void write_signal(const fs::path& dir, const mdb::SourceSignal& s) {
    const auto stem = fmt::format("signal_{}", s.id);
    std::ofstream csv(dir / (stem + ".csv"));
    csv << "amplitude_uv\n";
    for (double v : s.samples) csv << fmt::format("{:.17g}\n", v);
    json spans = json::array();
    for (const auto& sp : s.anomaly_spans) spans.push_back({sp.start, sp.end, sp.kind});
    json side{{"id", s.id}, {"sample_rate_hz", dsp::kBaseRateHz}, {"dataset_tag", s.dataset_tag}, {"spans", spans}};
    std::ofstream(dir / (stem + ".json")) << side.dump(2) << '\n';
    if (!csv) throw std::runtime_error(fmt::format("cannot write {}", (dir / (stem + ".csv")).string()));
}

std::optional<Sidecar> read_sidecar(const fs::path& csv) {
    auto side = csv;
    side.replace_extension(".json");
    if (!fs::exists(side)) return std::nullopt;
    try {
        std::ifstream in(side);
        const auto j = json::parse(in);
        Sidecar s;
        s.id = j.at("id").get<mdb::SignalId>();
        s.sample_rate_hz = j.value("sample_rate_hz", dsp::kBaseRateHz);
        s.dataset_tag = j.value("dataset_tag", std::string{});
        for (const auto& sp : j.value("spans", json::array()))
            s.spans.push_back({sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>(), sp.at(2).get<std::string>()});
        return s;
    } catch (const json::exception& e) {
        throw mdb::DataError(fmt::format("{}: {}", side.string(), e.what()));
    }
}

mdb::SourceSignal load_signal(const fs::path& csv, int default_rate, mdb::SignalId default_id) {
    const auto side = read_sidecar(csv);
    if (side) return mdb::ingest_csv(csv, side->sample_rate_hz, side->spans, side->dataset_tag, side->id);
    return mdb::ingest_csv(csv, default_rate, {}, csv.parent_path().filename().string(), default_id);
}

std::vector<mdb::SourceSignal> load_dir(const fs::path& dir, int default_rate) {
    if (!fs::is_directory(dir)) throw mdb::DataError(fmt::format("{} is not a directory", dir.string()));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw mdb::DataError(fmt::format("no .csv files in {}", dir.string()));
    std::vector<mdb::SourceSignal> out;
    for (std::size_t i = 0; i < files.size(); ++i) out.push_back(load_signal(files[i], default_rate, static_cast<mdb::SignalId>(i)));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

dsp::SignalWindow cut_window(const mdb::SourceSignal& s, std::size_t k) {
    const std::size_t n = s.samples.size() / dsp::kWindowLen;
    if (n == 0) throw mdb::DataError(fmt::format("signal {} is shorter than one second", s.id));
    k = std::min(k, n - 1);
    return dsp::SignalWindow(std::span<const double>(s.samples).subspan(k * dsp::kWindowLen, dsp::kWindowLen), k);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("not a number in list: '{}'", item));
        }
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", p.string()));
    return out;
}

double ms(sim::Nanos n) { return std::chrono::duration<double, std::milli>(n).count(); }

void check_budgets(const RunConfig& cfg, const std::vector<sim::RunOutcome>& outcomes) {
    const auto up = cfg.sim.link.uplink_latency(dsp::kWindowLen);
    const auto down = cfg.sim.link.downlink_latency(cfg.sim.search.top_k);
    if (up > std::chrono::milliseconds(1))
        throw BudgetError(fmt::format("uplink of one window takes {:.3f} ms, over the 1 ms budget", ms(up)));
    if (down > std::chrono::milliseconds(200))
        throw BudgetError(fmt::format("downlink of {} signals takes {:.1f} ms, over the 200 ms budget",
                                      cfg.sim.search.top_k, ms(down)));
    for (const auto& o : outcomes)
        for (const auto& r : o.reports)
            if (r.step_micros > 1'000'000)
                throw BudgetError(fmt::format("stream {}: step {} took {} us, over the one-second budget", o.live_id,
                                              r.iteration, r.step_micros));
}

// ---- subcommands ----

struct SynthOpts {
    std::string out, corpus = "store", kind;
    std::optional<int> normal, anomalous;
};

int cmd_synth(const RunConfig& cfg, const SynthOpts& o) {
    auto settings = o.corpus == "eval" ? cfg.eval_corpus : cfg.store_corpus;
    const auto seed = o.corpus == "eval" ? cfg.eval_seed() : cfg.store_seed();
    if (o.normal) settings.n_normal = *o.normal;
    if (o.anomalous) settings.n_anomalous = *o.anomalous;
    if (!o.kind.empty()) settings.kind = o.kind;
    const fs::path dir = pick(o.out, o.corpus == "eval" ? cfg.corpus_dir : "", "output directory");
    fs::create_directories(dir);
    const auto corpus = mdb::synth_raw_corpus(seed, settings.n_normal, settings.n_anomalous, settings.kind, settings.params);
    for (const auto& s : corpus) write_signal(dir, s);
    fmt::print("wrote {} signals to {}: {} normal, {} anomalous ({}), {:.1f} s each at {} Hz, seed {}\n", corpus.size(),
               dir.string(), settings.n_normal, settings.n_anomalous, settings.kind, settings.params.duration_s,
               dsp::kBaseRateHz, seed);
    return kOk;
}

struct BuildOpts {
    std::string in, out;
    int rate = dsp::kBaseRateHz;
};

int cmd_build_mdb(const RunConfig& cfg, const BuildOpts& o) {
    auto signals = load_dir(o.in, o.rate);
    const auto store = mdb::build_store(std::move(signals), pick(o.out, cfg.store_dir, "store directory"));
    fmt::print("store {}: {} signals, {} slices ({} normal, {} anomalous), {} samples discarded\n",
               pick(o.out, cfg.store_dir, "store directory").string(), store.signals().size(), store.num_slices(),
               store.count_label(mdb::Label::normal), store.count_label(mdb::Label::anomalous), store.discarded_samples());
    return kOk;
}

struct SearchOpts {
    std::string store, input, out;
    std::size_t window = 0;
    int rate = dsp::kBaseRateHz;
    std::optional<double> alpha, delta;
    std::optional<std::size_t> top_k;
    bool exhaustive = false, both = false;
};

json result_json(const char* mode, const search::SearchResult& r, const mdb::MdbStore& store) {
    json c = json::array();
    for (const auto& x : r.candidates) {
        const auto& e = store.entry(x.set_id);
        c.push_back({{"set_id", x.set_id},
                     {"omega", x.omega},
                     {"beta", x.beta},
                     {"parent_id", e.parent_id},
                     {"parent_offset", e.parent_offset},
                     {"label", static_cast<int>(e.label)}});
    }
    return {{"mode", mode},
            {"comparisons_made", r.comparisons_made},
            {"slices_scanned", r.slices_scanned},
            {"degenerate_windows", r.degenerate_windows},
            {"matches_found", r.matches_found},
            {"truncated", r.truncated},
            {"mean_omega", search::mean_omega(r)},
            {"candidates", c}};
}

int cmd_search(RunConfig cfg, const SearchOpts& o) {
    if (o.alpha) cfg.sim.search.alpha = *o.alpha;
    if (o.delta) cfg.sim.search.delta = *o.delta;
    if (o.top_k) cfg.sim.search.top_k = *o.top_k;
    cfg.sim.search.validate();
    const auto store = mdb::MdbStore::open(pick(o.store, cfg.store_dir, "store directory"));
    const auto input = cut_window(load_signal(o.input, o.rate, 0), o.window);

    json doc = json::object();
    std::optional<search::SearchResult> ex, sl;
    if (o.exhaustive || o.both) {
        ex = search::exhaustive_search(input, store, cfg.sim.search);
        fmt::print("exhaustive: comparisons={} candidates={} mean_omega={:.6f}\n", ex->comparisons_made,
                   ex->candidates.size(), search::mean_omega(*ex));
        doc["exhaustive"] = result_json("exhaustive", *ex, store);
    }
    if (!o.exhaustive || o.both) {
        sl = search::sliding_search(input, store, cfg.sim.search);
        fmt::print("sliding: comparisons={} candidates={} mean_omega={:.6f}\n", sl->comparisons_made,
                   sl->candidates.size(), search::mean_omega(*sl));
        doc["sliding"] = result_json("sliding", *sl, store);
    }
    if (ex && sl && sl->comparisons_made > 0) {
        const double ratio = static_cast<double>(ex->comparisons_made) / static_cast<double>(sl->comparisons_made);
        const double parity = search::mean_omega(*ex) > 0 ? search::mean_omega(*sl) / search::mean_omega(*ex) : 0.0;
        fmt::print("ratio={:.2f} omega_parity={:.4f}\n", ratio, parity);
        doc["comparison_ratio"] = ratio;
        doc["omega_parity"] = parity;
    }
    if (!o.out.empty()) open_out(o.out) << doc.dump(2) << '\n';
    return kOk;
}

struct SimulateOpts {
    std::string store, live, out;
    int rate = dsp::kBaseRateHz;
};

json outcome_json(const sim::RunOutcome& o) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json calls = json::array();
    for (const auto& c : o.timing.calls)
        calls.push_back({{"initial", c.initial},
                         {"window", c.window},
                         {"reason", c.reason ? json(edge::to_string(*c.reason)) : json(nullptr)},
                         {"requested_ms", ms(c.requested)},
                         {"delivered_ms", ms(c.delivered)},
                         {"applied_ms", c.applied ? json(ms(*c.applied)) : json(nullptr)},
                         {"candidates", c.candidates},
                         {"old_set_iterations", c.old_set_iterations}});
    return {{"live_id", o.live_id},
            {"ground_truth_anomalous", o.ground_truth_anomalous},
            {"onset_s", opt(o.onset_s)},
            {"classification", edge::to_string(o.classification)},
            {"first_prediction_s", opt(o.first_prediction_s)},
            {"lead_time_s", opt(o.lead_time_s)},
            {"iterations", o.reports.size()},
            {"horizon_reports", o.horizon_reports},
            {"cloud_calls", o.cloud_calls},
            {"delta_ec_ms", ms(o.timing.delta_ec)},
            {"delta_cs_ms", ms(o.timing.delta_cs)},
            {"delta_ce_ms", ms(o.timing.delta_ce)},
            {"delta_initial_ms", ms(o.timing.delta_initial)},
            {"calls", calls}};
}

int cmd_simulate(const RunConfig& cfg, const SimulateOpts& o, bool strict) {
    const auto store = mdb::MdbStore::open(pick(o.store, cfg.store_dir, "store directory"));
    const auto live = load_signal(o.live, o.rate, 0);
    const auto outcome = sim::run_stream(live, store, cfg.sim);
    const fs::path dir = pick(o.out, cfg.out_dir, "output directory");
    fs::create_directories(dir);
    {
        auto t = open_out(dir / "timeline.jsonl");
        sim::write_timeline(t, outcome);
        auto r = open_out(dir / "reports.jsonl");
        sim::write_reports(r, outcome);
        open_out(dir / "outcome.json") << outcome_json(outcome).dump(2) << '\n';
    }
    fmt::print("stream {}: {} ({} iterations, {} cloud calls, initial overhead {:.1f} ms){}\n", outcome.live_id,
               edge::to_string(outcome.classification), outcome.reports.size(), outcome.cloud_calls,
               ms(outcome.timing.delta_initial),
               outcome.lead_time_s ? fmt::format(", lead time {:.1f} s", *outcome.lead_time_s) : std::string());
    if (strict) check_budgets(cfg, {outcome});
    return kOk;
}

struct EvaluateOpts {
    std::string store, corpus, out, offsets_out;
    std::string offsets = "2,4,8";
    int rate = dsp::kBaseRateHz;
};

int cmd_evaluate(const RunConfig& cfg, const EvaluateOpts& o, bool strict) {
    const auto store = mdb::MdbStore::open(pick(o.store, cfg.store_dir, "store directory"));
    const auto corpus = load_dir(pick(o.corpus, cfg.corpus_dir, "corpus directory"), o.rate);
    const auto table = sim::evaluate_batch(corpus, store, cfg.sim, cfg.batch_size, cfg.seed);
    std::ostringstream csv;
    sim::write_accuracy_csv(csv, table);
    if (o.out.empty()) fmt::print("{}", csv.str());
    else open_out(o.out) << csv.str();
    fmt::print("accuracy={:.4f} false_positive_rate={:.4f} sensitivity={:.4f} streams={}\n", table.accuracy,
               table.false_positive_rate, table.sensitivity, corpus.size());

    if (!o.offsets_out.empty()) {
        const auto offsets = parse_list(o.offsets);
        std::vector<std::size_t> evaluated(offsets.size()), predicted(offsets.size());
        for (const auto& s : corpus) {
            if (!s.is_anomalous()) continue;
            const auto p = sim::predict_at_offsets(s, offsets, store, cfg.sim);
            for (std::size_t i = 0; i < p.size(); ++i) {
                evaluated[i] += p[i].evaluated;
                predicted[i] += p[i].evaluated && p[i].predicted;
            }
        }
        auto out = open_out(o.offsets_out);
        out << "offset_s,n_evaluated,accuracy\n";
        for (std::size_t i = 0; i < offsets.size(); ++i)
            out << fmt::format("{},{},{}\n", offsets[i], evaluated[i],
                               evaluated[i] ? fmt::format("{:.4f}", static_cast<double>(predicted[i]) / evaluated[i]) : "");
    }
    if (strict) check_budgets(cfg, table.outcomes);
    return kOk;
}

struct SweepOpts {
    std::string store, corpus, out;
    std::vector<std::string> inputs;
    std::string alphas = "0.001,0.002,0.004,0.008,0.016,0.05,0.1";
    std::size_t window = 10;
    int rate = dsp::kBaseRateHz;
};

int cmd_sweep_alpha(const RunConfig& cfg, const SweepOpts& o) {
    const auto store = mdb::MdbStore::open(pick(o.store, cfg.store_dir, "store directory"));
    std::vector<mdb::SourceSignal> sources;
    if (!o.corpus.empty()) sources = load_dir(o.corpus, o.rate);
    for (std::size_t i = 0; i < o.inputs.size(); ++i)
        sources.push_back(load_signal(o.inputs[i], o.rate, static_cast<mdb::SignalId>(i)));
    if (sources.empty()) throw ConfigError("sweep-alpha needs --corpus or --input");
    std::vector<dsp::SignalWindow> windows;
    for (const auto& s : sources) windows.push_back(cut_window(s, o.window));
    const auto rows = search::alpha_sweep(windows, store, parse_list(o.alphas), cfg.sim.search);
    std::ostringstream csv;
    search::write_sweep_csv(csv, rows);
    if (o.out.empty()) fmt::print("{}", csv.str());
    else {
        open_out(o.out) << csv.str();
        fmt::print("wrote {} rows for {} query windows to {}\n", rows.size(), windows.size(), o.out);
    }
    return kOk;
}

struct BenchOpts {
    std::string store;
    int repeats = 20000;
};

int cmd_bench(const RunConfig& cfg, const BenchOpts& o, bool strict) {
    using clock = std::chrono::steady_clock;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> d(0.0, 5.0);
    std::vector<double> a(dsp::kWindowLen), b(dsp::kWindowLen);
    for (auto& v : a) v = d(rng);
    for (auto& v : b) v = d(rng);

    volatile double sink = 0.0;
    auto t0 = clock::now();
    for (int i = 0; i < o.repeats; ++i) sink = sink + dsp::area_between(a, b);
    const double area_ns = std::chrono::duration<double, std::nano>(clock::now() - t0).count() / o.repeats;
    t0 = clock::now();
    for (int i = 0; i < o.repeats; ++i) sink = sink + dsp::xcorr(a, b);
    const double xcorr_ns = std::chrono::duration<double, std::nano>(clock::now() - t0).count() / o.repeats;
    fmt::print("area_between: {:.0f} ns/window, {} ops\n", area_ns, dsp::area_op_count().total());
    fmt::print("xcorr:        {:.0f} ns/window, {} ops\n", xcorr_ns, dsp::xcorr_op_count().total());
    fmt::print("speedup: measured {:.2f}x, op-count model {:.2f}x\n", xcorr_ns / area_ns,
               static_cast<double>(dsp::xcorr_op_count().total()) / dsp::area_op_count().total());

    mdb::MdbStore store;
    if (!o.store.empty() || !cfg.store_dir.empty()) {
        store = mdb::MdbStore::open(pick(o.store, cfg.store_dir, "store directory"));
    } else {
        const auto& sc = cfg.store_corpus;
        store = mdb::MdbStore::from_signals(mdb::synth_corpus(cfg.store_seed(), sc.n_normal, sc.n_anomalous, sc.kind, sc.params));
    }
    const auto& probe_signal = store.signals().back();
    const auto query = cut_window(probe_signal, probe_signal.samples.size() / dsp::kWindowLen / 2);

    t0 = clock::now();
    const auto ex = search::exhaustive_search(query, store, cfg.sim.search);
    const double ex_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    t0 = clock::now();
    const auto sl = search::sliding_search(query, store, cfg.sim.search);
    const double sl_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    fmt::print("search over {} slices: exhaustive {:.1f} ms ({} comparisons), sliding {:.1f} ms ({} comparisons), "
               "time ratio {:.2f}x\n",
               store.num_slices(), ex_ms, ex.comparisons_made, sl_ms, sl.comparisons_made, ex_ms / sl_ms);

    search::SearchResult set;
    for (const auto& e : store.index()) {
        if (set.candidates.size() == 100) break;
        set.candidates.push_back({e.set_id, 0.9, 0});
    }
    auto tracker = edge::TrackerState::init(set, store, cfg.sim.tracker);
    t0 = clock::now();
    const auto r = tracker.step(query, store);
    const double step_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    fmt::print("edge step over {} candidates: {:.3f} ms\n", r.evaluations.size(), step_ms);
    if (strict && step_ms > 1000.0) throw BudgetError(fmt::format("edge step took {:.1f} ms", step_ms));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emap: cloud-edge EEG anomaly prediction simulator"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may also follow the subcommand
    Globals g;
    app.add_option("--config", g.config_path, "Config file (key = value lines)");
    app.add_option("--seed", g.seed, "Top-level seed");
    app.add_option("--threads", g.threads, "Worker threads for the cloud search")->check(CLI::PositiveNumber);
    app.add_flag("--strict", g.strict, "Fail with exit code 4 when a real-time budget is missed");
    app.add_option("--set", g.overrides, "Override a config key (key=value); repeatable");

    SynthOpts synth;
    auto* c_synth = app.add_subcommand("synth", "Write a seeded synthetic corpus as CSV files with span sidecars");
    c_synth->add_option("--out", synth.out, "Output directory");
    c_synth->add_option("--corpus", synth.corpus, "Which configured corpus to generate")->check(CLI::IsMember({"store", "eval"}));
    c_synth->add_option("--normal", synth.normal, "Number of normal signals");
    c_synth->add_option("--anomalous", synth.anomalous, "Number of anomalous signals");
    c_synth->add_option("--kind", synth.kind, "Anomaly kind (seizure, encephalopathy, stroke)");

    BuildOpts build;
    auto* c_build = app.add_subcommand("build-mdb", "Ingest CSV signals and build the signal-set store");
    c_build->add_option("--in", build.in, "Directory of CSV signals")->required();
    c_build->add_option("--out", build.out, "Store directory");
    c_build->add_option("--rate", build.rate, "Sample rate for CSVs without a sidecar")->check(CLI::PositiveNumber);

    SearchOpts srch;
    auto* c_search = app.add_subcommand("search", "Search the store for one second of an input signal");
    c_search->add_option("--store", srch.store, "Store directory");
    c_search->add_option("--input", srch.input, "Input CSV")->required();
    c_search->add_option("--window", srch.window, "Which second of the input to search for");
    c_search->add_option("--rate", srch.rate, "Input sample rate when there is no sidecar")->check(CLI::PositiveNumber);
    c_search->add_option("--alpha", srch.alpha, "Step-size constant");
    c_search->add_option("--delta", srch.delta, "Correlation threshold");
    c_search->add_option("--top-k", srch.top_k, "Result size");
    c_search->add_flag("--exhaustive", srch.exhaustive, "Visit every offset instead of sliding");
    c_search->add_flag("--both", srch.both, "Run both searches and report the comparison ratio");
    c_search->add_option("--out", srch.out, "Write the result as JSON");

    SimulateOpts simo;
    auto* c_sim = app.add_subcommand("simulate", "Run one live stream through the cloud-edge simulation");
    c_sim->add_option("--store", simo.store, "Store directory");
    c_sim->add_option("--live", simo.live, "Live stream CSV")->required();
    c_sim->add_option("--out", simo.out, "Output directory for timeline.jsonl, reports.jsonl, outcome.json");
    c_sim->add_option("--rate", simo.rate, "Live sample rate when there is no sidecar")->check(CLI::PositiveNumber);

    EvaluateOpts eval;
    auto* c_eval = app.add_subcommand("evaluate", "Classify a corpus of live streams and write the accuracy table");
    c_eval->add_option("--store", eval.store, "Store directory");
    c_eval->add_option("--corpus", eval.corpus, "Directory of live stream CSVs");
    c_eval->add_option("--out", eval.out, "Accuracy CSV (stdout when omitted)");
    c_eval->add_option("--offsets", eval.offsets, "Comma-separated seconds before onset");
    c_eval->add_option("--offsets-out", eval.offsets_out, "Write per-offset prediction accuracy here");
    c_eval->add_option("--rate", eval.rate, "Sample rate for CSVs without a sidecar")->check(CLI::PositiveNumber);

    SweepOpts sweep;
    auto* c_sweep = app.add_subcommand("sweep-alpha", "Comparisons, matches and mean omega across step-size constants");
    c_sweep->add_option("--store", sweep.store, "Store directory");
    c_sweep->add_option("--corpus", sweep.corpus, "Directory of query signals");
    c_sweep->add_option("--input", sweep.inputs, "Query CSV; repeatable");
    c_sweep->add_option("--alphas", sweep.alphas, "Comma-separated alpha values");
    c_sweep->add_option("--window", sweep.window, "Which second of each query signal to use");
    c_sweep->add_option("--out", sweep.out, "CSV output (stdout when omitted)");
    c_sweep->add_option("--rate", sweep.rate, "Sample rate for CSVs without a sidecar")->check(CLI::PositiveNumber);

    BenchOpts bench;
    auto* c_bench = app.add_subcommand("bench", "Wall-clock timings of the edge and cloud kernels");
    c_bench->add_option("--store", bench.store, "Store directory (synthesized from the config when omitted)");
    c_bench->add_option("--repeats", bench.repeats, "Kernel repetitions")->check(CLI::PositiveNumber);

    auto* c_config = app.add_subcommand("config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadArgs;
    }

    try {
        const RunConfig cfg = load_config(g);
        if (c_synth->parsed()) return cmd_synth(cfg, synth);
        if (c_build->parsed()) return cmd_build_mdb(cfg, build);
        if (c_search->parsed()) return cmd_search(cfg, srch);
        if (c_sim->parsed()) return cmd_simulate(cfg, simo, g.strict);
        if (c_eval->parsed()) return cmd_evaluate(cfg, eval, g.strict);
        if (c_sweep->parsed()) return cmd_sweep_alpha(cfg, sweep);
        if (c_bench->parsed()) return cmd_bench(cfg, bench, g.strict);
        if (c_config->parsed()) {
            fmt::print("{}", cfg.to_text());
            return kOk;
        }
    } catch (const BudgetError& e) {
        fmt::print(stderr, "budget violation: {}\n", e.what());
        return kBudget;
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kBadArgs;
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "invalid argument: {}\n", e.what());
        return kBadArgs;
    } catch (const mdb::DataError& e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return kDataError;
    } catch (const dsp::DegenerateSignalError& e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return kDataError;
    } catch (const sim::SimulationError& e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return kDataError;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return kOk;
}
