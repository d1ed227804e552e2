#include "emap/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace emap {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(fmt::format("{}: cannot parse '{}'", key, text));
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

// durations are written as decimal microseconds with up to three fraction digits
std::string fmt_micros(sim::Nanos t) {
    const auto ns = t.count();
    const auto whole = ns / 1000;
    const auto frac = ns % 1000;
    if (frac == 0) return std::to_string(whole);
    std::string f = fmt::format("{:03}", frac < 0 ? -frac : frac);
    while (f.back() == '0') f.pop_back();
    return fmt::format("{}{}.{}", ns < 0 ? "-" : "", whole < 0 ? -whole : whole, f);
}

sim::Nanos parse_micros(std::string_view key, std::string_view text) {
    const auto dot = text.find('.');
    const auto whole = parse_number<std::int64_t>(key, text.substr(0, dot));
    std::int64_t frac = 0;
    if (dot != std::string_view::npos) {
        auto digits = text.substr(dot + 1);
        if (digits.empty() || digits.size() > 3)
            throw ConfigError(fmt::format("{}: at most three fraction digits allowed in '{}'", key, text));
        frac = parse_number<std::int64_t>(key, digits);
        for (std::size_t i = digits.size(); i < 3; ++i) frac *= 10;
    }
    if (whole < 0) throw ConfigError(fmt::format("{}: durations must be non-negative", key));
    return sim::Nanos{whole * 1000 + frac};
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

#define EMAP_FIELD(KEY, EXPR, TO_TEXT, FROM_TEXT)                                                    \
    Field {                                                                                          \
        KEY, [](const RunConfig& c) { return TO_TEXT(c.EXPR); },                                     \
            [](RunConfig& c, std::string_view v) { c.EXPR = FROM_TEXT(KEY, v); }                     \
    }

std::string as_text(const std::string& s) { return s; }
std::string from_text(std::string_view, std::string_view v) { return std::string(v); }
std::string int_text(long long v) { return std::to_string(v); }
std::string uint_text(unsigned long long v) { return std::to_string(v); }
std::string bool_text(bool v) { return v ? "true" : "false"; }
double parse_real(std::string_view key, std::string_view v) { return parse_number<double>(key, v); }
int parse_int(std::string_view key, std::string_view v) { return parse_number<int>(key, v); }
std::size_t parse_size(std::string_view key, std::string_view v) { return parse_number<std::size_t>(key, v); }
unsigned parse_unsigned(std::string_view key, std::string_view v) { return parse_number<unsigned>(key, v); }
std::uint64_t parse_u64(std::string_view key, std::string_view v) { return parse_number<std::uint64_t>(key, v); }
std::string mode_text(sim::SearchLatencyMode m) { return m == sim::SearchLatencyMode::constant ? "constant" : "measured"; }
sim::SearchLatencyMode parse_mode(std::string_view key, std::string_view v) {
    if (v == "constant") return sim::SearchLatencyMode::constant;
    if (v == "measured") return sim::SearchLatencyMode::measured;
    throw ConfigError(fmt::format("{}: expected constant or measured, got '{}'", key, v));
}
std::string opt_size_text(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "none"; }
std::optional<std::size_t> parse_opt_size(std::string_view key, std::string_view v) {
    if (v == "none") return std::nullopt;
    return parse_number<std::size_t>(key, v);
}
std::int64_t parse_i64(std::string_view key, std::string_view v) { return parse_number<std::int64_t>(key, v); }

std::vector<Field> corpus_fields(const std::string& prefix, CorpusSettings RunConfig::*member) {
    std::vector<Field> out;
    auto add = [&](std::string name, auto get, auto set) {
        auto key = prefix + "." + name;
        out.push_back(Field{key, [member, get](const RunConfig& c) { return get(c.*member); },
                            [member, set, key](RunConfig& c, std::string_view v) { set(c.*member, key, v); }});
    };
    auto real = [&](std::string name, double mdb::SynthParams::*p) {
        add(std::move(name), [p](const CorpusSettings& s) { return fmt_double(s.params.*p); },
            [p](CorpusSettings& s, const std::string& k, std::string_view v) { s.params.*p = parse_real(k, v); });
    };
    using C = CorpusSettings;
    add("n_normal", [](const C& s) { return std::to_string(s.n_normal); },
        [](C& s, const std::string& k, std::string_view v) { s.n_normal = parse_int(k, v); });
    add("n_anomalous", [](const C& s) { return std::to_string(s.n_anomalous); },
        [](C& s, const std::string& k, std::string_view v) { s.n_anomalous = parse_int(k, v); });
    add("kind", [](const C& s) { return s.kind; },
        [](C& s, const std::string&, std::string_view v) { s.kind = std::string(v); });
    add("first_id", [](const C& s) { return std::to_string(s.params.first_id); },
        [](C& s, const std::string& k, std::string_view v) { s.params.first_id = parse_i64(k, v); });
    add("dataset_tag", [](const C& s) { return s.params.dataset_tag; },
        [](C& s, const std::string&, std::string_view v) { s.params.dataset_tag = std::string(v); });
    add("background_components", [](const C& s) { return std::to_string(s.params.background_components); },
        [](C& s, const std::string& k, std::string_view v) { s.params.background_components = parse_int(k, v); });
    using P = mdb::SynthParams;
    real("duration_s", &P::duration_s);
    real("background_rms_uv", &P::background_rms_uv);
    real("transient_rate_hz", &P::transient_rate_hz);
    real("transient_min_s", &P::transient_min_s);
    real("transient_max_s", &P::transient_max_s);
    real("transient_min_rms_uv", &P::transient_min_rms_uv);
    real("transient_max_rms_uv", &P::transient_max_rms_uv);
    real("transient_min_hz", &P::transient_min_hz);
    real("transient_max_hz", &P::transient_max_hz);
    real("transient_mimic_share", &P::transient_mimic_share);
    real("transient_mimic_jitter_hz", &P::transient_mimic_jitter_hz);
    real("onset_min_s", &P::onset_min_s);
    real("onset_max_s", &P::onset_max_s);
    real("span_min_s", &P::span_min_s);
    real("span_max_s", &P::span_max_s);
    real("carrier_jitter_hz", &P::carrier_jitter_hz);
    real("signature_gain", &P::signature_gain);
    return out;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f = {
            EMAP_FIELD("seed", seed, uint_text, parse_u64),
            EMAP_FIELD("threads", threads, uint_text, parse_unsigned),
            EMAP_FIELD("sample_rate_hz", sample_rate_hz, int_text, parse_int),
            EMAP_FIELD("window_len", window_len, uint_text, parse_size),
            EMAP_FIELD("slice_len", slice_len, uint_text, parse_size),
            EMAP_FIELD("search.alpha", sim.search.alpha, fmt_double, parse_real),
            EMAP_FIELD("search.delta", sim.search.delta, fmt_double, parse_real),
            EMAP_FIELD("search.top_k", sim.search.top_k, uint_text, parse_size),
            EMAP_FIELD("search.max_comparisons", sim.search.max_comparisons, opt_size_text, parse_opt_size),
            EMAP_FIELD("tracker.area_threshold", sim.tracker.area_threshold, fmt_double, parse_real),
            EMAP_FIELD("tracker.tracking_threshold", sim.tracker.tracking_threshold, uint_text, parse_size),
            EMAP_FIELD("tracker.trend_window", sim.tracker.trend_window, uint_text, parse_size),
            EMAP_FIELD("tracker.pa_floor", sim.tracker.pa_floor, fmt_double, parse_real),
            EMAP_FIELD("tracker.max_iterations_per_set", sim.tracker.max_iterations_per_set, uint_text, parse_size),
            EMAP_FIELD("link.uplink_fixed_us", sim.link.uplink_fixed, fmt_micros, parse_micros),
            EMAP_FIELD("link.uplink_per_sample_us", sim.link.uplink_per_sample, fmt_micros, parse_micros),
            EMAP_FIELD("link.downlink_fixed_us", sim.link.downlink_fixed, fmt_micros, parse_micros),
            EMAP_FIELD("link.downlink_per_signal_us", sim.link.downlink_per_signal, fmt_micros, parse_micros),
            EMAP_FIELD("sim.search_latency_mode", sim.latency_mode, mode_text, parse_mode),
            EMAP_FIELD("sim.search_latency_us", sim.search_latency, fmt_micros, parse_micros),
            EMAP_FIELD("sim.edge_cost_per_candidate_us", sim.edge_cost_per_candidate, fmt_micros, parse_micros),
            EMAP_FIELD("sim.eval_cloud_calls", sim.eval_cloud_calls, int_text, parse_int),
            EMAP_FIELD("sim.concurrent_search", sim.concurrent_search, bool_text, parse_bool),
            EMAP_FIELD("sim.report_wall_time", sim.report_wall_time, bool_text, parse_bool),
            EMAP_FIELD("eval.batch_size", batch_size, uint_text, parse_size),
            EMAP_FIELD("paths.store_dir", store_dir, as_text, from_text),
            EMAP_FIELD("paths.corpus_dir", corpus_dir, as_text, from_text),
            EMAP_FIELD("paths.out_dir", out_dir, as_text, from_text),
        };
        for (auto& c : corpus_fields("store_corpus", &RunConfig::store_corpus)) f.push_back(std::move(c));
        for (auto& c : corpus_fields("eval_corpus", &RunConfig::eval_corpus)) f.push_back(std::move(c));
        return f;
    }();
    return table;
}

#undef EMAP_FIELD

}  // namespace

RunConfig::RunConfig() {
    store_corpus.n_normal = 150;
    store_corpus.n_anomalous = 25;
    store_corpus.params.dataset_tag = "synthetic-store";

    eval_corpus.n_normal = 20;
    eval_corpus.n_anomalous = 20;
    eval_corpus.params.first_id = 100000;
    eval_corpus.params.dataset_tag = "synthetic-live";
    eval_corpus.params.duration_s = 30.0;
    eval_corpus.params.onset_min_s = 2.0;
    eval_corpus.params.onset_max_s = 5.0;
    eval_corpus.params.span_min_s = 30.0;
    eval_corpus.params.span_max_s = 30.0;
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(*this));
    return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(*this, trim(value));
            return;
        }
    }
    throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
        try {
            cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    out << to_text();
    if (!out) throw ConfigError(fmt::format("cannot write config {}", path.string()));
}

void RunConfig::validate() const {
    if (sample_rate_hz != dsp::kBaseRateHz || window_len != dsp::kWindowLen || slice_len != mdb::kSliceLen)
        throw ConfigError(fmt::format("sample_rate_hz, window_len and slice_len are fixed at {}, {} and {}",
                                      dsp::kBaseRateHz, dsp::kWindowLen, mdb::kSliceLen));
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (batch_size < 1) throw ConfigError("eval.batch_size must be at least 1");
    try {
        sim.validate();
        for (const auto* c : {&store_corpus, &eval_corpus}) {
            if (c->n_normal < 0 || c->n_anomalous < 0) throw std::invalid_argument("corpus counts must be non-negative");
            mdb::signature_for(c->kind);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_text() == b.to_text(); }

}  // namespace emap
