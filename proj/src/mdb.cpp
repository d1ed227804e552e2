#include "emap/mdb.hpp"

#include "emap/dsp.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace emap::mdb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string payload_name(SignalId id) { return fmt::format("signal_{}.f32", id); }

void write_payload(const fs::path& path, std::span<const double> samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    std::vector<std::uint32_t> words(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        words[i] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(samples[i])));
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
    if (!out) throw std::runtime_error(fmt::format("short write to {}", path.string()));
}

std::vector<double> read_payload(const fs::path& path, std::size_t expected_len) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open payload {}", path.string()));
    std::vector<std::uint32_t> words(expected_len);
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(expected_len * sizeof(std::uint32_t)));
    if (static_cast<std::size_t>(in.gcount()) != expected_len * sizeof(std::uint32_t) || in.peek() != EOF)
        throw DataError(fmt::format("payload {} does not hold {} samples", path.string(), expected_len));
    std::vector<double> samples(expected_len);
    for (std::size_t i = 0; i < expected_len; ++i)
        samples[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(words[i])));
    return samples;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace

std::string to_string(Label label) { return label == Label::anomalous ? "anomalous" : "normal"; }

std::optional<std::size_t> SourceSignal::onset_sample() const {
    if (anomaly_spans.empty()) return std::nullopt;
    return std::min_element(anomaly_spans.begin(), anomaly_spans.end(),
                            [](const auto& a, const auto& b) { return a.start < b.start; })
        ->start;
}

void SourceSignal::validate() const {
    std::vector<AnomalySpan> spans = anomaly_spans;
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& s = spans[i];
        if (s.start >= s.end || s.end > samples.size())
            throw DataError(fmt::format("signal {}: span [{}, {}) outside [0, {})", id, s.start, s.end, samples.size()));
        if (i > 0 && spans[i - 1].end > s.start)
            throw DataError(fmt::format("signal {}: spans [{}, {}) and [{}, {}) overlap", id, spans[i - 1].start,
                                        spans[i - 1].end, s.start, s.end));
    }
    for (double v : samples)
        if (!std::isfinite(v)) throw DataError(fmt::format("signal {}: non-finite sample", id));
}

std::pair<Label, std::string> label_for(const SourceSignal& signal, std::size_t offset) {
    for (const auto& span : signal.anomaly_spans)
        if (span.overlaps(offset, offset + kSliceLen)) return {Label::anomalous, span.kind};
    return {Label::normal, {}};
}

std::vector<SignalSet> slice_signal(const SourceSignal& signal, SetId first_set_id) {
    if (signal.samples.size() < kSliceLen)
        throw DataError(fmt::format("signal {} has {} samples, fewer than one {}-sample slice", signal.id,
                                    signal.samples.size(), kSliceLen));
    std::vector<SignalSet> sets;
    const std::size_t count = signal.samples.size() / kSliceLen;
    sets.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t offset = s * kSliceLen;
        auto [label, kind] = label_for(signal, offset);
        sets.push_back(SignalSet{
            first_set_id + static_cast<SetId>(s), signal.id, offset,
            std::vector<double>(signal.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                signal.samples.begin() + static_cast<std::ptrdiff_t>(offset + kSliceLen)),
            label, std::move(kind)});
    }
    return sets;
}

std::vector<double> read_csv_samples(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
    std::vector<double> samples;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto value = parse_double(text);
        if (!value) {
            if (!seen_content) {  // header
                seen_content = true;
                continue;
            }
            throw DataError(fmt::format("{}:{}: not a number: '{}'", path.string(), line_no, text));
        }
        seen_content = true;
        samples.push_back(*value);
    }
    if (samples.empty()) throw DataError(fmt::format("{}: no samples", path.string()));
    return samples;
}

std::vector<AnomalySpan> rescale_spans(const std::vector<AnomalySpan>& spans, int from_hz, int to_hz) {
    std::vector<AnomalySpan> out;
    out.reserve(spans.size());
    const double ratio = static_cast<double>(to_hz) / from_hz;
    for (const auto& s : spans)
        out.push_back({static_cast<std::size_t>(std::llround(static_cast<double>(s.start) * ratio)),
                       static_cast<std::size_t>(std::llround(static_cast<double>(s.end) * ratio)), s.kind});
    return out;
}

SourceSignal ingest_csv(const fs::path& path, int sample_rate_hz, std::vector<AnomalySpan> anomaly_spans,
                        std::string dataset_tag, SignalId id) {
    if (sample_rate_hz <= 0) throw std::invalid_argument("ingest_csv: sample rate must be positive");
    dsp::RawSignal raw{read_csv_samples(path), sample_rate_hz};
    for (const auto& s : anomaly_spans)
        if (s.start >= s.end || s.end > raw.samples.size())
            throw DataError(fmt::format("{}: span [{}, {}) outside [0, {})", path.string(), s.start, s.end,
                                        raw.samples.size()));

    const auto resampled = dsp::resample(raw, dsp::kBaseRateHz);
    auto spans = rescale_spans(anomaly_spans, sample_rate_hz, dsp::kBaseRateHz);
    for (auto& s : spans) s.end = std::min(s.end, resampled.samples.size());

    SourceSignal signal{id, dsp::apply_filter(dsp::emap_bandpass(), std::span<const double>(resampled.samples)),
                        std::move(spans), std::move(dataset_tag)};
    signal.validate();
    return signal;
}

MdbStore MdbStore::from_signals(std::vector<SourceSignal> signals) {
    MdbStore store;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        auto& sig = signals[i];
        sig.validate();
        if (!store.by_id_.emplace(sig.id, i).second)
            throw DataError(fmt::format("duplicate signal id {}", sig.id));
        for (double& v : sig.samples) v = round_to_float(v);
    }
    store.signals_ = std::move(signals);
    for (const auto& sig : store.signals_) {
        for (auto& set : slice_signal(sig, static_cast<SetId>(store.index_.size())))
            store.index_.push_back({set.set_id, set.parent_id, set.parent_offset, set.label, std::move(set.anomaly_kind)});
    }
    return store;
}

void MdbStore::write(const fs::path& dir) const {
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["sample_rate_hz"] = dsp::kBaseRateHz;
    manifest["slice_len"] = kSliceLen;
    manifest["num_slices"] = index_.size();
    json signals = json::array();
    for (const auto& sig : signals_) {
        json spans = json::array();
        for (const auto& s : sig.anomaly_spans) spans.push_back({s.start, s.end, s.kind});
        signals.push_back({{"id", sig.id},
                           {"file", payload_name(sig.id)},
                           {"length", sig.samples.size()},
                           {"dataset_tag", sig.dataset_tag},
                           {"spans", spans}});
        write_payload(dir / payload_name(sig.id), sig.samples);
    }
    manifest["signals"] = std::move(signals);

    json index = json::array();
    for (const auto& e : index_) {
        json kind = e.anomaly_kind.empty() ? json(nullptr) : json(e.anomaly_kind);
        index.push_back({e.set_id, e.parent_id, e.parent_offset, static_cast<int>(e.label), kind});
    }

    std::ofstream m(dir / "manifest.json", std::ios::trunc);
    m << manifest.dump(2) << '\n';
    std::ofstream ix(dir / "index.json", std::ios::trunc);
    ix << index.dump() << '\n';
    if (!m || !ix) throw std::runtime_error(fmt::format("cannot write store metadata in {}", dir.string()));
}

MdbStore MdbStore::open(const fs::path& dir) {
    const json manifest = read_json(dir / "manifest.json");
    const json index = read_json(dir / "index.json");
    MdbStore store;
    try {
        if (manifest.at("format_version").get<int>() != kFormatVersion)
            throw DataError(fmt::format("{}: unsupported format version", dir.string()));
        if (manifest.at("sample_rate_hz").get<int>() != dsp::kBaseRateHz ||
            manifest.at("slice_len").get<std::size_t>() != kSliceLen)
            throw DataError(fmt::format("{}: unexpected sample rate or slice length", dir.string()));
        for (const auto& js : manifest.at("signals")) {
            SourceSignal sig;
            sig.id = js.at("id").get<SignalId>();
            sig.dataset_tag = js.at("dataset_tag").get<std::string>();
            for (const auto& sp : js.at("spans"))
                sig.anomaly_spans.push_back({sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>(),
                                             sp.at(2).get<std::string>()});
            sig.samples = read_payload(dir / js.at("file").get<std::string>(), js.at("length").get<std::size_t>());
            sig.validate();
            if (!store.by_id_.emplace(sig.id, store.signals_.size()).second)
                throw DataError(fmt::format("{}: duplicate signal id {}", dir.string(), sig.id));
            store.signals_.push_back(std::move(sig));
        }
        for (const auto& je : index) {
            IndexEntry e;
            e.set_id = je.at(0).get<SetId>();
            e.parent_id = je.at(1).get<SignalId>();
            e.parent_offset = je.at(2).get<std::size_t>();
            e.label = je.at(3).get<int>() == 1 ? Label::anomalous : Label::normal;
            if (!je.at(4).is_null()) e.anomaly_kind = je.at(4).get<std::string>();
            if (e.set_id != static_cast<SetId>(store.index_.size()))
                throw DataError(fmt::format("{}: set ids are not dense at {}", dir.string(), e.set_id));
            const auto it = store.by_id_.find(e.parent_id);
            if (it == store.by_id_.end())
                throw DataError(fmt::format("{}: set {} references missing parent {}", dir.string(), e.set_id, e.parent_id));
            if (e.parent_offset + kSliceLen > store.signals_[it->second].samples.size())
                throw DataError(fmt::format("{}: set {} exceeds its parent", dir.string(), e.set_id));
            store.index_.push_back(std::move(e));
        }
        if (manifest.at("num_slices").get<std::size_t>() != store.index_.size())
            throw DataError(fmt::format("{}: manifest slice count disagrees with index", dir.string()));
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: malformed store metadata: {}", dir.string(), e.what()));
    }
    return store;
}

const IndexEntry& MdbStore::entry(SetId set_id) const {
    if (set_id < 0 || static_cast<std::size_t>(set_id) >= index_.size())
        throw std::out_of_range(fmt::format("no signal-set {}", set_id));
    return index_[static_cast<std::size_t>(set_id)];
}

const SourceSignal& MdbStore::parent(SignalId id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) throw std::out_of_range(fmt::format("no source signal {}", id));
    return signals_[it->second];
}

std::span<const double> MdbStore::slice_samples(SetId set_id) const {
    const auto& e = entry(set_id);
    return std::span<const double>(parent(e.parent_id).samples).subspan(e.parent_offset, kSliceLen);
}

SignalSet MdbStore::slice(SetId set_id) const {
    const auto& e = entry(set_id);
    const auto s = slice_samples(set_id);
    return {e.set_id, e.parent_id, e.parent_offset, {s.begin(), s.end()}, e.label, e.anomaly_kind};
}

std::optional<std::span<const double>> MdbStore::parent_samples(SignalId parent_id, std::size_t position,
                                                                std::size_t len) const {
    const auto& p = parent(parent_id).samples;
    if (position > p.size() || len > p.size() - position) return std::nullopt;
    return std::span<const double>(p).subspan(position, len);
}

std::optional<std::span<const double>> MdbStore::parent_segment(SetId set_id, std::size_t offset,
                                                                std::size_t len) const {
    const auto& e = entry(set_id);
    return parent_samples(e.parent_id, e.parent_offset + offset, len);
}

std::size_t MdbStore::count_label(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(index_.begin(), index_.end(), [label](const auto& e) { return e.label == label; }));
}

std::size_t MdbStore::discarded_samples() const {
    std::size_t n = 0;
    for (const auto& s : signals_) n += s.samples.size() % kSliceLen;
    return n;
}

MdbStore build_store(std::vector<SourceSignal> signals, const fs::path& out_dir) {
    auto store = MdbStore::from_signals(std::move(signals));
    store.write(out_dir);
    return store;
}

std::uint64_t fingerprint(std::span<const double> samples) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : samples) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) {
            h ^= (bits >> (8 * b)) & 0xffu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace emap::mdb
