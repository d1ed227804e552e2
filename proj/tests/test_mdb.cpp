#include "emap/mdb.hpp"
#include "emap/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

using namespace emap;
using namespace emap::mdb;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<double>& v, const std::string& header = {}) {
    std::ofstream out(p);
    if (!header.empty()) out << header << '\n';
    for (double x : v) out << x << '\n';
}

}  // namespace

TEST_CASE("slice_signal") {
    SUBCASE("3500 samples gives three slices") {
        const auto s = testing::signal(1, testing::random_samples(1, 3500));
        const auto sets = slice_signal(s, 10);
        REQUIRE(sets.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(sets[i].parent_offset == 1000 * i);
            CHECK(sets[i].set_id == static_cast<SetId>(10 + i));
            CHECK(sets[i].samples.size() == 1000);
            CHECK(sets[i].samples.front() == s.samples[1000 * i]);
            CHECK(sets[i].samples.back() == s.samples[1000 * i + 999]);
        }
    }
    SUBCASE("any overlap labels anomalous") {
        const auto s = testing::signal(2, testing::random_samples(2, 2000), {{1500, 1600, "seizure"}});
        const auto sets = slice_signal(s);
        REQUIRE(sets.size() == 2);
        CHECK(sets[0].label == Label::normal);
        CHECK(sets[0].anomaly_kind.empty());
        CHECK(sets[1].label == Label::anomalous);
        CHECK(sets[1].anomaly_kind == "seizure");
    }
    SUBCASE("span touching a boundary from the left does not overlap") {
        const auto s = testing::signal(3, testing::random_samples(3, 2000), {{900, 1000, "seizure"}});
        const auto sets = slice_signal(s);
        CHECK(sets[0].label == Label::anomalous);
        CHECK(sets[1].label == Label::normal);
    }
    SUBCASE("too short") { CHECK_THROWS_AS(slice_signal(testing::signal(4, std::vector<double>(999, 1.0))), DataError); }
}

TEST_CASE("ingest_csv") {
    testing::TempDir dir("emap-ingest");
    SUBCASE("256 Hz, no spans") {
        const auto p = dir.path() / "a.csv";
        write_lines(p, testing::random_samples(5, 2560), "amplitude");
        const auto s = ingest_csv(p, 256, {}, "t", 3);
        CHECK(s.samples.size() == 2560);
        CHECK(s.anomaly_spans.empty());
        CHECK(s.id == 3);
        CHECK(s.dataset_tag == "t");
    }
    SUBCASE("512 Hz halves span indices") {
        const auto p = dir.path() / "b.csv";
        write_lines(p, testing::random_samples(6, 5120));
        const auto s = ingest_csv(p, 512, {{1024, 2048, "stroke"}}, "t");
        CHECK(s.samples.size() == 2560);
        REQUIRE(s.anomaly_spans.size() == 1);
        CHECK(s.anomaly_spans[0] == AnomalySpan{512, 1024, "stroke"});
    }
    SUBCASE("output is resampled then filtered") {
        const auto p = dir.path() / "c.csv";
        std::ofstream out(p);
        out << "# comment\n";
        const auto x = testing::random_samples(7, 1200);
        for (double v : x) out << fmt::format("{}\n", v);
        out.close();
        const auto s = ingest_csv(p, 256, {}, "t");
        const auto want = oracle::convolve(dsp::emap_bandpass().taps(), x);
        REQUIRE(s.samples.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) REQUIRE(std::abs(s.samples[i] - want[i]) <= 1e-9);
    }
    SUBCASE("non-numeric row names the line") {
        const auto p = dir.path() / "d.csv";
        std::ofstream out(p);
        out << "value\n1.0\n2.0\nabc\n3.0\n";
        out.close();
        try {
            (void)ingest_csv(p, 256, {}, "t");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(":4:") != std::string::npos);
        }
    }
    SUBCASE("span out of range") {
        const auto p = dir.path() / "e.csv";
        write_lines(p, testing::random_samples(8, 1000));
        CHECK_THROWS_AS(ingest_csv(p, 256, {{900, 1200, "x"}}, "t"), DataError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(ingest_csv(dir.path() / "nope.csv", 256, {}, "t"), DataError); }
}

TEST_CASE("store round trip is bit exact") {
    const auto corpus = synth_corpus(3, 4, 3, "seizure", SynthParams{.duration_s = 12.0});
    testing::TempDir dir("emap-store");
    const auto built = build_store(corpus, dir.path() / "mdb");
    CHECK(std::filesystem::exists(dir.path() / "mdb" / "manifest.json"));
    CHECK(std::filesystem::exists(dir.path() / "mdb" / "index.json"));
    const auto reopened = MdbStore::open(dir.path() / "mdb");
    REQUIRE(reopened.num_slices() == built.num_slices());
    CHECK(reopened.index() == built.index());
    for (const auto& e : built.index()) {
        const auto a = built.slice_samples(e.set_id);
        const auto b = reopened.slice_samples(e.set_id);
        REQUIRE(std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(reopened.signals()[i].anomaly_spans == corpus[i].anomaly_spans);
        CHECK(reopened.signals()[i].dataset_tag == corpus[i].dataset_tag);
    }
}

TEST_CASE("on-disk layout") {
    testing::TempDir dir("emap-layout");
    const auto sig = testing::signal(42, testing::as_float(testing::random_samples(9, 2100)), {{1500, 1700, "seizure"}});
    build_store({sig}, dir.path());
    std::ifstream m(dir.path() / "manifest.json");
    const auto manifest = nlohmann::json::parse(m);
    CHECK(manifest["format_version"] == 1);
    CHECK(manifest["sample_rate_hz"] == 256);
    CHECK(manifest["slice_len"] == 1000);
    CHECK(manifest["num_slices"] == 2);
    const auto& js = manifest["signals"][0];
    CHECK(js["id"] == 42);
    CHECK(js["length"] == 2100);
    CHECK(js["spans"][0][0] == 1500);
    CHECK(js["spans"][0][2] == "seizure");
    const auto payload = dir.path() / js["file"].get<std::string>();
    CHECK(std::filesystem::file_size(payload) == 2100 * 4);
    std::ifstream p(payload, std::ios::binary);
    unsigned char bytes[4];
    p.read(reinterpret_cast<char*>(bytes), 4);
    const std::uint32_t bits = bytes[0] | (bytes[1] << 8) | (bytes[2] << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
    float first;
    std::memcpy(&first, &bits, 4);
    CHECK(static_cast<double>(first) == sig.samples[0]);

    std::ifstream ix(dir.path() / "index.json");
    const auto index = nlohmann::json::parse(ix);
    REQUIRE(index.size() == 2);
    CHECK(index[1][0] == 1);
    CHECK(index[1][1] == 42);
    CHECK(index[1][2] == 1000);
    CHECK(index[1][3] == 1);
    CHECK(index[1][4] == "seizure");
    CHECK(index[0][4].is_null());
}

TEST_CASE("open rejects broken stores") {
    testing::TempDir dir("emap-broken");
    build_store({testing::signal(1, testing::random_samples(1, 3000))}, dir.path());
    SUBCASE("truncated payload") {
        std::filesystem::resize_file(dir.path() / "signal_1.f32", 100);
        CHECK_THROWS_AS(MdbStore::open(dir.path()), DataError);
    }
    SUBCASE("bad index") {
        std::ofstream(dir.path() / "index.json") << "[[0, 99, 0, 0, null]]";
        CHECK_THROWS_AS(MdbStore::open(dir.path()), DataError);
    }
    SUBCASE("missing directory") { CHECK_THROWS_AS(MdbStore::open(dir.path() / "absent"), DataError); }
}

TEST_CASE("duplicate ids are rejected") {
    std::vector<SourceSignal> s{testing::signal(1, testing::random_samples(1, 1000)),
                                testing::signal(1, testing::random_samples(2, 1000))};
    CHECK_THROWS_AS(MdbStore::from_signals(s), DataError);
}

TEST_CASE("store invariants on a synthetic corpus") {
    const auto corpus = synth_corpus(11, 6, 6, "stroke", SynthParams{.duration_s = 15.3});
    const auto store = MdbStore::from_signals(corpus);

    // dense ids, parents cover their slices
    for (std::size_t i = 0; i < store.num_slices(); ++i) {
        const auto& e = store.index()[i];
        REQUIRE(e.set_id == static_cast<SetId>(i));
        REQUIRE(e.parent_offset % kSliceLen == 0);
        REQUIRE(e.parent_offset + kSliceLen <= store.parent(e.parent_id).samples.size());
    }

    // slice/parent consistency on random probes
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick_set(0, store.num_slices() - 1), pick_i(0, kSliceLen - 1);
    for (int probe = 0; probe < 1000; ++probe) {
        const auto id = static_cast<SetId>(pick_set(rng));
        const std::size_t i = pick_i(rng);
        const auto& e = store.entry(id);
        REQUIRE(store.slice_samples(id)[i] == store.parent(e.parent_id).samples[e.parent_offset + i]);
    }

    // label soundness against an independent relabeling
    for (const auto& e : store.index()) {
        const bool want = oracle::overlaps_any(store.parent(e.parent_id), e.parent_offset, kSliceLen);
        REQUIRE((e.label == Label::anomalous) == want);
    }

    // slicing conservation
    std::size_t total = 0;
    for (const auto& s : store.signals()) total += s.samples.size();
    CHECK(store.num_slices() * kSliceLen + store.discarded_samples() == total);
    CHECK(store.discarded_samples() == 12 * (static_cast<std::size_t>(15.3 * 256) % 1000));
    CHECK(store.count_label(Label::normal) + store.count_label(Label::anomalous) == store.num_slices());
}

TEST_CASE("samples are held at float32 precision") {
    auto x = testing::random_samples(1, 1000);
    x[0] = 0.1;
    const auto store = MdbStore::from_signals({testing::signal(1, x)});
    CHECK(store.slice_samples(0)[0] == static_cast<double>(0.1f));
}

TEST_CASE("parent segments") {
    const auto store = MdbStore::from_signals({testing::signal(7, testing::random_samples(1, 2500))});
    REQUIRE(store.num_slices() == 2);
    const auto seg = store.parent_segment(1, 900, 256);  // crosses past slice 1 into the remainder
    REQUIRE(seg.has_value());
    CHECK(seg->size() == 256);
    CHECK((*seg)[0] == store.parent(7).samples[1900]);
    CHECK(store.parent_segment(1, 1244, 256).has_value());
    CHECK_FALSE(store.parent_segment(1, 1245, 256).has_value());
    CHECK_FALSE(store.parent_samples(7, 2400, 256).has_value());
    CHECK_THROWS_AS(store.entry(2), std::out_of_range);
}

TEST_CASE("fingerprint") {
    const auto a = testing::random_samples(1, 300);
    auto b = a;
    CHECK(fingerprint(a) == fingerprint(b));
    std::swap(b[0], b[1]);
    CHECK(fingerprint(a) != fingerprint(b));
}

TEST_CASE("span validation") {
    CHECK_THROWS_AS(testing::signal(1, std::vector<double>(1000, 0.0), {{10, 5, "x"}}).validate(), DataError);
    CHECK_THROWS_AS(testing::signal(1, std::vector<double>(1000, 0.0), {{10, 1001, "x"}}).validate(), DataError);
    CHECK_THROWS_AS(testing::signal(1, std::vector<double>(1000, 0.0), {{10, 50, "x"}, {40, 60, "x"}}).validate(), DataError);
    CHECK_NOTHROW(testing::signal(1, std::vector<double>(1000, 0.0), {{10, 50, "x"}, {50, 60, "x"}}).validate());
}
