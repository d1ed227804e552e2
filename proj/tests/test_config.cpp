#include "emap/config.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace emap;

TEST_CASE("defaults") {
    const RunConfig c;
    CHECK(c.sim.search.alpha == 0.004);
    CHECK(c.sim.search.delta == 0.8);
    CHECK(c.sim.search.top_k == 100);
    CHECK(c.sim.tracker.area_threshold == 900.0);
    CHECK(c.sim.tracker.max_iterations_per_set == 5);
    CHECK(c.slice_len == 1000);
    CHECK(c.window_len == 256);
    CHECK(c.sample_rate_hz == 256);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("round trip through text and file") {
    RunConfig c;
    c.seed = 123456789012345ULL;
    c.sim.search.alpha = 0.0123456789;
    c.sim.search.max_comparisons = 5000;
    c.sim.tracker.pa_floor = 0.1 + 0.2;  // not exactly representable as written
    c.sim.link.uplink_fixed = sim::Nanos{123'456};
    c.sim.latency_mode = sim::SearchLatencyMode::measured;
    c.sim.concurrent_search = true;
    c.eval_corpus.kind = "stroke";
    c.eval_corpus.params.signature_gain = 1.0 / 3.0;
    c.store_dir = "some/dir";
    const auto back = RunConfig::parse(c.to_text());
    CHECK(back == c);
    CHECK(back.to_text() == c.to_text());

    testing::TempDir dir("emap-config");
    c.save(dir.path() / "run.cfg");
    CHECK(RunConfig::load(dir.path() / "run.cfg") == c);
    CHECK(RunConfig::parse(RunConfig{}.to_text()) == RunConfig{});
}

TEST_CASE("every key round trips on its own") {
    const RunConfig base;
    const auto text = base.to_text();
    for (const auto& k : RunConfig::keys()) CHECK_MESSAGE(text.find(k + " = ") != std::string::npos, k);
}

TEST_CASE("parse handles comments and overrides") {
    const auto c = RunConfig::parse("# a comment\n\nsearch.alpha = 0.01\n  tracker.area_threshold=750  \n");
    CHECK(c.sim.search.alpha == 0.01);
    CHECK(c.sim.tracker.area_threshold == 750.0);
    RunConfig d;
    d.set("search.max_comparisons", "none");
    CHECK_FALSE(d.sim.search.max_comparisons.has_value());
    d.set("sim.search_latency_us", "2800000.5");
    CHECK(d.sim.search_latency == sim::Nanos{2'800'000'500});
}

TEST_CASE("bad input") {
    CHECK_THROWS_AS(RunConfig::parse("nonsense\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("no.such.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("search.alpha = fast\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("search.alpha = 1.5\n").validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("slice_len = 999\n").validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("sim.concurrent_search = maybe\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("link.uplink_fixed_us = 0.0001\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), ConfigError);
    try {
        RunConfig::parse("seed = 1\nbroken line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("derived seeds") {
    RunConfig c;
    c.seed = 40;
    CHECK(c.store_seed() == 40);
    CHECK(c.eval_seed() != c.store_seed());
}
