#include "anchor_rag/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "anchor_rag/common.hpp"
#include "support/scratch_dir.hpp"

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

namespace ar = anchor_rag;
using ar::config::RunConfig;

TEST_CASE("defaults pass validation and fingerprint cleanly") {
    const RunConfig cfg;
    ar::config::validate(cfg);
    const auto fp = ar::config::fingerprint(cfg);
    CHECK(fp.size() == 16);
    CHECK(std::all_of(fp.begin(), fp.end(), [](unsigned char c) { return std::isxdigit(c); }));
    CHECK(fp == ar::config::fingerprint(RunConfig{}));  // stable across instances
}

TEST_CASE("the schema names every key exactly once") {
    std::set<std::string> keys;
    for (const auto& field : ar::config::schema()) {
        CHECK(keys.insert(field.key).second);
        CHECK_FALSE(field.type.empty());
        CHECK_FALSE(field.description.empty());
    }
    CHECK(keys.count("mode") == 1);
    CHECK(keys.count("k") == 1);
    CHECK(keys.count("tau") == 1);
    CHECK(keys.count("json") == 1);
}

TEST_CASE("get_value reports defaults in parseable form") {
    const RunConfig cfg;
    CHECK(ar::config::get_value(cfg, "k") == "10");
    CHECK(ar::config::get_value(cfg, "mode") == "anchor-rag");
    CHECK(ar::config::get_value(cfg, "alpha") == "0.2");
    CHECK(ar::config::get_value(cfg, "tau") == "off");
    CHECK(ar::config::get_value(cfg, "seed") == "42");
    CHECK_THROWS_AS(ar::config::get_value(cfg, "bogus"), ar::Error);
}

TEST_CASE("every schema default round-trips through apply_kv") {
    const RunConfig defaults;
    RunConfig rebuilt;
    for (const auto& field : ar::config::schema()) {
        ar::config::apply_kv(rebuilt, field.key, ar::config::get_value(defaults, field.key));
    }
    CHECK(ar::config::canonical_string(rebuilt) == ar::config::canonical_string(defaults));
    CHECK(ar::config::fingerprint(rebuilt) == ar::config::fingerprint(defaults));
}

TEST_CASE("apply_kv parses and rejects by type") {
    RunConfig cfg;
    ar::config::apply_kv(cfg, "k", "12");
    CHECK(cfg.k == 12);
    ar::config::apply_kv(cfg, "alpha", "0.5");
    CHECK(cfg.alpha == 0.5);
    ar::config::apply_kv(cfg, "tau", "1.25");
    REQUIRE(cfg.tau.has_value());
    CHECK(*cfg.tau == 1.25);
    ar::config::apply_kv(cfg, "tau", "off");
    CHECK_FALSE(cfg.tau.has_value());
    ar::config::apply_kv(cfg, "seed", "18446744073709551615");  // max uint64
    CHECK(cfg.seed == 18446744073709551615ULL);

    CHECK_THROWS_AS(ar::config::apply_kv(cfg, "k", "ten"), ar::Error);
    CHECK_THROWS_AS(ar::config::apply_kv(cfg, "alpha", ""), ar::Error);
    CHECK_THROWS_AS(ar::config::apply_kv(cfg, "unknown_key", "1"), ar::Error);
    try {
        ar::config::apply_kv(cfg, "unknown_key", "1");
    } catch (const ar::Error& e) {
        CHECK(e.code() == ar::ErrorCode::ConfigError);
    }
}

TEST_CASE("config files layer over defaults with later lines winning") {
    testutil::scratch_dir dir("config");
    const auto path = dir.path() / "run.conf";
    testutil::write_file(path,
                         "# comment line\n"
                         "\n"
                         "k=12\n"
                         "mode=naive-rag\n"
                         "k=14\n");
    RunConfig cfg;
    ar::config::load_file(cfg, path);
    CHECK(cfg.k == 14);
    CHECK(cfg.mode == "naive-rag");
    CHECK(cfg.top_n == 5);  // untouched default

    testutil::write_file(path, "k=12\nnot a kv line\n");
    RunConfig bad;
    try {
        ar::config::load_file(bad, path);
        FAIL("expected ConfigError");
    } catch (const ar::Error& e) {
        CHECK(e.code() == ar::ErrorCode::ConfigError);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    CHECK_THROWS_AS(ar::config::load_file(bad, dir.path() / "absent.conf"), ar::Error);
}

TEST_CASE("validation rejects out-of-range values") {
    auto broken = [](auto mutate) {
        RunConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(ar::config::validate(cfg), ar::Error);
    };
    broken([](RunConfig& c) { c.k = 1; });
    broken([](RunConfig& c) { c.top_n = 0; });
    broken([](RunConfig& c) { c.alpha = 0.0; });
    broken([](RunConfig& c) { c.alpha = -0.1; });
    broken([](RunConfig& c) { c.m_max = 0; });
    broken([](RunConfig& c) { c.temperature = 0.0; });
    broken([](RunConfig& c) { c.window = 0; });
    broken([](RunConfig& c) { c.overlap = -1; });
    broken([](RunConfig& c) { c.overlap = c.window; });
    broken([](RunConfig& c) { c.dimension = 4; });
    broken([](RunConfig& c) { c.prompt_budget = 0; });
    broken([](RunConfig& c) { c.max_tokens = 0; });
    broken([](RunConfig& c) { c.workers = 0; });
    broken([](RunConfig& c) { c.max_retries = -1; });
    broken([](RunConfig& c) { c.gen_docs = 0; });
    broken([](RunConfig& c) { c.gen_questions = 0; });
    broken([](RunConfig& c) { c.mode = "sideways"; });
    broken([](RunConfig& c) { c.predictor = "psychic"; });
    broken([](RunConfig& c) { c.embedder = "vibes"; });
    broken([](RunConfig& c) { c.generator = "novelist"; });
    broken([](RunConfig& c) { c.template_id = ""; });
}

TEST_CASE("the canonical string lists every schema key, sorted") {
    const RunConfig cfg;
    const auto canon = ar::config::canonical_string(cfg);
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(canon);
    while (std::getline(in, line)) lines.push_back(line);

    CHECK(lines.size() == ar::config::schema().size());
    CHECK(std::is_sorted(lines.begin(), lines.end()));
    for (const auto& field : ar::config::schema()) {
        const auto prefix = field.key + "=";
        const bool found = std::any_of(lines.begin(), lines.end(), [&](const std::string& l) {
            return l.rfind(prefix, 0) == 0;
        });
        CHECK(found);
    }
}

TEST_CASE("configs differing only in mode differ only in the mode line") {
    RunConfig a, b;
    a.mode = "anchor-rag";
    b.mode = "naive-rag";
    std::istringstream in_a(ar::config::canonical_string(a));
    std::istringstream in_b(ar::config::canonical_string(b));
    std::string line_a, line_b;
    int differing = 0;
    while (std::getline(in_a, line_a) && std::getline(in_b, line_b)) {
        if (line_a != line_b) {
            ++differing;
            CHECK(line_a == "mode=anchor-rag");
            CHECK(line_b == "mode=naive-rag");
        }
    }
    CHECK(differing == 1);
    CHECK(ar::config::fingerprint(a) != ar::config::fingerprint(b));
}

TEST_CASE("fingerprints track every field") {
    const RunConfig base;
    for (const auto& field : ar::config::schema()) {
        RunConfig changed;
        if (field.type == "int" || field.type == "uint") {
            ar::config::apply_kv(changed, field.key, "77");
        } else if (field.type == "double" || field.type == "double-or-off") {
            ar::config::apply_kv(changed, field.key, "0.77");
        } else {
            ar::config::apply_kv(changed, field.key, "changed-value");
        }
        CHECK(ar::config::fingerprint(changed) != ar::config::fingerprint(base));
    }
}
