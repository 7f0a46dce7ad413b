#include "anchor_rag/backends.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchor_rag/common.hpp"
#include "anchor_rag/text.hpp"
#include "support/mock_backend.hpp"

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

namespace ar = anchor_rag;
using ar::backends::BackendConfig;
using ar::backends::BackendError;
using ar::backends::BackendErrorKind;
using nlohmann::json;

namespace {

BackendConfig fast_config(const std::string& base_url, int max_retries = 2) {
    BackendConfig config;
    config.base_url = base_url;
    config.api_key_env = "ANCHOR_RAG_TEST_KEY";
    config.timeout_ms = 2000;
    config.max_retries = max_retries;
    config.backoff_initial_ms = 1;
    return config;
}

void reply_json(httplib::Response& res, const json& body) {
    res.set_content(body.dump(), "application/json");
}

}  // namespace

TEST_CASE("fill-mask parses a well-formed response") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/fill-mask", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        CHECK(body.at("mask_token") == "[MASK]");
        CHECK(body.at("top_k") == 5);
        CHECK(body.at("text").get<std::string>().find("[MASK]") != std::string::npos);
        reply_json(res, json{{"predictions", json::array({
                                                 json{{"token", "paris"}, {"prob", 0.6}},
                                                 json{{"token", "rome"}, {"prob", 0.3}},
                                             })}});
    });
    const auto url = mock.start();

    const auto dist = ar::backends::remote_fill_mask(fast_config(url), "the capital is [MASK] today", 5);
    REQUIRE(dist.size() == 2);
    CHECK(dist.entries()[0].first == "paris");
    CHECK(dist.entries()[0].second == 0.6);
    CHECK(mock.requests() == 1);
}

TEST_CASE("fill-mask repairs ordering and duplicates with a warning") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/fill-mask", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, json{{"predictions", json::array({
                                                 json{{"token", "rome"}, {"prob", 0.2}},
                                                 json{{"token", "paris"}, {"prob", 0.5}},
                                                 json{{"token", "rome"}, {"prob", 0.1}},
                                             })}});
    });
    const auto url = mock.start();

    const auto dist = ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 5);
    REQUIRE(dist.size() == 2);  // duplicate "rome" collapsed to its best probability
    CHECK(dist.entries()[0].first == "paris");
    CHECK(dist.entries()[0].second == 0.5);
    CHECK(dist.entries()[1].first == "rome");
    CHECK(dist.entries()[1].second == 0.2);
}

TEST_CASE("fill-mask rejects malformed responses without retrying") {
    const std::vector<json> bad_bodies = {
        json{{"predictions", json::array()}},
        json{{"predictions", json::array({json{{"token", "x"}, {"prob", -0.2}}})}},
        json{{"predictions", json::array({json{{"token", ""}, {"prob", 0.2}}})}},
        json{{"predictions", json::array({json{{"token", "x"}}})}},
        json{{"predictions", "nope"}},
        json{{"something_else", 1}},
        json{{"predictions", json::array({json{{"token", "x"}, {"prob", 0.9}},
                                          json{{"token", "y"}, {"prob", 0.9}}})}},  // mass over 1
    };
    for (const auto& body : bad_bodies) {
        testutil::mock_backend mock;
        mock.server().Post("/v1/fill-mask", [&body](const httplib::Request&, httplib::Response& res) {
            reply_json(res, body);
        });
        const auto url = mock.start();
        try {
            ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 5);
            FAIL("expected MalformedResponse for " << body.dump());
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendErrorKind::MalformedResponse);
            CHECK_FALSE(e.retryable());
        }
        CHECK(mock.requests() == 1);  // malformed bodies are never retried
    }
}

TEST_CASE("a rate-limited request is retried until it succeeds") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/fill-mask", [&mock](const httplib::Request&, httplib::Response& res) {
        if (mock.requests() == 1) {
            res.status = 429;
            return;
        }
        reply_json(res, json{{"predictions", json::array({json{{"token", "x"}, {"prob", 1.0}}})}});
    });
    const auto url = mock.start();

    const auto dist = ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 3);
    CHECK(dist.size() == 1);
    CHECK(mock.requests() == 2);
}

TEST_CASE("persistent rate limiting exhausts exactly 1 + max_retries attempts") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/fill-mask", [](const httplib::Request&, httplib::Response& res) {
        res.status = 429;
    });
    const auto url = mock.start();

    try {
        ar::backends::remote_fill_mask(fast_config(url, 2), "x [MASK]", 3);
        FAIL("expected RateLimited");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::RateLimited);
        CHECK(e.http_status() == 429);
        CHECK(e.attempts() == 3);
        CHECK(e.retryable());
    }
    CHECK(mock.requests() == 3);
}

TEST_CASE("authentication failures are terminal") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/fill-mask", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    const auto url = mock.start();

    try {
        ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 3);
        FAIL("expected Auth");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Auth);
        CHECK(e.http_status() == 401);
        CHECK(e.attempts() == 1);
        CHECK_FALSE(e.retryable());
    }
    CHECK(mock.requests() == 1);
}

TEST_CASE("unexpected statuses are protocol errors, not retried") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/fill-mask", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
    });
    const auto url = mock.start();

    try {
        ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 3);
        FAIL("expected Protocol");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Protocol);
        CHECK(e.http_status() == 500);
    }
    CHECK(mock.requests() == 1);
}

TEST_CASE("an unreachable server is a transport error after all attempts") {
    // Bind a port, then close it so nothing listens there.
    int dead_port = 0;
    {
        testutil::mock_backend probe;
        probe.start();
        const auto url = probe.url();
        dead_port = std::stoi(url.substr(url.rfind(':') + 1));
    }
    try {
        ar::backends::remote_fill_mask(fast_config("http://127.0.0.1:" + std::to_string(dead_port), 1),
                                       "x [MASK]", 3);
        FAIL("expected Transport");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Transport);
        CHECK(e.http_status() == 0);
        CHECK(e.attempts() == 2);
        CHECK(e.retryable());
    }
}

TEST_CASE("the api key travels as a bearer header only when the env var is set") {
    testutil::mock_backend mock;
    std::string seen_auth = "unset";
    mock.server().Post("/v1/fill-mask", [&seen_auth](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.has_header("Authorization") ? req.get_header_value("Authorization") : "";
        reply_json(res, json{{"predictions", json::array({json{{"token", "x"}, {"prob", 1.0}}})}});
    });
    const auto url = mock.start();

    ::setenv("ANCHOR_RAG_TEST_KEY", "sekrit", 1);
    ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 3);
    CHECK(seen_auth == "Bearer sekrit");

    ::unsetenv("ANCHOR_RAG_TEST_KEY");
    ar::backends::remote_fill_mask(fast_config(url), "x [MASK]", 3);
    CHECK(seen_auth == "");
}

TEST_CASE("embedding requests round-trip vectors in order") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/embed", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        REQUIRE(body.at("texts").size() == 2);
        reply_json(res, json{{"vectors", json::array({
                                             json::array({1.0, 0.0, 0.0}),
                                             json::array({0.0, 0.5, 0.5}),
                                         })}});
    });
    const auto url = mock.start();

    const auto vectors = ar::backends::remote_embed(fast_config(url), {"first", "second"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0].components == std::vector<float>{1.0f, 0.0f, 0.0f});
    CHECK(vectors[1].components == std::vector<float>{0.0f, 0.5f, 0.5f});
}

TEST_CASE("an empty embed request never touches the network") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;  // would fail loudly if called
    });
    const auto url = mock.start();
    CHECK(ar::backends::remote_embed(fast_config(url), {}).empty());
    CHECK(mock.requests() == 0);
}

TEST_CASE("embedding rejects ragged or miscounted vector sets") {
    const std::vector<json> bad_bodies = {
        json{{"vectors", json::array({json::array({1.0, 2.0})})}},  // one row for two texts
        json{{"vectors", json::array({json::array({1.0, 2.0}), json::array({1.0})})}},  // ragged
        json{{"vectors", "nope"}},
        json{{"rows", json::array()}},
    };
    for (const auto& body : bad_bodies) {
        testutil::mock_backend mock;
        mock.server().Post("/v1/embed", [&body](const httplib::Request&, httplib::Response& res) {
            reply_json(res, body);
        });
        const auto url = mock.start();
        try {
            ar::backends::remote_embed(fast_config(url), {"a", "b"});
            FAIL("expected MalformedResponse for " << body.dump());
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendErrorKind::MalformedResponse);
        }
    }
}

TEST_CASE("generation carries token probabilities into log_prob") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/generate", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        CHECK(body.at("max_tokens") == 8);
        CHECK(body.at("greedy") == true);
        CHECK(body.at("prompt") == "the prompt");
        reply_json(res, json{{"text", "two words"},
                             {"tokens", json::array({
                                            json{{"token", "two"}, {"prob", 0.5}},
                                            json{{"token", "words"}, {"prob", 0.4}},
                                        })}});
    });
    const auto url = mock.start();

    const auto result = ar::backends::remote_generate(fast_config(url), "the prompt", 8);
    CHECK(result.text == "two words");
    REQUIRE(result.steps.size() == 2);
    CHECK_FALSE(result.prob_free);
    CHECK(std::abs(result.log_prob - std::log(0.2)) <= 1e-9);
    CHECK(std::abs(ar::generate::sequence_prob(result) - 0.2) <= 1e-12);
}

TEST_CASE("generation without token probabilities is probability-free") {
    testutil::mock_backend mock;
    int variant = 0;
    mock.server().Post("/v1/generate", [&variant](const httplib::Request&, httplib::Response& res) {
        if (variant == 0) {
            reply_json(res, json{{"text", "no tokens at all"}});
        } else {
            reply_json(res, json{{"text", "one two"},
                                 {"tokens", json::array({
                                                json{{"token", "one"}, {"prob", 0.5}},
                                                json{{"token", "two"}},  // missing prob
                                            })}});
        }
    });
    const auto url = mock.start();

    const auto absent = ar::backends::remote_generate(fast_config(url), "p", 8);
    CHECK(absent.prob_free);
    CHECK(absent.steps.empty());
    CHECK(absent.log_prob == 0.0);
    CHECK(ar::generate::sequence_prob(absent) == 1.0);

    variant = 1;
    const auto partial = ar::backends::remote_generate(fast_config(url), "p", 8);
    CHECK(partial.prob_free);
    REQUIRE(partial.steps.size() == 2);
    CHECK(partial.steps[0].prob == 1.0);  // all probs neutralized, not just the missing one
    CHECK(partial.steps[1].prob == 1.0);
}

TEST_CASE("generation rejects contract violations") {
    const std::vector<json> malformed = {
        json{{"text", "x"},
             {"tokens", json::array({json{{"token", "a"}, {"prob", 1.0}},
                                     json{{"token", "b"}, {"prob", 1.0}},
                                     json{{"token", "c"}, {"prob", 1.0}}})}},  // more steps than max_tokens
        json{{"text", "x"}, {"tokens", json::array({json{{"token", "a"}, {"prob", 0.0}}})}},
        json{{"text", "x"}, {"tokens", json::array({json{{"token", "a"}, {"prob", 1.5}}})}},
        json{{"text", "x"}, {"tokens", "nope"}},
    };
    for (const auto& body : malformed) {
        testutil::mock_backend mock;
        mock.server().Post("/v1/generate", [&body](const httplib::Request&, httplib::Response& res) {
            reply_json(res, body);
        });
        const auto url = mock.start();
        try {
            ar::backends::remote_generate(fast_config(url), "p", 2);
            FAIL("expected MalformedResponse for " << body.dump());
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendErrorKind::MalformedResponse);
        }
    }

    testutil::mock_backend mock;
    mock.server().Post("/v1/generate", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, json{{"text", ""}});
    });
    const auto url = mock.start();
    try {
        ar::backends::remote_generate(fast_config(url), "p", 2);
        FAIL("expected EmptyGeneration");
    } catch (const ar::Error& e) {
        CHECK(e.code() == ar::ErrorCode::EmptyGeneration);
    }
}

TEST_CASE("the predictor adapter surfaces masked queries as [MASK] text") {
    testutil::mock_backend mock;
    std::string seen_text;
    mock.server().Post("/v1/fill-mask", [&seen_text](const httplib::Request& req, httplib::Response& res) {
        seen_text = json::parse(req.body).at("text").get<std::string>();
        reply_json(res, json{{"predictions", json::array({json{{"token", "x"}, {"prob", 1.0}}})}});
    });
    const auto url = mock.start();

    const ar::backends::RemoteFillMask predictor(fast_config(url));
    const auto toks = ar::text::tokenize("the capital city");
    const auto dist = ar::predict::fill_mask(predictor, ar::predict::MaskedQuery{toks, 1}, 4);
    CHECK(dist.size() == 1);
    CHECK(seen_text == "the [MASK] city");
}

TEST_CASE("the embedder adapter enforces its configured dimension") {
    testutil::mock_backend mock;
    mock.server().Post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, json{{"vectors", json::array({json::array({1.0, 2.0})})}});
    });
    const auto url = mock.start();

    const ar::backends::RemoteEmbedder ok(fast_config(url), 2);
    CHECK(ok.embed({"text"}).front().dimension() == 2);
    CHECK(ok.id() == "remote");

    const ar::backends::RemoteEmbedder wrong(fast_config(url), 3);
    CHECK_THROWS_AS(wrong.embed({"text"}), BackendError);
}
