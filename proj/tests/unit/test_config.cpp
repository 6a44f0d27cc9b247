#include "prefalign/config.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <doctest.h>

#include <string>

using namespace prefalign;

namespace {
const std::string kSourceDir = PREFALIGN_SOURCE_DIR;
}

TEST_CASE("struct defaults carry the shipped settings") {
    auto cfg = AppConfig::defaults();
    CHECK(cfg.pipeline.retrieval.m == 2);
    CHECK(cfg.pipeline.retrieval.pool_k == 20);
    CHECK(cfg.pipeline.retrieval.window_l == 64);
    CHECK(cfg.pipeline.generation.n == 3);
    CHECK(cfg.pipeline.generation.top_p == 0.8);
    CHECK(cfg.pipeline.generation.temperature == 1.0);
    CHECK(cfg.length_filter.max_prompt_tokens == 320);
    CHECK(cfg.length_filter.max_response_tokens == 128);
    CHECK(cfg.pipeline.scorer == ScorerKind::s);
    CHECK(cfg.pipeline.score_options.length_normalized == false);
    CHECK(cfg.pipeline.score_options.reading == ProbabilityReading::log_product);
}

TEST_CASE("config JSON round-trips") {
    auto cfg = AppConfig::defaults();
    cfg.backend.model_path = "model.json";
    cfg.cache_path = "cache.jsonl";
    cfg.pipeline.scorer = ScorerKind::s_hat;
    cfg.pipeline.negative_style_word = "harmful";
    auto text = cfg.to_json_string();
    auto parsed = AppConfig::from_json_string(text);
    CHECK(parsed.to_json_string() == text);
    CHECK(parsed.pipeline.scorer == ScorerKind::s_hat);
    CHECK(*parsed.pipeline.negative_style_word == "harmful");
}

TEST_CASE("validation enumerates every violated field at once") {
    auto cfg = AppConfig::defaults();
    cfg.backend.type = "toy";
    cfg.backend.model_path = "";        // violation 1
    cfg.embedder.type = "bogus";        // violation 2
    cfg.pipeline.retrieval.m = 0;       // violation 3
    cfg.pipeline.generation.top_p = 2;  // violation 4
    cfg.log_level = "noisy";            // violation 5
    auto violations = cfg.validate();
    CHECK(violations.size() >= 5);
    CHECK_THROWS_AS(cfg.validate_or_throw(), ConfigError);
    set_log_level("info");
}

TEST_CASE("unknown enum names are config errors") {
    CHECK_THROWS_AS(AppConfig::from_json_string(R"({"pipeline": {"scorer": "zzz"}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        AppConfig::from_json_string(R"({"pipeline": {"retrieval": {"ordering": "zzz"}}})"),
        ConfigError);
    CHECK_THROWS_AS(AppConfig::from_json_string("not json"), ConfigError);
}

TEST_CASE("shipped default config file pins the reference settings") {
    auto cfg = AppConfig::load(kSourceDir + "/configs/default.json");
    CHECK(cfg.pipeline.retrieval.m == 2);
    CHECK(cfg.pipeline.retrieval.pool_k == 20);
    CHECK(cfg.pipeline.generation.n == 3);
    CHECK(cfg.pipeline.generation.top_p == 0.8);
    CHECK(cfg.length_filter.max_prompt_tokens == 320);
    CHECK(cfg.length_filter.max_response_tokens == 128);
    CHECK(cfg.validate().empty());
}

TEST_CASE("toy backend resolution requires a model path") {
    auto cfg = AppConfig::defaults();
    cfg.backend.type = "toy";
    cfg.backend.model_path = "";
    CHECK_THROWS_AS(make_backend(cfg), ConfigError);
}

TEST_CASE("toy backend with cache wiring resolves and caches") {
    auto cfg = AppConfig::load(kSourceDir + "/configs/default.json");
    // Model path in the shipped config is relative to the repo root.
    cfg.backend.model_path = kSourceDir + "/" + cfg.backend.model_path;
    cfg.cache_path = "";
    auto resolved = make_backend(cfg);
    REQUIRE(resolved.backend);
    CHECK(resolved.backend->deterministic_completion());
    CHECK(resolved.cache == nullptr);

    auto embedder = make_embedder(cfg);
    REQUIRE(embedder);
    CHECK(embedder->embed("hello world").size() == cfg.embedder.dim);
}
