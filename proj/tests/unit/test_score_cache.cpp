#include "prefalign/score_cache.hpp"

#include "prefalign/toy_lm.hpp"
#include "prefalign/util.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

using namespace prefalign;

namespace {

std::shared_ptr<ToyNgramLm> make_lm() {
    oracles::ToySpec spec;
    spec.vocab = {"a", "b", "c"};
    spec.counts = {{{"a"}, "b", 3.0}, {{"b"}, "c", 2.0}, {{"c"}, "</s>", 2.0}};
    return std::make_shared<ToyNgramLm>(spec.build());
}

std::string temp_path(const std::string& name) {
    auto p = (std::filesystem::temp_directory_path() / name).string();
    std::remove(p.c_str());
    return p;
}

}  // namespace

TEST_CASE("repeated queries hit the cache, distinct ones do not") {
    auto counting = std::make_shared<CountingLm>(make_lm());
    auto cache = std::make_shared<ScoreCache>();
    CachedLm wrapped(counting, cache);

    auto first = wrapped.score("a", "b c");
    auto second = wrapped.score("a", "b c");
    CHECK(counting->score_calls() == 1);
    CHECK(first == second);

    wrapped.score("b", "c");
    CHECK(counting->score_calls() == 2);

    auto stats = cache->stats();
    CHECK(stats.hits == 1);
    CHECK(stats.misses == 2);
}

TEST_CASE("cache transparency: identical scores with and without the wrapper") {
    auto bare = make_lm();
    auto counting = std::make_shared<CountingLm>(make_lm());
    CachedLm wrapped(counting, std::make_shared<ScoreCache>());
    const std::vector<std::pair<std::string, std::string>> queries = {
        {"a", "b"}, {"a b", "c"}, {"", "a b c"}, {"c", ""}, {"a", "b"},
    };
    for (const auto& [ctx, y] : queries) CHECK(wrapped.score(ctx, y) == bare->score(ctx, y));
}

TEST_CASE("persisted cache survives a restart") {
    const auto path = temp_path("prefalign_cache_persist.jsonl");
    {
        auto counting = std::make_shared<CountingLm>(make_lm());
        CachedLm wrapped(counting, std::make_shared<ScoreCache>(path));
        wrapped.score("a", "b c");
        CHECK(counting->score_calls() == 1);
    }
    {
        auto counting = std::make_shared<CountingLm>(make_lm());
        CachedLm wrapped(counting, std::make_shared<ScoreCache>(path));
        auto value = wrapped.score("a", "b c");
        CHECK(counting->score_calls() == 0);
        CHECK(value == make_lm()->score("a", "b c"));
    }
    std::remove(path.c_str());
}

TEST_CASE("corrupt entries are dropped and recomputed") {
    const auto path = temp_path("prefalign_cache_corrupt.jsonl");
    {
        CachedLm wrapped(std::make_shared<CountingLm>(make_lm()),
                         std::make_shared<ScoreCache>(path));
        wrapped.score("a", "b");
    }
    // Flip the payload without updating the checksum.
    {
        auto text = read_file(path);
        auto pos = text.find("\"sum\":");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 6, "\"sum\":1");
        write_file(path, text);
    }
    {
        auto counting = std::make_shared<CountingLm>(make_lm());
        auto cache = std::make_shared<ScoreCache>(path);
        CHECK(cache->stats().corrupt_dropped == 1);
        CHECK(cache->size() == 0);
        CachedLm wrapped(counting, cache);
        auto value = wrapped.score("a", "b");
        CHECK(counting->score_calls() == 1);
        CHECK(value == make_lm()->score("a", "b"));
    }
    std::remove(path.c_str());
}

TEST_CASE("keys separate backend ids and field boundaries") {
    auto k1 = ScoreCache::key_of("id", "ab", "c");
    auto k2 = ScoreCache::key_of("id", "a", "bc");
    auto k3 = ScoreCache::key_of("other", "ab", "c");
    CHECK(k1 != k2);
    CHECK(k1 != k3);
}

TEST_CASE("complete passes through uncached") {
    auto counting = std::make_shared<CountingLm>(make_lm());
    CachedLm wrapped(counting, std::make_shared<ScoreCache>());
    GenerationParams params;
    params.n = 2;
    params.max_tokens = 3;
    params.seed = 5;
    wrapped.complete("a", params);
    wrapped.complete("a", params);
    CHECK(counting->complete_calls() == 2);
}
