#include "prefalign/retrieval.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

using namespace prefalign;

namespace {

std::vector<std::vector<std::string>> cat_corpus() {
    return {{"cat", "sat"}, {"dog", "ran"}, {"cat", "ran"}};
}

std::vector<PreferenceRecord> synthetic_pool(std::size_t n, std::mt19937_64& rng) {
    const std::vector<std::string> words = {"alpha", "beta",  "gamma", "delta", "epsilon",
                                            "zeta",  "theta", "kappa", "sigma", "omega"};
    std::vector<PreferenceRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        std::string prompt;
        std::size_t len = 3 + rng() % 6;
        for (std::size_t w = 0; w < len; ++w) {
            if (w) prompt += ' ';
            prompt += words[rng() % words.size()];
        }
        records.push_back({prompt, "chosen " + std::to_string(i),
                           "rejected " + std::to_string(i), "r" + std::to_string(i)});
    }
    return records;
}

std::string temp_path(const std::string& name) {
    auto p = (std::filesystem::temp_directory_path() / name).string();
    std::remove(p.c_str());
    return p;
}

}  // namespace

TEST_CASE("tail_window slices the last l tokens") {
    std::vector<std::string> tokens = {"a", "b", "c", "d"};
    CHECK(tail_window(tokens, 2) == std::vector<std::string>{"c", "d"});
    CHECK(tail_window(tokens, 9) == tokens);
    CHECK(tail_window({}, 3).empty());
}

TEST_CASE("bm25: zero score without term overlap") {
    Bm25Index index(cat_corpus());
    CHECK(index.score({"mouse"}, 0) == 0.0);
    CHECK(index.score({}, 1) == 0.0);
}

TEST_CASE("bm25: matches the direct formula evaluation") {
    auto docs = cat_corpus();
    Bm25Index index(docs, 1.2, 0.75);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        double got = index.score({"cat"}, d);
        double expected = oracles::oracle_bm25(docs, {"cat"}, d, 1.2, 0.75);
        CHECK(std::abs(got - expected) < 1e-9);
    }
}

TEST_CASE("bm25: repeated query terms sum per occurrence") {
    Bm25Index index(cat_corpus());
    CHECK(index.score({"cat", "cat"}, 0) ==
          doctest::Approx(2.0 * index.score({"cat"}, 0)).epsilon(1e-12));
}

TEST_CASE("bm25: idf stays positive for every document frequency") {
    // 5-doc corpus where one term appears in all documents (df == N).
    std::vector<std::vector<std::string>> docs(5, {"common"});
    docs[0].push_back("rare");
    Bm25Index index(docs);
    CHECK(index.idf("common") > 0.0);
    CHECK(index.idf("rare") > 0.0);
    CHECK(index.idf("absent") > 0.0);
    CHECK(index.score({"common"}, 1) > 0.0);
}

TEST_CASE("bm25 top_k: ordering, clipping, tie rule") {
    auto docs = cat_corpus();
    Bm25Index index(docs);

    auto full = index.top_k({"cat"}, 10);
    REQUIRE(full.size() == 3);
    CHECK(full[0].second >= full[1].second);
    CHECK(full[1].second >= full[2].second);

    auto top2 = index.top_k({"cat"}, 2);
    REQUIRE(top2.size() == 2);
    // The two cat-containing documents, by exhaustive scoring.
    CHECK(((top2[0].first == 0 && top2[1].first == 2) ||
           (top2[0].first == 2 && top2[1].first == 0)));

    // Identical documents score identically; lower id wins.
    Bm25Index tie_index({{"x"}, {"x"}, {"y"}});
    auto tied = tie_index.top_k({"x"}, 2);
    CHECK(tied[0].first == 0);
    CHECK(tied[1].first == 1);

    Bm25Index empty_index(std::vector<std::vector<std::string>>{});
    CHECK(empty_index.top_k({"x"}, 3).empty());
}

TEST_CASE("tail-window consistency: large windows equal full-document scoring") {
    std::mt19937_64 rng(21);
    auto records = synthetic_pool(12, rng);

    std::vector<std::vector<std::string>> full_docs;
    for (const auto& rec : records) full_docs.push_back(retrieval_tokens(rec.prompt));
    std::size_t max_len = 0;
    for (const auto& d : full_docs) max_len = std::max(max_len, d.size());

    std::vector<std::vector<std::string>> windowed;
    for (const auto& d : full_docs) windowed.push_back(tail_window(d, max_len));

    Bm25Index full_index(full_docs);
    Bm25Index window_index(windowed);
    for (int q = 0; q < 30; ++q) {
        auto query = full_docs[rng() % full_docs.size()];
        for (std::size_t d = 0; d < full_docs.size(); ++d)
            CHECK(full_index.score(query, d) == window_index.score(query, d));
    }
}

TEST_CASE("hash embedder: unit norm, determinism, scale invariance of cosine") {
    HashEmbedder embedder(64);
    auto v1 = embedder.embed("alpha beta gamma");
    auto v2 = embedder.embed("alpha beta gamma");
    CHECK(v1 == v2);
    double norm = 0.0;
    for (double v : v1) norm += v * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);

    HashEmbedder scaled(64, 3.0);
    auto a1 = embedder.embed("alpha beta");
    auto a3 = scaled.embed("alpha beta");
    for (std::size_t i = 0; i < a1.size(); ++i) CHECK(a1[i] == doctest::Approx(a3[i]).epsilon(1e-12));

    auto b1 = embedder.embed("gamma delta");
    CHECK(cosine_similarity(a1, b1) ==
          doctest::Approx(cosine_similarity(scaled.embed("alpha beta"), scaled.embed("gamma delta")))
              .epsilon(1e-12));
}

TEST_CASE("rerank: self-match first, brute-force agreement") {
    HashEmbedder embedder(64);
    const std::string query = "alpha beta gamma delta";
    std::vector<std::pair<std::size_t, std::string>> shortlist = {
        {0, "omega sigma kappa"},
        {1, query},
        {2, "alpha beta gamma"},
        {3, "zeta theta"},
        {4, "beta gamma delta epsilon"},
    };

    auto top = rerank_embed_scored(embedder, query, shortlist, 5);
    CHECK(top[0].first == 1);
    CHECK(top[0].second == doctest::Approx(1.0).epsilon(1e-9));

    // Brute-force cosine over raw embeddings, same tie rule.
    auto qv = embedder.raw_embed(query);
    std::vector<std::pair<std::size_t, double>> brute;
    for (std::size_t i = 0; i < shortlist.size(); ++i)
        brute.emplace_back(i, oracles::oracle_cosine(qv, embedder.raw_embed(shortlist[i].second)));
    std::stable_sort(brute.begin(), brute.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < top.size(); ++i) {
        CHECK(top[i].first == shortlist[brute[i].first].first);
        CHECK(std::abs(top[i].second - brute[i].second) < 1e-9);
    }
}

TEST_CASE("retrieve: pool of exactly m returns those records") {
    RetrievalConfig cfg;
    cfg.m = 2;
    cfg.pool_k = 5;
    std::vector<PreferenceRecord> records = {{"alpha beta", "c", "r", "a"},
                                             {"gamma delta", "c", "r", "b"}};
    DemoPool pool(records, cfg);
    HashEmbedder embedder;
    auto result = retrieve_demonstrations(pool, embedder, "alpha beta", cfg);
    REQUIRE(result.selected.size() == 2);
    CHECK_FALSE(result.truncated);
}

TEST_CASE("retrieve: a record equal to the query wins both stages") {
    std::mt19937_64 rng(31);
    auto records = synthetic_pool(25, rng);
    const std::string x = "omega kappa sigma theta zeta";
    records.push_back({x, "c", "r", "self"});

    RetrievalConfig cfg;
    cfg.m = 2;
    cfg.pool_k = 10;
    cfg.ordering = DemoOrdering::most_similar_first;
    DemoPool pool(records, cfg);
    HashEmbedder embedder;
    auto result = retrieve_demonstrations(pool, embedder, x, cfg);
    REQUIRE_FALSE(result.selected.empty());
    CHECK(result.selected[0].id == "self");
    CHECK(result.selected[0].cosine == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("retrieve: planted near-duplicates beat a brute-force two-stage simulation") {
    std::mt19937_64 rng(41);
    auto records = synthetic_pool(30, rng);
    const std::string x = "omega omega kappa kappa sigma sigma";
    records.push_back({"omega omega kappa kappa sigma stray", "c", "r", "plant-1"});
    records.push_back({"prefix omega omega kappa kappa sigma", "c", "r", "plant-2"});

    RetrievalConfig cfg;
    cfg.m = 2;
    cfg.pool_k = 8;
    cfg.window_l = 16;
    cfg.ordering = DemoOrdering::most_similar_first;
    DemoPool pool(records, cfg);
    HashEmbedder embedder;
    auto result = retrieve_demonstrations(pool, embedder, x, cfg);

    // Oracle: exhaustive BM25 over the whole pool, then exhaustive
    // cosine on the shortlist, reusing only primitive operations.
    std::vector<std::vector<std::string>> docs;
    for (const auto& rec : records)
        docs.push_back(tail_window(retrieval_tokens(rec.prompt), cfg.window_l));
    auto query = tail_window(retrieval_tokens(x), cfg.window_l);
    std::vector<std::pair<std::size_t, double>> coarse;
    for (std::size_t d = 0; d < docs.size(); ++d)
        coarse.emplace_back(d, oracles::oracle_bm25(docs, query, d, cfg.k1, cfg.b));
    std::stable_sort(coarse.begin(), coarse.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    coarse.resize(cfg.pool_k);
    HashEmbedder oracle_embedder;
    std::vector<std::pair<std::size_t, double>> fine;
    for (const auto& [d, _] : coarse)
        fine.emplace_back(d, oracles::oracle_cosine(oracle_embedder.raw_embed(x),
                                                    oracle_embedder.raw_embed(records[d].prompt)));
    std::stable_sort(fine.begin(), fine.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    REQUIRE(result.selected.size() == 2);
    CHECK(result.selected[0].pool_index == fine[0].first);
    CHECK(result.selected[1].pool_index == fine[1].first);
    // The planted near-duplicates are the ones selected.
    std::set<std::string> ids = {result.selected[0].id, result.selected[1].id};
    CHECK(ids == std::set<std::string>{"plant-1", "plant-2"});
}

TEST_CASE("retrieve: two-stage never resurrects a pruned document") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 25; ++trial) {
        auto records = synthetic_pool(20 + rng() % 10, rng);
        RetrievalConfig cfg;
        cfg.m = 2;
        cfg.pool_k = 4;
        DemoPool pool(records, cfg);
        HashEmbedder embedder;
        const std::string x = records[rng() % records.size()].prompt + " extra";

        auto shortlist = pool.index().top_k(tail_window(retrieval_tokens(x), cfg.window_l),
                                            cfg.pool_k);
        std::set<std::size_t> allowed;
        for (const auto& [d, _] : shortlist) allowed.insert(d);

        auto result = retrieve_demonstrations(pool, embedder, x, cfg);
        for (const auto& sel : result.selected) CHECK(allowed.count(sel.pool_index) == 1);
    }
}

TEST_CASE("retrieve: deterministic and ordering modes behave") {
    std::mt19937_64 rng(61);
    auto records = synthetic_pool(15, rng);
    const std::string x = records[3].prompt;
    HashEmbedder embedder;

    RetrievalConfig cfg;
    cfg.m = 3;
    cfg.pool_k = 6;
    cfg.ordering = DemoOrdering::most_similar_first;
    DemoPool pool(records, cfg);

    auto first = retrieve_demonstrations(pool, embedder, x, cfg);
    auto second = retrieve_demonstrations(pool, embedder, x, cfg);
    REQUIRE(first.selected.size() == second.selected.size());
    for (std::size_t i = 0; i < first.selected.size(); ++i)
        CHECK(first.selected[i].id == second.selected[i].id);

    cfg.ordering = DemoOrdering::most_similar_last;
    auto last = retrieve_demonstrations(pool, embedder, x, cfg);
    REQUIRE(last.selected.size() == first.selected.size());
    for (std::size_t i = 0; i < first.selected.size(); ++i)
        CHECK(last.selected[i].id == first.selected[first.selected.size() - 1 - i].id);

    cfg.ordering = DemoOrdering::pool_order;
    auto by_pool = retrieve_demonstrations(pool, embedder, x, cfg);
    for (std::size_t i = 1; i < by_pool.selected.size(); ++i)
        CHECK(by_pool.selected[i - 1].pool_index < by_pool.selected[i].pool_index);
}

TEST_CASE("retrieve: small pools warn or error depending on strictness") {
    RetrievalConfig cfg;
    cfg.m = 3;
    cfg.pool_k = 5;
    std::vector<PreferenceRecord> records = {{"alpha beta", "c", "r", "a"},
                                             {"gamma", "c", "r", "b"}};
    DemoPool pool(records, cfg);
    HashEmbedder embedder;

    auto relaxed = retrieve_demonstrations(pool, embedder, "alpha", cfg, false);
    CHECK(relaxed.truncated);
    CHECK(relaxed.selected.size() == 2);

    CHECK_THROWS_AS(retrieve_demonstrations(pool, embedder, "alpha", cfg, true), DataError);

    DemoPool empty_pool({}, cfg);
    CHECK_THROWS_AS(retrieve_demonstrations(empty_pool, embedder, "alpha", cfg), DataError);
}

TEST_CASE("index sidecar: reused on matching hash, rebuilt otherwise") {
    std::mt19937_64 rng(71);
    auto records = synthetic_pool(10, rng);
    RetrievalConfig cfg;
    cfg.m = 2;
    cfg.pool_k = 4;

    const auto path = temp_path("prefalign_sidecar.json");
    auto pool = DemoPool::with_sidecar(records, cfg, path);
    CHECK(std::filesystem::exists(path));

    auto reloaded = DemoPool::load_index_sidecar(path, pool.pool_hash(), cfg);
    REQUIRE(reloaded.has_value());
    auto query = retrieval_tokens(records[0].prompt);
    for (std::size_t d = 0; d < records.size(); ++d)
        CHECK(reloaded->score(query, d) == pool.index().score(query, d));

    CHECK_FALSE(DemoPool::load_index_sidecar(path, pool.pool_hash() + 1, cfg).has_value());
    RetrievalConfig other = cfg;
    other.window_l = cfg.window_l + 1;
    CHECK_FALSE(DemoPool::load_index_sidecar(path, pool.pool_hash(), other).has_value());
    std::remove(path.c_str());
}

TEST_CASE("retrieval config validation lists all violations") {
    RetrievalConfig cfg;
    cfg.m = 5;
    cfg.pool_k = 2;
    cfg.window_l = 0;
    cfg.k1 = -1.0;
    cfg.b = 2.0;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("pool_k") != std::string::npos);
        CHECK(msg.find("window_l") != std::string::npos);
        CHECK(msg.find("k1") != std::string::npos);
        CHECK(msg.find("b must") != std::string::npos);
    }
}
