#include "prefalign/eval.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/scoring.hpp"
#include "prefalign/toy_lm.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace prefalign;

namespace {

RankedQuery make_query(std::string id, std::vector<double> scores,
                       std::vector<std::size_t> gold) {
    RankedQuery q;
    q.query_id = std::move(id);
    q.candidates.resize(scores.size(), "c");
    q.predicted_scores = std::move(scores);
    q.gold_ranking = std::move(gold);
    return q;
}

std::vector<RankedQuery> random_queries(std::size_t n, std::mt19937_64& rng) {
    std::vector<RankedQuery> queries;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 2 + rng() % 4;
        std::vector<double> scores;
        for (std::size_t c = 0; c < k; ++c)
            scores.push_back(static_cast<double>(rng() % 100) / 10.0);
        std::vector<std::size_t> gold(k);
        std::iota(gold.begin(), gold.end(), 0);
        for (std::size_t c = k; c > 1; --c) std::swap(gold[c - 1], gold[rng() % c]);
        queries.push_back(make_query("q" + std::to_string(i), scores, gold));
    }
    return queries;
}

}  // namespace

TEST_CASE("MRR: perfect ranker scores 1.0") {
    std::vector<RankedQuery> queries = {
        make_query("a", {3.0, 2.0, 1.0}, {0, 1, 2}),
        make_query("b", {0.1, 0.9}, {1, 0}),
    };
    CHECK(mean_reciprocal_rank(queries) == doctest::Approx(1.0));
}

TEST_CASE("MRR: gold-best placed second contributes one half") {
    auto q = make_query("a", {2.0, 3.0, 1.0}, {0, 1, 2});
    CHECK(predicted_rank_of_gold_best(q) == 2);
    CHECK(mean_reciprocal_rank({q}) == doctest::Approx(0.5));
}

TEST_CASE("MRR: ties resolved by candidate index") {
    // Scores tie; candidate 0 precedes candidate 1, so gold-best 1 ranks second.
    auto q = make_query("a", {1.0, 1.0}, {1, 0});
    CHECK(predicted_rank_of_gold_best(q) == 2);
}

TEST_CASE("MRR: matches an independent recomputation on 200 random queries") {
    std::mt19937_64 rng(2024);
    auto queries = random_queries(200, rng);
    CHECK(std::abs(mean_reciprocal_rank(queries) - oracles::oracle_mrr(queries)) < 1e-12);
}

TEST_CASE("MRR: bounds and the perfect-iff-top1 property") {
    std::mt19937_64 rng(9);
    auto queries = random_queries(50, rng);
    double mrr = mean_reciprocal_rank(queries);
    CHECK(mrr > 0.0);
    CHECK(mrr <= 1.0);

    bool all_top1 = true;
    for (const auto& q : queries)
        if (predicted_rank_of_gold_best(q) != 1) all_top1 = false;
    CHECK((mrr == 1.0) == all_top1);
}

TEST_CASE("MRR: invariant under strictly increasing score transforms") {
    std::mt19937_64 rng(77);
    auto queries = random_queries(60, rng);
    double base = mean_reciprocal_rank(queries);
    auto transformed = queries;
    for (auto& q : transformed)
        for (auto& s : q.predicted_scores) s = std::exp(s / 10.0) + 3.0;
    CHECK(mean_reciprocal_rank(transformed) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("MRR: empty input and malformed gold are errors") {
    CHECK_THROWS_AS(mean_reciprocal_rank({}), DataError);
    auto q = make_query("a", {1.0, 2.0}, {0, 0});
    CHECK_THROWS_AS(mean_reciprocal_rank({q}), DataError);
}

TEST_CASE("nll_mean_loss: arithmetic and the mean reduction") {
    // Backend stub: token logprobs -1 and -3 for a two-token response.
    struct Stub : LmBackend {
        std::string backend_id() const override { return "stub"; }
        bool deterministic_completion() const override { return true; }
        std::vector<std::string> complete(const std::string&, const GenerationParams&) override {
            return {};
        }
        SequenceScore score(const std::string&, const std::string&) override {
            return SequenceScore::of({{"a", -1.0}, {"b", -3.0}});
        }
    } stub;

    auto report = nll_mean_loss(stub, {{"ctx", "a b"}});
    REQUIRE(report.per_record.size() == 1);
    CHECK(report.per_record[0].mean_nll == doctest::Approx(2.0));
    CHECK(report.aggregate_mean == doctest::Approx(2.0));

    // Equals the negated normalized policy score to machine precision.
    auto seq = stub.score("ctx", "a b");
    CHECK(std::abs(report.per_record[0].mean_nll + normalized_policy_score(seq)) < 1e-12);
}

TEST_CASE("nll_mean_loss: near-certain toy LM gives near-zero loss") {
    oracles::ToySpec spec;
    spec.order = 1;
    spec.alpha = 0.0001;
    spec.adapt = 0.0;
    spec.vocab = {"yes"};
    spec.counts = {{{}, "yes", 10000.0}};
    auto lm = spec.build();
    auto report = nll_mean_loss(lm, {{"", "yes yes yes"}});
    CHECK(report.aggregate_mean < 1e-3);  // bounded by the smoothing mass
    CHECK(report.aggregate_mean >= 0.0);
}

TEST_CASE("nll_mean_loss: in-distribution responses lose less than out-of-distribution") {
    // Two models over one vocabulary with opposed preferences; samples
    // from either are scorable under the first.
    oracles::ToySpec spec_a;
    spec_a.adapt = 0.0;
    spec_a.vocab = {"sun", "moon", "bright", "dark"};
    spec_a.counts = {{{"sun"}, "bright", 8.0},  {{"bright"}, "</s>", 8.0},
                     {{"moon"}, "dark", 1.0},   {{"dark"}, "</s>", 1.0},
                     {{}, "sun", 8.0},          {{}, "moon", 1.0}};
    oracles::ToySpec spec_b = spec_a;
    spec_b.counts = {{{"sun"}, "bright", 1.0},  {{"bright"}, "</s>", 1.0},
                     {{"moon"}, "dark", 8.0},   {{"dark"}, "</s>", 8.0},
                     {{}, "sun", 1.0},          {{}, "moon", 8.0}};
    auto lm_a = spec_a.build();
    auto lm_b = spec_b.build();

    GenerationParams params;
    params.n = 30;
    params.top_p = 1.0;
    params.max_tokens = 4;
    params.seed = 4;
    std::vector<std::pair<std::string, std::string>> set_a, set_b;
    for (const auto& y : lm_a.complete("", params))
        if (!y.empty()) set_a.push_back({"", y});
    for (const auto& y : lm_b.complete("", params))
        if (!y.empty()) set_b.push_back({"", y});
    REQUIRE(!set_a.empty());
    REQUIRE(!set_b.empty());

    CHECK(nll_mean_loss(lm_a, set_a).aggregate_mean <
          nll_mean_loss(lm_a, set_b).aggregate_mean);
}

TEST_CASE("nll_mean_loss: empty responses are rejected") {
    oracles::ToySpec spec;
    spec.vocab = {"a"};
    auto lm = spec.build();
    CHECK_THROWS_AS(nll_mean_loss(lm, {{"ctx", ""}}), DataError);
}

TEST_CASE("consistency report: self-agreement, serialization, id mismatch") {
    std::mt19937_64 rng(15);
    auto queries = random_queries(30, rng);

    std::map<std::string, std::vector<RankedQuery>> runs;
    runs["S"] = queries;
    runs["naive"] = queries;
    for (auto& q : runs["naive"])
        for (auto& s : q.predicted_scores) s = -s;

    auto report = consistency_report(runs);
    REQUIRE(report.per_scorer.size() == 2);
    CHECK(report.per_scorer[0].scorer == "S");

    // A scorer compared with itself agrees everywhere.
    std::map<std::string, std::vector<RankedQuery>> self_runs;
    self_runs["A"] = queries;
    self_runs["B"] = queries;
    auto self_report = consistency_report(self_runs);
    REQUIRE(self_report.pairwise.size() == 1);
    CHECK(self_report.pairwise[0].top1_agreement == doctest::Approx(1.0));

    // Lossless serialize/parse round trip.
    auto text = report.to_json_string();
    auto parsed = ConsistencyReport::from_json_string(text);
    CHECK(parsed == report);
    CHECK(parsed.to_json_string() == text);

    // Mismatched query ids are rejected.
    auto broken = runs;
    broken["naive"][0].query_id = "zzz";
    CHECK_THROWS_AS(consistency_report(broken), DataError);
}

TEST_CASE("gold and runs files load and join") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path();
    auto gold_path = (dir / "prefalign_gold.jsonl").string();
    auto runs_path = (dir / "prefalign_runs.jsonl").string();
    write_file(gold_path,
               R"({"query_id": "q1", "candidates": ["a", "b"], "gold_ranking": [1, 0]})" "\n");
    write_file(runs_path,
               R"({"query_id": "q1", "predicted_scores": [0.1, 0.9], "scorer_tag": "S"})" "\n"
               R"({"query_id": "q1", "predicted_scores": [0.9, 0.1], "scorer_tag": "naive"})" "\n");

    auto gold = load_gold_queries(gold_path);
    REQUIRE(gold.size() == 1);
    auto runs = load_scored_runs(runs_path, gold);
    REQUIRE(runs.size() == 2);
    CHECK(mean_reciprocal_rank(runs["S"]) == doctest::Approx(1.0));
    CHECK(mean_reciprocal_rank(runs["naive"]) == doctest::Approx(0.5));

    std::remove(gold_path.c_str());
    std::remove(runs_path.c_str());
}
