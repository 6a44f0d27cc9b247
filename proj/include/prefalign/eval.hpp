#pragma once

/**
 * Ranker-consistency evaluation against externally produced gold
 * orderings, plus the demonstration-distribution NLL analysis.
 */

#include "prefalign/lm_backend.hpp"

#include <map>
#include <string>
#include <vector>

namespace prefalign {

struct RankedQuery {
    std::string query_id;
    std::vector<std::string> candidates;
    std::vector<std::size_t> gold_ranking;  // permutation, best first
    std::vector<double> predicted_scores;

    void validate() const;
};

// 1-based position of the gold-best candidate in the descending-score
// predicted order (ties by candidate index).
std::size_t predicted_rank_of_gold_best(const RankedQuery& query);

double mean_reciprocal_rank(const std::vector<RankedQuery>& queries);

struct LossRecord {
    std::string id;
    double mean_nll = 0.0;
    std::size_t token_count = 0;
};

struct LossReport {
    std::vector<LossRecord> per_record;
    double aggregate_mean = 0.0;
};

// Per record: -sum_logprob / token_count of the response under the
// context (mean rather than sum reduction).
LossReport nll_mean_loss(LmBackend& backend,
                         const std::vector<std::pair<std::string, std::string>>& records);

struct ScorerReport {
    std::string scorer;
    double mrr = 0.0;
    // Mean Spearman correlation between predicted and gold orders.
    // Auxiliary output; not part of the consistency methodology.
    double rank_corr_aux = 0.0;
};

struct PairAgreement {
    std::string scorer_a;
    std::string scorer_b;
    double top1_agreement = 0.0;
};

struct ConsistencyReport {
    std::vector<ScorerReport> per_scorer;
    std::vector<PairAgreement> pairwise;

    std::string to_json_string() const;
    static ConsistencyReport from_json_string(const std::string& text);
    std::string to_table() const;

    bool operator==(const ConsistencyReport&) const;
};

// All scorers must cover the same query ids.
ConsistencyReport consistency_report(
    const std::map<std::string, std::vector<RankedQuery>>& scorer_runs);

// Gold-ranking JSONL: {query_id, candidates, gold_ranking}; runs JSONL:
// {query_id, predicted_scores, scorer_tag?}.
std::vector<RankedQuery> load_gold_queries(const std::string& path);
std::map<std::string, std::vector<RankedQuery>> load_scored_runs(
    const std::string& runs_path, const std::vector<RankedQuery>& gold);

}  // namespace prefalign
