#include "prefalign/scoring.hpp"

#include "prefalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prefalign {

std::string to_string(ScorerTag tag) {
    switch (tag) {
        case ScorerTag::s: return "S";
        case ScorerTag::s_hat: return "S_hat";
        case ScorerTag::external: return "external";
        case ScorerTag::naive: return "naive";
    }
    return "S";
}

ScorerTag scorer_tag_from_string(const std::string& name) {
    if (name == "S") return ScorerTag::s;
    if (name == "S_hat") return ScorerTag::s_hat;
    if (name == "external") return ScorerTag::external;
    if (name == "naive") return ScorerTag::naive;
    throw DataError("unknown scorer tag: " + name);
}

double sequence_logprob(const SequenceScore& seq, const ScoreOptions& opts) {
    double value;
    if (opts.reading == ProbabilityReading::log_product) {
        value = seq.sum_logprob;
    } else {
        // Literal per-token probability sum; empty sequences fall back
        // to 0 so degenerate candidates stay comparable.
        if (seq.token_count == 0) return 0.0;
        double prob_sum = 0.0;
        for (const auto& t : seq.token_logprobs) prob_sum += std::exp(t.logprob);
        value = std::log(prob_sum);
    }
    if (opts.length_normalized && seq.token_count > 0)
        value /= static_cast<double>(seq.token_count);
    return value;
}

double normalized_policy_score(const SequenceScore& seq) {
    if (seq.token_count == 0)
        throw DataError("normalized policy score of a zero-length sequence");
    return seq.sum_logprob / static_cast<double>(seq.token_count);
}

ScoredCandidate contrastive_score_s(LmBackend& backend, const PromptBundle& bundle,
                                    const std::string& y, const ScoreOptions& opts) {
    auto expert = backend.score(bundle.expert_context, y);
    auto reference = backend.score(bundle.zero_shot_context, y);

    ScoredCandidate cand;
    cand.text = y;
    cand.token_count = expert.token_count;
    cand.logp_expert = sequence_logprob(expert, opts);
    cand.logp_reference = sequence_logprob(reference, opts);
    cand.score = cand.logp_expert - *cand.logp_reference;
    cand.scorer_tag = ScorerTag::s;
    return cand;
}

ScoredCandidate contrastive_score_s_hat(LmBackend& backend, const PromptBundle& bundle,
                                        const std::string& y, const ScoreOptions& opts) {
    if (!bundle.negative_context)
        throw DataError("promoted contrastive score requires a negative context");
    auto expert = backend.score(bundle.expert_context, y);
    auto negative = backend.score(*bundle.negative_context, y);

    ScoredCandidate cand;
    cand.text = y;
    cand.token_count = expert.token_count;
    cand.logp_expert = sequence_logprob(expert, opts);
    cand.logp_negative = sequence_logprob(negative, opts);
    cand.score = cand.logp_expert - *cand.logp_negative;
    cand.scorer_tag = ScorerTag::s_hat;
    return cand;
}

std::vector<ScoredCandidate> rank_candidates(const std::vector<ScoredCandidate>& candidates) {
    for (const auto& c : candidates)
        if (c.scorer_tag != candidates.front().scorer_tag)
            throw DataError("rank_candidates: mixed scorer tags");

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].score > candidates[b].score;
    });

    std::vector<ScoredCandidate> ranked;
    ranked.reserve(candidates.size());
    for (auto idx : order) ranked.push_back(candidates[idx]);
    return ranked;
}

}  // namespace prefalign
