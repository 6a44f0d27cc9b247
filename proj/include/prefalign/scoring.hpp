#pragma once

/**
 * Contrastive candidate scoring.
 *
 * S contrasts the post-ICL expert against the zero-shot reference:
 * S = log p(y | expert context) - log p(y | zero-shot context). The
 * promoted variant contrasts positively-conditioned against
 * negatively-conditioned contexts instead of the reference. The additive
 * partition term of the underlying reward depends only on the prompt, so
 * it never needs computing for ranking; tests verify that cancellation
 * by exhaustive enumeration.
 */

#include "prefalign/lm_backend.hpp"
#include "prefalign/prompting.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prefalign {

enum class ScorerTag { s, s_hat, external, naive };

std::string to_string(ScorerTag tag);
ScorerTag scorer_tag_from_string(const std::string& name);

// How a sequence probability is reduced from per-token values. The
// log-product reading (sum of token log-probabilities) is the default
// and the only one consistent with the reward/policy relation; the
// literal per-token probability sum exists for comparison only.
enum class ProbabilityReading { log_product, literal_sum };

struct ScoreOptions {
    bool length_normalized = false;  // per-token mean instead of raw sum
    ProbabilityReading reading = ProbabilityReading::log_product;
};

struct ScoredCandidate {
    std::string text;
    double logp_expert = 0.0;
    std::optional<double> logp_reference;
    std::optional<double> logp_negative;
    double score = 0.0;
    ScorerTag scorer_tag = ScorerTag::s;
    std::size_t token_count = 0;
};

double sequence_logprob(const SequenceScore& seq, const ScoreOptions& opts);

// Log of the geometric-mean token probability (sum / count). Errors on
// empty sequences.
double normalized_policy_score(const SequenceScore& seq);

// S: expert minus zero-shot reference. Both components retained.
ScoredCandidate contrastive_score_s(LmBackend& backend, const PromptBundle& bundle,
                                    const std::string& y, const ScoreOptions& opts = {});

// Promoted score: positively-conditioned minus negatively-conditioned.
ScoredCandidate contrastive_score_s_hat(LmBackend& backend, const PromptBundle& bundle,
                                        const std::string& y, const ScoreOptions& opts = {});

// Descending by score, ties broken by ascending candidate index. All
// candidates must share one scorer_tag.
std::vector<ScoredCandidate> rank_candidates(const std::vector<ScoredCandidate>& candidates);

}  // namespace prefalign
