#include "prefalign/lm_backend.hpp"

#include "prefalign/errors.hpp"

#include <cmath>
#include <string>

namespace prefalign {

void GenerationParams::validate() const {
    std::string violations;
    auto add = [&](const std::string& msg) {
        if (!violations.empty()) violations += "; ";
        violations += msg;
    };
    if (n < 1) add("n must be >= 1");
    if (!(top_p > 0.0) || top_p > 1.0) add("top_p must be in (0, 1]");
    if (!(temperature > 0.0)) add("temperature must be > 0");
    if (max_tokens < 1) add("max_tokens must be >= 1");
    if (!violations.empty()) throw ConfigError("invalid generation params: " + violations);
}

SequenceScore SequenceScore::of(std::vector<TokenLogprob> tokens) {
    SequenceScore s;
    s.token_logprobs = std::move(tokens);
    s.token_count = s.token_logprobs.size();
    s.sum_logprob = 0.0;
    for (const auto& t : s.token_logprobs) s.sum_logprob += t.logprob;
    return s;
}

void SequenceScore::check() const {
    if (token_count != token_logprobs.size())
        throw DataError("sequence score: token_count disagrees with entry count");
    double sum = 0.0;
    for (const auto& t : token_logprobs) {
        if (t.logprob > 0.0)
            throw DataError("sequence score: positive log-probability for token \"" + t.token + "\"");
        sum += t.logprob;
    }
    if (std::abs(sum - sum_logprob) > 1e-9)
        throw DataError("sequence score: sum_logprob disagrees with entries");
}

bool SequenceScore::operator==(const SequenceScore& other) const {
    if (token_count != other.token_count || sum_logprob != other.sum_logprob) return false;
    if (token_logprobs.size() != other.token_logprobs.size()) return false;
    for (std::size_t i = 0; i < token_logprobs.size(); ++i) {
        if (token_logprobs[i].token != other.token_logprobs[i].token) return false;
        if (token_logprobs[i].logprob != other.token_logprobs[i].logprob) return false;
    }
    return true;
}

}  // namespace prefalign
