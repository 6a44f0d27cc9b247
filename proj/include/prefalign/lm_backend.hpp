#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace prefalign {

// Sampling knobs for one generation call. Shipped defaults: 3 candidates
// under top-p 0.8, temperature 1.0.
struct GenerationParams {
    int n = 3;
    double top_p = 0.8;
    double temperature = 1.0;
    int max_tokens = 128;
    std::uint64_t seed = 0;

    // ConfigError listing every violated field at once.
    void validate() const;
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;  // nats
};

// Per-token log-probabilities of one completion under one context, plus
// their sum and count. sum_logprob == sum of entries within 1e-9.
struct SequenceScore {
    std::vector<TokenLogprob> token_logprobs;
    double sum_logprob = 0.0;
    std::size_t token_count = 0;

    static SequenceScore of(std::vector<TokenLogprob> tokens);

    // Internal-consistency check (sum, count, non-positive entries).
    void check() const;

    bool operator==(const SequenceScore&) const;
};

/**
 * Capability contract over language models.
 *
 * `score` must be deterministic: the same (context, completion) pair
 * yields an identical SequenceScore. `complete` is reproducible given
 * (context, params incl. seed) only when deterministic_completion()
 * says so. Implementations are safe for concurrent callers.
 */
class LmBackend {
public:
    virtual ~LmBackend() = default;

    virtual std::string backend_id() const = 0;
    virtual bool deterministic_completion() const = 0;

    // Exactly params.n completions, each at most params.max_tokens tokens.
    virtual std::vector<std::string> complete(const std::string& context,
                                              const GenerationParams& params) = 0;

    // Log-probabilities of the completion tokens conditioned on the
    // context plus preceding completion tokens.
    virtual SequenceScore score(const std::string& context,
                                const std::string& completion) = 0;
};

// Counts calls flowing into an inner backend. The pipeline uses one per
// run for RunRecord accounting; tests place one under the cache to see
// which queries actually reach the model.
class CountingLm : public LmBackend {
public:
    explicit CountingLm(std::shared_ptr<LmBackend> inner) : inner_(std::move(inner)) {}

    std::string backend_id() const override { return inner_->backend_id(); }
    bool deterministic_completion() const override { return inner_->deterministic_completion(); }

    std::vector<std::string> complete(const std::string& context,
                                      const GenerationParams& params) override {
        complete_calls_.fetch_add(1);
        return inner_->complete(context, params);
    }

    SequenceScore score(const std::string& context, const std::string& completion) override {
        score_calls_.fetch_add(1);
        return inner_->score(context, completion);
    }

    std::uint64_t complete_calls() const { return complete_calls_.load(); }
    std::uint64_t score_calls() const { return score_calls_.load(); }

private:
    std::shared_ptr<LmBackend> inner_;
    std::atomic<std::uint64_t> complete_calls_{0};
    std::atomic<std::uint64_t> score_calls_{0};
};

}  // namespace prefalign
