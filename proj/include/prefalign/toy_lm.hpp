#pragma once

/**
 * Deterministic smoothed n-gram language model over whitespace tokens.
 *
 * Next-token distributions mix a static count table with counts
 * accumulated from the sequence seen so far (context adaptation), so
 * demonstrations placed earlier in the context genuinely shift the
 * conditional distribution of later tokens. The adaptation counts grow
 * over the full preceding sequence (context plus consumed completion
 * tokens), which keeps the probability chain rule exact.
 *
 * Add-alpha smoothing keeps every vocabulary token at positive
 * probability; conditionals sum to 1 to machine precision for every
 * context. Sampling, scoring and enumeration all share one
 * next-token-distribution code path.
 */

#include "prefalign/lm_backend.hpp"

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace prefalign {

struct ToyNgramConfig {
    int order = 2;                 // n-gram order, >= 1
    double smoothing_alpha = 0.1;  // > 0
    double adapt_weight = 1.0;     // >= 0; 0 disables context adaptation
    std::string eos_token = "</s>";

    void validate() const;
};

class ToyNgramLm : public LmBackend {
public:
    // The vocabulary is fixed at construction; the end-of-sequence token
    // is appended when absent.
    ToyNgramLm(ToyNgramConfig cfg, std::vector<std::string> vocabulary);

    // Fractional counts are allowed so tests can construct exact
    // conditionals. The gram is the (order-1)-token left context.
    void add_count(const std::vector<std::string>& gram, const std::string& token,
                   double count);

    // Counts n-grams from each line (EOS appended per line); words not in
    // the vocabulary are added to it.
    static ToyNgramLm fit(ToyNgramConfig cfg, const std::vector<std::string>& lines);

    const std::vector<std::string>& vocabulary() const { return vocab_; }
    const ToyNgramConfig& config() const { return cfg_; }

    // Distribution over the vocabulary (in vocabulary order) given the
    // full preceding token sequence.
    std::vector<double> next_token_distribution(const std::vector<std::string>& history) const;

    double token_probability(const std::vector<std::string>& history,
                             const std::string& token) const;

    std::string backend_id() const override;
    bool deterministic_completion() const override { return true; }
    std::vector<std::string> complete(const std::string& context,
                                      const GenerationParams& params) override;
    SequenceScore score(const std::string& context, const std::string& completion) override;

    std::string to_json_string() const;
    static ToyNgramLm from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static ToyNgramLm load(const std::string& path);

private:
    std::vector<double> distribution_impl(const std::string& gram_key,
                                          const std::map<std::size_t, double>* adapt) const;

    ToyNgramConfig cfg_;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::size_t> vocab_index_;
    // gram key (tokens joined with \x1f) -> per-vocab-token counts
    std::map<std::string, std::map<std::string, double>> counts_;
};

// Exhaustive map over every completion that terminates with EOS within
// max_len (non-EOS) tokens, with its probability under `context`. The
// map key is the completion text (tokens joined with single spaces; the
// empty completion is ""). Probabilities include the terminating EOS
// step, so entries are mutually exclusive and total at most 1. Refuses
// when |vocab|^max_len exceeds 10^6.
std::map<std::string, double> enumerate_distribution(const ToyNgramLm& lm,
                                                     const std::string& context,
                                                     int max_len);

}  // namespace prefalign
