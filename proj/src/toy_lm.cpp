#include "prefalign/toy_lm.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace prefalign {

using nlohmann::json;

namespace {

constexpr char kGramSep = '\x1f';

std::string join_gram(const std::vector<std::string>& tokens, std::size_t begin,
                      std::size_t end) {
    std::string key;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) key += kGramSep;
        key += tokens[i];
    }
    return key;
}

// Walks a token sequence while maintaining the context-adaptation counts
// (gram -> next-token occurrences within the sequence so far). push/pop
// are exact inverses so the enumeration DFS can share one state.
class AdaptiveState {
public:
    AdaptiveState(const ToyNgramConfig& cfg,
                  const std::unordered_map<std::string, std::size_t>& vocab_index)
        : cfg_(cfg), vocab_index_(vocab_index) {}

    void push(const std::string& token) {
        if (cfg_.adapt_weight > 0.0) {
            auto it = vocab_index_.find(token);
            if (it != vocab_index_.end()) adapt_[current_key()][it->second] += cfg_.adapt_weight;
        }
        tokens_.push_back(token);
    }

    void pop() {
        const std::string token = tokens_.back();
        tokens_.pop_back();
        if (cfg_.adapt_weight > 0.0) {
            auto it = vocab_index_.find(token);
            if (it != vocab_index_.end()) adapt_[current_key()][it->second] -= cfg_.adapt_weight;
        }
    }

    std::string current_key() const {
        std::size_t gram_len = std::min<std::size_t>(
            tokens_.size(), static_cast<std::size_t>(cfg_.order - 1));
        return join_gram(tokens_, tokens_.size() - gram_len, tokens_.size());
    }

    const std::map<std::size_t, double>* adaptation_counts(const std::string& key) const {
        auto it = adapt_.find(key);
        return it == adapt_.end() ? nullptr : &it->second;
    }

private:
    const ToyNgramConfig& cfg_;
    const std::unordered_map<std::string, std::size_t>& vocab_index_;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::map<std::size_t, double>> adapt_;
};

}  // namespace

void ToyNgramConfig::validate() const {
    if (order < 1) throw ConfigError("toy LM order must be >= 1");
    if (!(smoothing_alpha > 0.0)) throw ConfigError("toy LM smoothing_alpha must be > 0");
    if (adapt_weight < 0.0) throw ConfigError("toy LM adapt_weight must be >= 0");
    if (eos_token.empty()) throw ConfigError("toy LM eos_token must be non-empty");
}

ToyNgramLm::ToyNgramLm(ToyNgramConfig cfg, std::vector<std::string> vocabulary)
    : cfg_(std::move(cfg)), vocab_(std::move(vocabulary)) {
    cfg_.validate();
    if (std::find(vocab_.begin(), vocab_.end(), cfg_.eos_token) == vocab_.end())
        vocab_.push_back(cfg_.eos_token);
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        if (vocab_[i].empty()) throw ConfigError("toy LM vocabulary token must be non-empty");
        if (!vocab_index_.emplace(vocab_[i], i).second)
            throw ConfigError("duplicate vocabulary token: " + vocab_[i]);
    }
}

void ToyNgramLm::add_count(const std::vector<std::string>& gram, const std::string& token,
                           double count) {
    if (gram.size() > static_cast<std::size_t>(cfg_.order - 1))
        throw ConfigError("gram longer than order-1");
    if (!vocab_index_.count(token))
        throw ConfigError("count target not in vocabulary: " + token);
    if (!(count >= 0.0)) throw ConfigError("counts must be non-negative");
    counts_[join_gram(gram, 0, gram.size())][token] += count;
}

ToyNgramLm ToyNgramLm::fit(ToyNgramConfig cfg, const std::vector<std::string>& lines) {
    std::vector<std::string> vocab;
    std::unordered_map<std::string, bool> seen;
    for (const auto& line : lines) {
        for (auto& tok : split_whitespace(line)) {
            if (!seen[tok]) {
                seen[tok] = true;
                vocab.push_back(tok);
            }
        }
    }
    ToyNgramLm lm(std::move(cfg), std::move(vocab));
    const std::size_t gram_max = static_cast<std::size_t>(lm.cfg_.order - 1);
    for (const auto& line : lines) {
        auto tokens = split_whitespace(line);
        tokens.push_back(lm.cfg_.eos_token);
        for (std::size_t p = 0; p < tokens.size(); ++p) {
            std::size_t gram_len = std::min(p, gram_max);
            std::vector<std::string> gram(
                tokens.begin() + static_cast<std::ptrdiff_t>(p - gram_len),
                tokens.begin() + static_cast<std::ptrdiff_t>(p));
            lm.add_count(gram, tokens[p], 1.0);
        }
    }
    return lm;
}

std::vector<double> ToyNgramLm::distribution_impl(
    const std::string& gram_key, const std::map<std::size_t, double>* adapt) const {
    std::vector<double> numerators(vocab_.size(), cfg_.smoothing_alpha);
    if (auto it = counts_.find(gram_key); it != counts_.end()) {
        for (const auto& [token, count] : it->second)
            numerators[vocab_index_.at(token)] += count;
    }
    if (adapt) {
        for (const auto& [idx, count] : *adapt) numerators[idx] += count;
    }
    // Dividing by the numerator sum keeps the conditional summing to 1 to
    // machine precision.
    double denom = std::accumulate(numerators.begin(), numerators.end(), 0.0);
    std::vector<double> probs(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i) probs[i] = numerators[i] / denom;
    return probs;
}

std::vector<double> ToyNgramLm::next_token_distribution(
    const std::vector<std::string>& history) const {
    AdaptiveState state(cfg_, vocab_index_);
    for (const auto& tok : history) state.push(tok);
    const std::string key = state.current_key();
    return distribution_impl(key, state.adaptation_counts(key));
}

double ToyNgramLm::token_probability(const std::vector<std::string>& history,
                                     const std::string& token) const {
    auto it = vocab_index_.find(token);
    if (it == vocab_index_.end()) throw DataError("token not in toy-LM vocabulary: " + token);
    return next_token_distribution(history)[it->second];
}

std::string ToyNgramLm::backend_id() const {
    return "toy-" + to_hex(fnv1a64(to_json_string()));
}

SequenceScore ToyNgramLm::score(const std::string& context, const std::string& completion) {
    AdaptiveState state(cfg_, vocab_index_);
    for (const auto& tok : split_whitespace(context)) state.push(tok);

    std::vector<TokenLogprob> entries;
    for (const auto& tok : split_whitespace(completion)) {
        auto it = vocab_index_.find(tok);
        if (it == vocab_index_.end())
            throw DataError("completion token not in toy-LM vocabulary: " + tok);
        const std::string key = state.current_key();
        auto probs = distribution_impl(key, state.adaptation_counts(key));
        entries.push_back({tok, std::log(probs[it->second])});
        state.push(tok);
    }
    return SequenceScore::of(std::move(entries));
}

std::vector<std::string> ToyNgramLm::complete(const std::string& context,
                                              const GenerationParams& params) {
    params.validate();
    std::mt19937_64 rng(params.seed);
    const std::size_t eos_idx = vocab_index_.at(cfg_.eos_token);
    const auto context_tokens = split_whitespace(context);

    std::vector<std::string> completions;
    completions.reserve(static_cast<std::size_t>(params.n));
    for (int c = 0; c < params.n; ++c) {
        AdaptiveState state(cfg_, vocab_index_);
        for (const auto& tok : context_tokens) state.push(tok);

        std::string completion;
        for (int step = 0; step < params.max_tokens; ++step) {
            const std::string key = state.current_key();
            auto probs = distribution_impl(key, state.adaptation_counts(key));

            // Temperature-scale, truncate to the nucleus, renormalize
            // within it.
            std::vector<double> weights(probs.size());
            if (params.temperature == 1.0) {
                weights = probs;
            } else {
                for (std::size_t i = 0; i < probs.size(); ++i)
                    weights[i] = std::exp(std::log(probs[i]) / params.temperature);
            }
            double total = std::accumulate(weights.begin(), weights.end(), 0.0);

            std::vector<std::size_t> order(weights.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return weights[a] > weights[b];
            });

            double cutoff = params.top_p * total;
            double in_nucleus = 0.0;
            std::size_t nucleus_len = 0;
            for (std::size_t i = 0; i < order.size(); ++i) {
                in_nucleus += weights[order[i]];
                nucleus_len = i + 1;
                if (in_nucleus >= cutoff - 1e-12) break;
            }

            double u = uniform01(rng()) * in_nucleus;
            double walk = 0.0;
            std::size_t picked = order[nucleus_len - 1];
            for (std::size_t i = 0; i < nucleus_len; ++i) {
                walk += weights[order[i]];
                if (u < walk) {
                    picked = order[i];
                    break;
                }
            }

            if (picked == eos_idx) break;
            if (!completion.empty()) completion += ' ';
            completion += vocab_[picked];
            state.push(vocab_[picked]);
        }
        completions.push_back(std::move(completion));
    }
    return completions;
}

std::string ToyNgramLm::to_json_string() const {
    json obj;
    obj["order"] = cfg_.order;
    obj["smoothing_alpha"] = cfg_.smoothing_alpha;
    obj["adapt_weight"] = cfg_.adapt_weight;
    obj["eos_token"] = cfg_.eos_token;
    obj["vocabulary"] = vocab_;
    json counts = json::object();
    for (const auto& [key, per_token] : counts_) {
        json inner = json::object();
        for (const auto& [token, count] : per_token) inner[token] = count;
        counts[key] = std::move(inner);
    }
    obj["counts"] = std::move(counts);
    return obj.dump(2);
}

ToyNgramLm ToyNgramLm::from_json_string(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw DataError("malformed toy-LM JSON");
    try {
        ToyNgramConfig cfg;
        cfg.order = obj.at("order").get<int>();
        cfg.smoothing_alpha = obj.at("smoothing_alpha").get<double>();
        cfg.adapt_weight = obj.at("adapt_weight").get<double>();
        cfg.eos_token = obj.at("eos_token").get<std::string>();
        auto vocab = obj.at("vocabulary").get<std::vector<std::string>>();
        ToyNgramLm lm(cfg, std::move(vocab));
        for (const auto& [key, per_token] : obj.at("counts").items()) {
            std::vector<std::string> gram;
            if (!key.empty()) {
                std::size_t start = 0;
                while (true) {
                    std::size_t sep = key.find(kGramSep, start);
                    gram.push_back(key.substr(start, sep - start));
                    if (sep == std::string::npos) break;
                    start = sep + 1;
                }
            }
            for (const auto& [token, count] : per_token.items())
                lm.add_count(gram, token, count.get<double>());
        }
        return lm;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed toy-LM JSON: ") + e.what());
    }
}

void ToyNgramLm::save(const std::string& path) const { write_file(path, to_json_string()); }

ToyNgramLm ToyNgramLm::load(const std::string& path) {
    return from_json_string(read_file(path));
}

std::map<std::string, double> enumerate_distribution(const ToyNgramLm& lm,
                                                     const std::string& context,
                                                     int max_len) {
    if (max_len < 0) throw ConfigError("max_len must be >= 0");
    double sequences = std::pow(static_cast<double>(lm.vocabulary().size()),
                                static_cast<double>(max_len));
    if (sequences > 1e6)
        throw DataError("enumeration guard exceeded: |vocabulary|^max_len > 10^6");

    const auto& vocab = lm.vocabulary();
    const auto& eos = lm.config().eos_token;

    std::map<std::string, double> result;
    std::vector<std::string> body;

    // DFS over completion bodies; every node contributes its
    // EOS-terminated mass.
    std::function<void(std::vector<std::string>&, double, int)> walk =
        [&](std::vector<std::string>& history, double prefix_prob, int depth) {
            auto dist = lm.next_token_distribution(history);
            for (std::size_t i = 0; i < vocab.size(); ++i) {
                if (vocab[i] == eos) {
                    std::string key;
                    for (std::size_t b = 0; b < body.size(); ++b) {
                        if (b) key += ' ';
                        key += body[b];
                    }
                    result[key] += prefix_prob * dist[i];
                } else if (depth < max_len) {
                    body.push_back(vocab[i]);
                    history.push_back(vocab[i]);
                    walk(history, prefix_prob * dist[i], depth + 1);
                    history.pop_back();
                    body.pop_back();
                }
            }
        };

    auto history = split_whitespace(context);
    walk(history, 1.0, 0);
    return result;
}

}  // namespace prefalign
