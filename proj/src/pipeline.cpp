#include "prefalign/pipeline.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <future>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

namespace prefalign {

using nlohmann::json;

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::s: return "S";
        case ScorerKind::s_hat: return "S_hat";
        case ScorerKind::external: return "external";
        case ScorerKind::naive_loglik: return "naive_loglik";
        case ScorerKind::random_pick: return "random";
        case ScorerKind::first: return "first";
    }
    return "S";
}

ScorerKind scorer_kind_from_string(const std::string& name) {
    if (name == "S") return ScorerKind::s;
    if (name == "S_hat") return ScorerKind::s_hat;
    if (name == "external") return ScorerKind::external;
    if (name == "naive_loglik") return ScorerKind::naive_loglik;
    if (name == "random") return ScorerKind::random_pick;
    if (name == "first") return ScorerKind::first;
    throw ConfigError("unknown scorer: " + name);
}

std::string to_string(RetrievalMode mode) {
    switch (mode) {
        case RetrievalMode::two_stage: return "two_stage";
        case RetrievalMode::random_seeded: return "random_seeded";
        case RetrievalMode::fixed_ids: return "fixed_ids";
    }
    return "two_stage";
}

RetrievalMode retrieval_mode_from_string(const std::string& name) {
    if (name == "two_stage") return RetrievalMode::two_stage;
    if (name == "random_seeded") return RetrievalMode::random_seeded;
    if (name == "fixed_ids") return RetrievalMode::fixed_ids;
    throw ConfigError("unknown retrieval mode: " + name);
}

void PipelineConfig::validate(std::vector<std::string>* violations) const {
    std::vector<std::string> local;
    auto check = [&](const std::function<void()>& fn) {
        try {
            fn();
        } catch (const Error& e) {
            local.emplace_back(e.what());
        }
    };
    check([&] { retrieval.validate(); });
    check([&] { generation.validate(); });
    if (workers < 1) local.emplace_back("workers must be >= 1");
    if (retrieval_mode != RetrievalMode::fixed_ids && !fixed_demo_ids.empty())
        local.emplace_back("fixed_demo_ids set but retrieval mode is not fixed_ids");
    check([&] {
        if (std::find(positive_style_words().begin(), positive_style_words().end(),
                      style_word) == positive_style_words().end())
            throw ConfigError("style word \"" + style_word +
                              "\" not in the positive template vocabulary");
    });
    if (negative_style_word) {
        check([&] {
            if (std::find(negative_style_words().begin(), negative_style_words().end(),
                          *negative_style_word) == negative_style_words().end())
                throw ConfigError("style word \"" + *negative_style_word +
                                  "\" not in the negative template vocabulary");
        });
    }
    if (violations) {
        violations->insert(violations->end(), local.begin(), local.end());
        return;
    }
    if (!local.empty()) {
        std::string joined;
        for (const auto& v : local) {
            if (!joined.empty()) joined += "; ";
            joined += v;
        }
        throw ConfigError("invalid pipeline config: " + joined);
    }
}

namespace {

struct ChosenDemos {
    std::vector<Demonstration> demos;
    std::vector<std::string> ids;
};

ChosenDemos choose_demonstrations(const DemoPool* pool, Embedder* embedder,
                                  const std::string& x, const PipelineConfig& cfg,
                                  std::uint64_t input_index) {
    ChosenDemos out;
    switch (cfg.retrieval_mode) {
        case RetrievalMode::two_stage: {
            if (!pool || !embedder)
                throw ConfigError(
                    "two-stage retrieval requires a demonstration pool and an embedder");
            auto result = retrieve_demonstrations(*pool, *embedder, x, cfg.retrieval,
                                                  cfg.strict);
            out.demos = result.demonstrations(*pool);
            for (const auto& sel : result.selected) out.ids.push_back(sel.id);
            return out;
        }
        case RetrievalMode::random_seeded: {
            if (!pool) throw ConfigError("random retrieval requires a demonstration pool");
            const auto& records = pool->records();
            if (records.empty()) throw DataError("demonstration pool is empty");
            std::size_t m = cfg.retrieval.m;
            if (records.size() < m) {
                if (cfg.strict)
                    throw DataError("pool has " + std::to_string(records.size()) +
                                    " records, fewer than m=" + std::to_string(m));
                m = records.size();
            }
            std::mt19937_64 rng(split_seed(cfg.seed, "retrieval", input_index));
            std::vector<std::size_t> indices(records.size());
            std::iota(indices.begin(), indices.end(), 0);
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t j =
                    i + static_cast<std::size_t>(uniform01(rng()) *
                                                 static_cast<double>(indices.size() - i));
                std::swap(indices[i], indices[j]);
            }
            for (std::size_t i = 0; i < m; ++i) {
                out.demos.push_back(demonstration_from(records[indices[i]]));
                out.ids.push_back(records[indices[i]].id);
            }
            return out;
        }
        case RetrievalMode::fixed_ids: {
            if (cfg.fixed_demo_ids.empty()) return out;
            if (!pool) throw ConfigError("fixed_ids retrieval requires a demonstration pool");
            for (const auto& id : cfg.fixed_demo_ids) {
                auto idx = pool->find_by_id(id);
                if (!idx) throw DataError("demonstration id not found in pool: " + id);
                out.demos.push_back(demonstration_from(pool->records()[*idx]));
                out.ids.push_back(id);
            }
            return out;
        }
    }
    return out;
}

void assign_ranks(std::vector<CandidateOutcome>& outcomes) {
    std::vector<std::size_t> scored_indices;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (outcomes[i].scored && !outcomes[i].error) scored_indices.push_back(i);
    std::stable_sort(scored_indices.begin(), scored_indices.end(),
                     [&](std::size_t a, std::size_t b) {
                         return outcomes[a].candidate.score > outcomes[b].candidate.score;
                     });
    for (std::size_t r = 0; r < scored_indices.size(); ++r)
        outcomes[scored_indices[r]].rank = r + 1;
}

}  // namespace

RunRecord select_best(LmBackend& backend, const DemoPool* pool, Embedder* embedder,
                      const std::string& x, const PipelineConfig& cfg,
                      const ExternalScorer* external, const std::string& input_id,
                      std::uint64_t input_index) {
    cfg.validate();
    if (cfg.scorer == ScorerKind::external && !external)
        throw ConfigError("scorer=external requires an external scorer handle");

    const auto started = std::chrono::steady_clock::now();
    CountingLm counting(std::shared_ptr<LmBackend>(&backend, [](LmBackend*) {}));

    auto chosen = choose_demonstrations(pool, embedder, x, cfg, input_index);

    BundleOptions opts;
    opts.style_word = cfg.style_word;
    opts.negative_style_word = cfg.negative_style_word;
    opts.zero_shot_header = cfg.zero_shot_header;
    opts.need_negative = cfg.scorer == ScorerKind::s_hat;
    const auto bundle = assemble_bundle(chosen.demos, x, opts);

    // Generation stage: one complete call yields all n candidates.
    GenerationParams params = cfg.generation;
    params.seed = split_seed(cfg.seed, "generation", input_index);
    auto texts = counting.complete(bundle.expert_context, params);
    if (texts.size() != static_cast<std::size_t>(params.n))
        throw CapabilityError("backend returned " + std::to_string(texts.size()) +
                              " candidates, expected " + std::to_string(params.n));

    RunRecord record;
    record.input_id = input_id;
    record.input = x;
    record.demo_ids = chosen.ids;
    record.scorer = to_string(cfg.scorer);
    record.candidates.resize(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i)
        record.candidates[i].candidate.text = texts[i];

    // Scoring stage: candidates are independent; results land in
    // candidate-index order regardless of completion order.
    const bool needs_scoring = cfg.scorer == ScorerKind::s || cfg.scorer == ScorerKind::s_hat ||
                               cfg.scorer == ScorerKind::naive_loglik ||
                               cfg.scorer == ScorerKind::external;
    if (needs_scoring) {
        auto score_one = [&](const std::string& y) -> ScoredCandidate {
            switch (cfg.scorer) {
                case ScorerKind::s:
                    return contrastive_score_s(counting, bundle, y, cfg.score_options);
                case ScorerKind::s_hat:
                    return contrastive_score_s_hat(counting, bundle, y, cfg.score_options);
                case ScorerKind::naive_loglik: {
                    auto seq = counting.score(bundle.expert_context, y);
                    ScoredCandidate cand;
                    cand.text = y;
                    cand.token_count = seq.token_count;
                    cand.logp_expert = sequence_logprob(seq, cfg.score_options);
                    cand.score = cand.logp_expert;
                    cand.scorer_tag = ScorerTag::naive;
                    return cand;
                }
                default: {
                    ScoredCandidate cand;
                    cand.text = y;
                    cand.score = (*external)(x, y);
                    cand.scorer_tag = ScorerTag::external;
                    return cand;
                }
            }
        };

        std::vector<std::future<ScoredCandidate>> futures;
        futures.reserve(texts.size());
        for (const auto& y : texts)
            futures.push_back(std::async(std::launch::async, score_one, y));

        std::vector<std::string> failures;
        for (std::size_t i = 0; i < futures.size(); ++i) {
            try {
                record.candidates[i].candidate = futures[i].get();
                record.candidates[i].scored = true;
            } catch (const std::exception& e) {
                // Strict mode propagates the original error (and class).
                if (cfg.strict) throw;
                record.candidates[i].error = e.what();
                failures.push_back("[" + std::to_string(i) + "] " + e.what());
            }
        }
        if (failures.size() == texts.size()) {
            std::string joined;
            for (const auto& f : failures) {
                if (!joined.empty()) joined += "; ";
                joined += f;
            }
            throw DataError("all candidates failed scoring: " + joined);
        }
        assign_ranks(record.candidates);
    }

    // Selection. The scored strategies keep the first candidate
    // attaining the maximum (strict > update).
    std::vector<std::size_t> alive;
    for (std::size_t i = 0; i < record.candidates.size(); ++i)
        if (!record.candidates[i].error) alive.push_back(i);

    std::size_t selected = alive.front();
    if (cfg.scorer == ScorerKind::random_pick) {
        std::mt19937_64 rng(split_seed(cfg.seed, "selection", input_index));
        selected = alive[static_cast<std::size_t>(uniform01(rng()) *
                                                  static_cast<double>(alive.size()))];
    } else if (cfg.scorer == ScorerKind::first) {
        selected = alive.front();
    } else {
        double best = record.candidates[alive.front()].candidate.score;
        for (auto idx : alive) {
            if (record.candidates[idx].candidate.score > best) {
                best = record.candidates[idx].candidate.score;
                selected = idx;
            }
        }
    }

    record.selected_index = selected;
    record.selected_text = record.candidates[selected].candidate.text;
    record.complete_calls = counting.complete_calls();
    record.score_calls = counting.score_calls();
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    return record;
}

RunRecord select_best_external(LmBackend& backend, const DemoPool* pool, Embedder* embedder,
                               const ExternalScorer& scorer, const std::string& x,
                               const PipelineConfig& cfg, const std::string& input_id,
                               std::uint64_t input_index) {
    PipelineConfig external_cfg = cfg;
    external_cfg.scorer = ScorerKind::external;
    return select_best(backend, pool, embedder, x, external_cfg, &scorer, input_id,
                       input_index);
}

std::string RunRecord::to_jsonl_line() const {
    json obj;
    obj["input_id"] = input_id;
    obj["input"] = input;
    obj["demo_ids"] = demo_ids;
    obj["scorer"] = scorer;
    json cands = json::array();
    for (const auto& outcome : candidates) {
        json c;
        c["text"] = outcome.candidate.text;
        if (outcome.error) {
            c["error"] = *outcome.error;
        } else if (outcome.scored) {
            c["scorer_tag"] = to_string(outcome.candidate.scorer_tag);
            c["score"] = outcome.candidate.score;
            c["logp_expert"] = outcome.candidate.logp_expert;
            if (outcome.candidate.logp_reference)
                c["logp_reference"] = *outcome.candidate.logp_reference;
            if (outcome.candidate.logp_negative)
                c["logp_negative"] = *outcome.candidate.logp_negative;
            if (outcome.rank) c["rank"] = *outcome.rank;
        } else {
            c["score"] = nullptr;
        }
        cands.push_back(std::move(c));
    }
    obj["candidates"] = std::move(cands);
    obj["selected_index"] = selected_index;
    obj["selected_text"] = selected_text;
    obj["complete_calls"] = complete_calls;
    obj["score_calls"] = score_calls;
    return obj.dump();
}

std::string BatchSummary::to_json_string() const {
    json obj;
    obj["total"] = total;
    obj["succeeded"] = succeeded;
    obj["failed"] = failed;
    obj["failed_ids"] = failed_ids;
    obj["mean_selected_score"] = mean_selected_score;
    obj["complete_calls"] = complete_calls;
    obj["score_calls"] = score_calls;
    if (has_cache) obj["cache_hit_rate"] = cache_hit_rate;
    obj["wall_ms"] = wall_ms;
    return obj.dump(2);
}

BatchSummary run_batch(LmBackend& backend, const DemoPool* pool, Embedder* embedder,
                       const std::vector<BatchInput>& inputs, const PipelineConfig& cfg,
                       std::ostream& out, std::shared_ptr<ScoreCache> cache,
                       const ExternalScorer* external) {
    cfg.validate();
    if (inputs.empty()) throw DataError("batch inputs are empty");

    const auto started = std::chrono::steady_clock::now();
    const CacheStats cache_before = cache ? cache->stats() : CacheStats{};

    struct ItemResult {
        std::string line;
        bool failed = false;
        std::string failed_id;
        double selected_score = 0.0;
        bool has_score = false;
        std::uint64_t complete_calls = 0;
        std::uint64_t score_calls = 0;
    };

    std::vector<std::optional<ItemResult>> results(inputs.size());
    std::mutex emit_mutex;
    std::size_t next_emit = 0;

    BatchSummary summary;
    summary.total = inputs.size();
    double selected_score_sum = 0.0;

    std::exception_ptr first_error;
    std::size_t first_error_index = inputs.size();
    std::atomic<bool> aborted{false};
    std::atomic<std::size_t> next_input{0};
    std::mutex error_mutex;

    auto flush_ready = [&]() {
        // Caller holds emit_mutex.
        while (next_emit < results.size() && results[next_emit]) {
            const auto& r = *results[next_emit];
            out << r.line << '\n';
            if (r.failed) {
                ++summary.failed;
                summary.failed_ids.push_back(r.failed_id);
            } else {
                ++summary.succeeded;
                if (r.has_score) selected_score_sum += r.selected_score;
            }
            summary.complete_calls += r.complete_calls;
            summary.score_calls += r.score_calls;
            ++next_emit;
        }
    };

    auto worker = [&]() {
        while (true) {
            if (aborted.load()) return;
            const std::size_t i = next_input.fetch_add(1);
            if (i >= inputs.size()) return;

            ItemResult item;
            try {
                auto record = select_best(backend, pool, embedder, inputs[i].text, cfg,
                                          external, inputs[i].id, i);
                item.line = record.to_jsonl_line();
                item.complete_calls = record.complete_calls;
                item.score_calls = record.score_calls;
                if (record.candidates[record.selected_index].scored) {
                    item.selected_score =
                        record.candidates[record.selected_index].candidate.score;
                    item.has_score = true;
                }
            } catch (const std::exception& e) {
                if (cfg.strict) {
                    std::lock_guard lock(error_mutex);
                    if (i < first_error_index) {
                        first_error_index = i;
                        first_error = std::current_exception();
                    }
                    aborted.store(true);
                    return;
                }
                const std::string klass = [&] {
                    if (auto* err = dynamic_cast<const Error*>(&e)) return err->error_class();
                    return std::string("error");
                }();
                json obj;
                obj["input_id"] = inputs[i].id;
                obj["error"] = klass + ": " + e.what();
                item.line = obj.dump();
                item.failed = true;
                item.failed_id = inputs[i].id;
            }

            std::lock_guard lock(emit_mutex);
            results[i] = std::move(item);
            flush_ready();
        }
    };

    const std::size_t worker_count = std::max<std::size_t>(
        1, std::min<std::size_t>(cfg.workers, inputs.size()));
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (first_error) std::rethrow_exception(first_error);

    summary.mean_selected_score =
        summary.succeeded > 0 ? selected_score_sum / static_cast<double>(summary.succeeded)
                              : 0.0;
    if (cache) {
        summary.has_cache = true;
        const auto after = cache->stats();
        const auto hits = after.hits - cache_before.hits;
        const auto misses = after.misses - cache_before.misses;
        summary.cache_hit_rate =
            hits + misses == 0 ? 0.0
                               : static_cast<double>(hits) / static_cast<double>(hits + misses);
    }
    summary.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started)
                          .count();
    out.flush();
    return summary;
}

std::vector<BatchInput> load_batch_inputs(const std::string& path) {
    std::vector<BatchInput> inputs;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": malformed JSON object");
        auto it = obj.find("prompt");
        if (it == obj.end() || !it->is_string())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": missing string field \"prompt\"");
        BatchInput input;
        input.text = it->get<std::string>();
        if (auto idit = obj.find("id"); idit != obj.end() && idit->is_string())
            input.id = idit->get<std::string>();
        else
            input.id = std::to_string(line_no);
        inputs.push_back(std::move(input));
    }
    return inputs;
}

}  // namespace prefalign
