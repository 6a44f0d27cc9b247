#pragma once

/**
 * Two-stage inference pipeline: retrieve demonstrations, render the ICL
 * contexts, sample n candidates from the expert context (Generation),
 * score every candidate (Scoring) and return the first candidate
 * attaining the maximal score.
 *
 * Per input, the Generation stage issues exactly one complete call; the
 * Scoring stage issues 2n score calls for the contrastive scorers and n
 * for the naive one. Batch items run concurrently but are emitted in
 * input order, and all randomness derives from one root seed split per
 * subsystem, so runs are byte-reproducible.
 */

#include "prefalign/lm_backend.hpp"
#include "prefalign/retrieval.hpp"
#include "prefalign/score_cache.hpp"
#include "prefalign/scoring.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace prefalign {

enum class ScorerKind { s, s_hat, external, naive_loglik, random_pick, first };
enum class RetrievalMode { two_stage, random_seeded, fixed_ids };

std::string to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(const std::string& name);
std::string to_string(RetrievalMode mode);
RetrievalMode retrieval_mode_from_string(const std::string& name);

using ExternalScorer = std::function<double(const std::string& x, const std::string& y)>;

struct PipelineConfig {
    RetrievalMode retrieval_mode = RetrievalMode::two_stage;
    RetrievalConfig retrieval;
    std::vector<std::string> fixed_demo_ids;  // retrieval_mode == fixed_ids
    GenerationParams generation;
    ScorerKind scorer = ScorerKind::s;
    ScoreOptions score_options;
    std::string style_word = "polite";
    std::optional<std::string> negative_style_word;
    bool zero_shot_header = false;
    bool strict = true;
    std::uint64_t seed = 0;
    std::size_t workers = 4;

    // Appends violations instead of throwing when `violations` is given,
    // so config errors can be reported all at once.
    void validate(std::vector<std::string>* violations = nullptr) const;
};

struct CandidateOutcome {
    ScoredCandidate candidate;
    bool scored = false;               // false for the random/first strategies
    std::optional<std::size_t> rank;   // 1-based, among successfully scored candidates
    std::optional<std::string> error;  // set when scoring this candidate failed
};

struct RunRecord {
    std::string input_id;
    std::string input;
    std::vector<std::string> demo_ids;
    std::string scorer;
    std::vector<CandidateOutcome> candidates;
    std::size_t selected_index = 0;
    std::string selected_text;
    std::uint64_t complete_calls = 0;
    std::uint64_t score_calls = 0;
    // Telemetry only; never serialized, so identical runs stay
    // byte-identical.
    double wall_ms = 0.0;

    std::string to_jsonl_line() const;
};

struct BatchInput {
    std::string id;
    std::string text;
};

struct BatchSummary {
    std::size_t total = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::vector<std::string> failed_ids;
    double mean_selected_score = 0.0;
    std::uint64_t complete_calls = 0;
    std::uint64_t score_calls = 0;
    bool has_cache = false;
    double cache_hit_rate = 0.0;
    double wall_ms = 0.0;

    std::string to_json_string() const;
};

// pool/embedder may be null when the config never touches them
// (fixed_ids or random_seeded retrieval with fixed_ids... respectively);
// passing null with two_stage retrieval is a ConfigError.
RunRecord select_best(LmBackend& backend, const DemoPool* pool, Embedder* embedder,
                      const std::string& x, const PipelineConfig& cfg,
                      const ExternalScorer* external = nullptr,
                      const std::string& input_id = "1", std::uint64_t input_index = 0);

// Identical Generation stage; selection by the external scalar.
RunRecord select_best_external(LmBackend& backend, const DemoPool* pool, Embedder* embedder,
                               const ExternalScorer& scorer, const std::string& x,
                               const PipelineConfig& cfg, const std::string& input_id = "1",
                               std::uint64_t input_index = 0);

BatchSummary run_batch(LmBackend& backend, const DemoPool* pool, Embedder* embedder,
                       const std::vector<BatchInput>& inputs, const PipelineConfig& cfg,
                       std::ostream& out, std::shared_ptr<ScoreCache> cache = nullptr,
                       const ExternalScorer* external = nullptr);

std::vector<BatchInput> load_batch_inputs(const std::string& path);

}  // namespace prefalign
