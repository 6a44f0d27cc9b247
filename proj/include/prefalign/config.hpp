#pragma once

/**
 * Application configuration: backend/embedder descriptors, pipeline
 * settings, length filter and cache path. Shipped defaults follow the
 * reference setup: m=2 demonstrations, n=3 candidates, top-p 0.8, a
 * 20-document BM25 shortlist and 320/128 length budgets; window_l=64 is
 * a local default, not part of that setup.
 */

#include "prefalign/corpus.hpp"
#include "prefalign/lm_backend.hpp"
#include "prefalign/pipeline.hpp"
#include "prefalign/retrieval.hpp"
#include "prefalign/score_cache.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prefalign {

struct BackendDescriptor {
    std::string type = "toy";  // "toy" | "remote"
    std::string model_path;    // toy: JSON model file
    std::string base_url;      // remote; PREFALIGN_BASE_URL overrides/provides
    std::string auth_env = "PREFALIGN_API_KEY";
    std::string model;
    int max_inflight = 4;
    int max_retries = 3;
};

struct EmbedderDescriptor {
    std::string type = "hash";  // "hash" | "remote"
    std::size_t dim = 64;
    std::string base_url;
    std::string auth_env = "PREFALIGN_API_KEY";
    std::string model;
};

struct AppConfig {
    BackendDescriptor backend;
    EmbedderDescriptor embedder;
    PipelineConfig pipeline;
    LengthFilter length_filter;  // 320/128 defaults
    std::string cache_path;
    std::string log_level = "info";

    static AppConfig defaults();
    static AppConfig from_json_string(const std::string& text);
    static AppConfig load(const std::string& path);
    std::string to_json_string() const;

    // Every violated field at once; empty when valid.
    std::vector<std::string> validate() const;
    void validate_or_throw() const;
};

struct ResolvedBackend {
    std::shared_ptr<LmBackend> backend;      // cache-wrapped when a cache is configured
    std::shared_ptr<LmBackend> inner;        // unwrapped backend
    std::shared_ptr<ScoreCache> cache;       // null when no cache path configured
};

ResolvedBackend make_backend(const AppConfig& config);
std::shared_ptr<Embedder> make_embedder(const AppConfig& config);

}  // namespace prefalign
