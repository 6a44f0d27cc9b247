#pragma once

/**
 * JSON-over-HTTP clients for open inference servers.
 *
 * The LM client speaks a completions-style endpoint: the request carries
 * prompt, max_tokens, temperature, top_p, n, seed, echo and logprobs;
 * the response carries per-choice text plus token/logprob/offset arrays.
 * Scoring echoes context+completion with max_tokens=0 and slices the
 * completion tokens out by character offset; a completion that is not
 * token-aligned with the context boundary is an error, never a silent
 * approximation.
 *
 * Transport failures retry with exponential backoff up to max_retries;
 * the terminal error carries the attempt count. In-flight requests are
 * bounded by a semaphore shared across threads.
 */

#include "prefalign/lm_backend.hpp"
#include "prefalign/retrieval.hpp"

#include <memory>
#include <string>

namespace prefalign {

struct RemoteOptions {
    std::string base_url;            // e.g. http://localhost:8000
    std::string api_key;             // sent as a bearer token when non-empty
    std::string model;               // optional model name forwarded to the server
    int max_inflight = 4;
    int max_retries = 3;
    double backoff_initial_ms = 100.0;
    double backoff_factor = 2.0;
    std::string completions_path = "/v1/completions";
    std::string embeddings_path = "/v1/embeddings";
};

class RemoteLm : public LmBackend {
public:
    explicit RemoteLm(RemoteOptions options);
    ~RemoteLm() override;

    std::string backend_id() const override;
    // Remote servers make no reproducibility promise even with a seed.
    bool deterministic_completion() const override { return false; }

    std::vector<std::string> complete(const std::string& context,
                                      const GenerationParams& params) override;
    SequenceScore score(const std::string& context, const std::string& completion) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(RemoteOptions options);
    ~RemoteEmbedder() override;

    std::string embedder_id() const override;
    std::vector<double> embed(const std::string& text) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace prefalign
