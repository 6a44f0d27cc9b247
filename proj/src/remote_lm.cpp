#include "prefalign/remote_lm.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace prefalign {

using nlohmann::json;

namespace {

// Run-time-sized counting semaphore (std::counting_semaphore fixes its
// ceiling at compile time).
class InflightGate {
public:
    explicit InflightGate(int slots) : slots_(slots) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

struct GateGuard {
    explicit GateGuard(InflightGate& gate) : gate_(gate) { gate_.acquire(); }
    ~GateGuard() { gate_.release(); }
    InflightGate& gate_;
};

struct HttpCore {
    RemoteOptions options;
    InflightGate gate;

    explicit HttpCore(RemoteOptions opts)
        : options(std::move(opts)), gate(std::max(1, options.max_inflight)) {
        if (options.base_url.empty()) throw ConfigError("remote backend requires a base URL");
    }

    // POST with bounded concurrency and retry on transport-level
    // failures (connection errors, 5xx, 429).
    json post_json(const std::string& path, const json& body) {
        GateGuard guard(gate);
        int attempts = 0;
        double backoff = options.backoff_initial_ms;
        std::string last_failure;
        while (attempts < std::max(1, options.max_retries)) {
            ++attempts;
            httplib::Client client(options.base_url);
            client.set_connection_timeout(30);
            client.set_read_timeout(120);
            httplib::Headers headers;
            if (!options.api_key.empty())
                headers.emplace("Authorization", "Bearer " + options.api_key);

            auto result = client.Post(path, headers, body.dump(), "application/json");
            if (!result) {
                last_failure = "connection failure (" + httplib::to_string(result.error()) + ")";
            } else if (result->status >= 500 || result->status == 429) {
                last_failure = "server returned status " + std::to_string(result->status);
            } else if (result->status == 404) {
                throw CapabilityError("endpoint not found: " + options.base_url + path);
            } else if (result->status == 401 || result->status == 403) {
                throw ConfigError("authentication rejected by " + options.base_url +
                                  " (status " + std::to_string(result->status) + ")");
            } else if (result->status < 200 || result->status >= 300) {
                throw DataError("server rejected request with status " +
                                std::to_string(result->status) + ": " + result->body);
            } else {
                json parsed = json::parse(result->body, nullptr, false);
                if (parsed.is_discarded())
                    throw DataError("server returned malformed JSON from " + path);
                return parsed;
            }
            if (attempts < std::max(1, options.max_retries)) {
                std::this_thread::sleep_for(
                    std::chrono::duration<double, std::milli>(backoff));
                backoff *= options.backoff_factor;
            }
        }
        throw TransportError("request to " + options.base_url + path + " failed after " +
                                 std::to_string(attempts) + " attempts: " + last_failure,
                             attempts);
    }
};

}  // namespace

struct RemoteLm::Impl {
    HttpCore core;
    explicit Impl(RemoteOptions opts) : core(std::move(opts)) {}
};

RemoteLm::RemoteLm(RemoteOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

RemoteLm::~RemoteLm() = default;

std::string RemoteLm::backend_id() const {
    const auto& o = impl_->core.options;
    return "remote:" + o.base_url + (o.model.empty() ? "" : ":" + o.model);
}

std::vector<std::string> RemoteLm::complete(const std::string& context,
                                            const GenerationParams& params) {
    params.validate();
    const auto& options = impl_->core.options;

    json body;
    if (!options.model.empty()) body["model"] = options.model;
    body["prompt"] = context;
    body["n"] = params.n;
    body["max_tokens"] = params.max_tokens;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["seed"] = params.seed;
    body["echo"] = false;
    body["logprobs"] = nullptr;

    json response = impl_->core.post_json(options.completions_path, body);
    if (!response.contains("choices") || !response["choices"].is_array())
        throw DataError("completion response has no choices array");
    const auto& choices = response["choices"];
    if (choices.size() != static_cast<std::size_t>(params.n))
        throw CapabilityError("server returned " + std::to_string(choices.size()) +
                              " completions for n=" + std::to_string(params.n) +
                              "; it lacks the required sampling controls");
    std::vector<std::string> texts;
    texts.reserve(choices.size());
    for (const auto& choice : choices) {
        if (!choice.contains("text") || !choice["text"].is_string())
            throw DataError("completion choice has no text field");
        texts.push_back(choice["text"].get<std::string>());
    }
    return texts;
}

SequenceScore RemoteLm::score(const std::string& context, const std::string& completion) {
    if (completion.empty()) return SequenceScore{};
    const auto& options = impl_->core.options;

    json body;
    if (!options.model.empty()) body["model"] = options.model;
    body["prompt"] = context + completion;
    body["max_tokens"] = 0;
    body["echo"] = true;
    body["logprobs"] = 1;
    body["n"] = 1;
    body["temperature"] = 1.0;
    body["top_p"] = 1.0;

    json response = impl_->core.post_json(options.completions_path, body);
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty())
        throw DataError("scoring response has no choices array");
    const auto& choice = response["choices"][0];
    if (!choice.contains("logprobs") || choice["logprobs"].is_null())
        throw CapabilityError(
            "backend does not return prompt-conditioned token log-probabilities");
    const auto& lp = choice["logprobs"];
    if (!lp.contains("tokens") || !lp.contains("token_logprobs") || !lp.contains("text_offset"))
        throw CapabilityError("backend logprobs lack tokens/token_logprobs/text_offset");

    const auto tokens = lp["tokens"].get<std::vector<std::string>>();
    const auto offsets = lp["text_offset"].get<std::vector<std::size_t>>();
    const auto& raw_logprobs = lp["token_logprobs"];
    if (tokens.size() != offsets.size() || tokens.size() != raw_logprobs.size())
        throw DataError("backend logprob arrays have mismatched lengths");

    // Completion tokens are the suffix whose offsets lie at or beyond
    // the context end; the boundary must fall exactly between tokens.
    const std::size_t boundary = context.size();
    std::size_t first = tokens.size();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (offsets[i] >= boundary) {
            first = i;
            break;
        }
    }
    if (first == tokens.size())
        throw DataError("no tokens returned for the completion region");
    if (offsets[first] != boundary)
        throw DataError("completion is not token-aligned with the context boundary "
                        "(server tokenization straddles the split)");

    std::vector<TokenLogprob> entries;
    entries.reserve(tokens.size() - first);
    for (std::size_t i = first; i < tokens.size(); ++i) {
        if (raw_logprobs[i].is_null())
            throw CapabilityError("backend returned null log-probability inside completion");
        entries.push_back({tokens[i], raw_logprobs[i].get<double>()});
    }
    return SequenceScore::of(std::move(entries));
}

struct RemoteEmbedder::Impl {
    HttpCore core;
    explicit Impl(RemoteOptions opts) : core(std::move(opts)) {}
};

RemoteEmbedder::RemoteEmbedder(RemoteOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

RemoteEmbedder::~RemoteEmbedder() = default;

std::string RemoteEmbedder::embedder_id() const {
    const auto& o = impl_->core.options;
    return "remote-embed:" + o.base_url + (o.model.empty() ? "" : ":" + o.model);
}

std::vector<double> RemoteEmbedder::embed(const std::string& text) {
    const auto& options = impl_->core.options;
    json body;
    if (!options.model.empty()) body["model"] = options.model;
    body["input"] = json::array({text});

    json response = impl_->core.post_json(options.embeddings_path, body);
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].empty() || !response["data"][0].contains("embedding"))
        throw DataError("embedding response has no data[0].embedding");
    auto vec = response["data"][0]["embedding"].get<std::vector<double>>();
    if (vec.empty()) throw DataError("embedding response is empty");

    double norm = 0.0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw DataError("embedding response has zero norm");
    for (auto& v : vec) v /= norm;
    return vec;
}

}  // namespace prefalign
