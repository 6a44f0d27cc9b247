#include "prefalign/config.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/remote_lm.hpp"
#include "prefalign/toy_lm.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <cstdlib>

namespace prefalign {

using nlohmann::json;

AppConfig AppConfig::defaults() { return AppConfig{}; }

namespace {

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

template <typename T>
void read_if(const json& obj, const char* key, T& target) {
    if (auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

}  // namespace

AppConfig AppConfig::from_json_string(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw ConfigError("malformed config JSON");

    AppConfig cfg;
    try {
        if (auto it = obj.find("backend"); it != obj.end()) {
            const auto& b = *it;
            read_if(b, "type", cfg.backend.type);
            read_if(b, "model_path", cfg.backend.model_path);
            read_if(b, "base_url", cfg.backend.base_url);
            read_if(b, "auth_env", cfg.backend.auth_env);
            read_if(b, "model", cfg.backend.model);
            read_if(b, "max_inflight", cfg.backend.max_inflight);
            read_if(b, "max_retries", cfg.backend.max_retries);
        }
        if (auto it = obj.find("embedder"); it != obj.end()) {
            const auto& e = *it;
            read_if(e, "type", cfg.embedder.type);
            read_if(e, "dim", cfg.embedder.dim);
            read_if(e, "base_url", cfg.embedder.base_url);
            read_if(e, "auth_env", cfg.embedder.auth_env);
            read_if(e, "model", cfg.embedder.model);
        }
        if (auto it = obj.find("pipeline"); it != obj.end()) {
            const auto& p = *it;
            if (auto r = p.find("retrieval_mode"); r != p.end())
                cfg.pipeline.retrieval_mode =
                    retrieval_mode_from_string(r->get<std::string>());
            if (auto r = p.find("retrieval"); r != p.end()) {
                read_if(*r, "m", cfg.pipeline.retrieval.m);
                read_if(*r, "pool_k", cfg.pipeline.retrieval.pool_k);
                read_if(*r, "window_l", cfg.pipeline.retrieval.window_l);
                read_if(*r, "k1", cfg.pipeline.retrieval.k1);
                read_if(*r, "b", cfg.pipeline.retrieval.b);
                if (auto o = r->find("ordering"); o != r->end())
                    cfg.pipeline.retrieval.ordering =
                        demo_ordering_from_string(o->get<std::string>());
            }
            read_if(p, "fixed_demo_ids", cfg.pipeline.fixed_demo_ids);
            if (auto g = p.find("generation"); g != p.end()) {
                read_if(*g, "n", cfg.pipeline.generation.n);
                read_if(*g, "top_p", cfg.pipeline.generation.top_p);
                read_if(*g, "temperature", cfg.pipeline.generation.temperature);
                read_if(*g, "max_tokens", cfg.pipeline.generation.max_tokens);
                read_if(*g, "seed", cfg.pipeline.generation.seed);
            }
            if (auto s = p.find("scorer"); s != p.end())
                cfg.pipeline.scorer = scorer_kind_from_string(s->get<std::string>());
            if (auto s = p.find("length_normalized"); s != p.end())
                cfg.pipeline.score_options.length_normalized = s->get<bool>();
            if (auto s = p.find("probability_reading"); s != p.end()) {
                const auto name = s->get<std::string>();
                if (name == "log_product")
                    cfg.pipeline.score_options.reading = ProbabilityReading::log_product;
                else if (name == "literal_sum")
                    cfg.pipeline.score_options.reading = ProbabilityReading::literal_sum;
                else
                    throw ConfigError("unknown probability_reading: " + name);
            }
            read_if(p, "style_word", cfg.pipeline.style_word);
            if (auto s = p.find("negative_style_word"); s != p.end())
                cfg.pipeline.negative_style_word = s->get<std::string>();
            read_if(p, "zero_shot_header", cfg.pipeline.zero_shot_header);
            read_if(p, "strict", cfg.pipeline.strict);
            read_if(p, "seed", cfg.pipeline.seed);
            read_if(p, "workers", cfg.pipeline.workers);
        }
        if (auto it = obj.find("length_filter"); it != obj.end()) {
            read_if(*it, "max_prompt_tokens", cfg.length_filter.max_prompt_tokens);
            read_if(*it, "max_response_tokens", cfg.length_filter.max_response_tokens);
            read_if(*it, "tokenizer_id", cfg.length_filter.tokenizer_id);
        }
        read_if(obj, "cache_path", cfg.cache_path);
        read_if(obj, "log_level", cfg.log_level);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    return cfg;
}

AppConfig AppConfig::load(const std::string& path) {
    try {
        return from_json_string(read_file(path));
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

std::string AppConfig::to_json_string() const {
    json obj;
    obj["backend"] = {{"type", backend.type},
                      {"model_path", backend.model_path},
                      {"base_url", backend.base_url},
                      {"auth_env", backend.auth_env},
                      {"model", backend.model},
                      {"max_inflight", backend.max_inflight},
                      {"max_retries", backend.max_retries}};
    obj["embedder"] = {{"type", embedder.type},
                       {"dim", embedder.dim},
                       {"base_url", embedder.base_url},
                       {"auth_env", embedder.auth_env},
                       {"model", embedder.model}};
    json p;
    p["retrieval_mode"] = to_string(pipeline.retrieval_mode);
    p["retrieval"] = {{"m", pipeline.retrieval.m},
                      {"pool_k", pipeline.retrieval.pool_k},
                      {"window_l", pipeline.retrieval.window_l},
                      {"k1", pipeline.retrieval.k1},
                      {"b", pipeline.retrieval.b},
                      {"ordering", to_string(pipeline.retrieval.ordering)}};
    p["fixed_demo_ids"] = pipeline.fixed_demo_ids;
    p["generation"] = {{"n", pipeline.generation.n},
                       {"top_p", pipeline.generation.top_p},
                       {"temperature", pipeline.generation.temperature},
                       {"max_tokens", pipeline.generation.max_tokens},
                       {"seed", pipeline.generation.seed}};
    p["scorer"] = to_string(pipeline.scorer);
    p["length_normalized"] = pipeline.score_options.length_normalized;
    p["probability_reading"] =
        pipeline.score_options.reading == ProbabilityReading::log_product ? "log_product"
                                                                          : "literal_sum";
    p["style_word"] = pipeline.style_word;
    if (pipeline.negative_style_word) p["negative_style_word"] = *pipeline.negative_style_word;
    p["zero_shot_header"] = pipeline.zero_shot_header;
    p["strict"] = pipeline.strict;
    p["seed"] = pipeline.seed;
    p["workers"] = pipeline.workers;
    obj["pipeline"] = std::move(p);
    obj["length_filter"] = {{"max_prompt_tokens", length_filter.max_prompt_tokens},
                            {"max_response_tokens", length_filter.max_response_tokens},
                            {"tokenizer_id", length_filter.tokenizer_id}};
    obj["cache_path"] = cache_path;
    obj["log_level"] = log_level;
    return obj.dump(2);
}

std::vector<std::string> AppConfig::validate() const {
    std::vector<std::string> violations;
    if (backend.type != "toy" && backend.type != "remote")
        violations.push_back("backend.type must be \"toy\" or \"remote\"");
    if (backend.type == "toy" && backend.model_path.empty())
        violations.push_back("backend.model_path required for the toy backend");
    if (backend.type == "remote" && backend.base_url.empty() &&
        env_or_empty("PREFALIGN_BASE_URL").empty())
        violations.push_back(
            "backend.base_url (or PREFALIGN_BASE_URL) required for the remote backend");
    if (backend.max_inflight < 1) violations.push_back("backend.max_inflight must be >= 1");
    if (backend.max_retries < 1) violations.push_back("backend.max_retries must be >= 1");
    if (embedder.type != "hash" && embedder.type != "remote")
        violations.push_back("embedder.type must be \"hash\" or \"remote\"");
    if (embedder.type == "hash" && embedder.dim < 1)
        violations.push_back("embedder.dim must be >= 1");
    if (embedder.type == "remote" && embedder.base_url.empty() &&
        env_or_empty("PREFALIGN_BASE_URL").empty())
        violations.push_back(
            "embedder.base_url (or PREFALIGN_BASE_URL) required for the remote embedder");
    pipeline.validate(&violations);
    try {
        length_filter.validate();
    } catch (const Error& e) {
        violations.emplace_back(e.what());
    }
    try {
        set_log_level(log_level);  // also applies it; cheap and idempotent
    } catch (const Error& e) {
        violations.emplace_back(e.what());
    }
    return violations;
}

void AppConfig::validate_or_throw() const {
    auto violations = validate();
    if (violations.empty()) return;
    std::string joined;
    for (const auto& v : violations) {
        if (!joined.empty()) joined += "; ";
        joined += v;
    }
    throw ConfigError("invalid config: " + joined);
}

ResolvedBackend make_backend(const AppConfig& config) {
    ResolvedBackend resolved;
    if (config.backend.type == "toy") {
        if (config.backend.model_path.empty())
            throw ConfigError("backend.model_path required for the toy backend");
        resolved.inner = std::make_shared<ToyNgramLm>(ToyNgramLm::load(config.backend.model_path));
    } else if (config.backend.type == "remote") {
        RemoteOptions options;
        options.base_url = !config.backend.base_url.empty()
                               ? config.backend.base_url
                               : env_or_empty("PREFALIGN_BASE_URL");
        options.api_key = env_or_empty(config.backend.auth_env.c_str());
        options.model = config.backend.model;
        options.max_inflight = config.backend.max_inflight;
        options.max_retries = config.backend.max_retries;
        resolved.inner = std::make_shared<RemoteLm>(std::move(options));
    } else {
        throw ConfigError("unknown backend type: " + config.backend.type);
    }

    if (!config.cache_path.empty()) {
        resolved.cache = std::make_shared<ScoreCache>(config.cache_path);
        resolved.backend = cached(resolved.inner, resolved.cache);
    } else {
        resolved.backend = resolved.inner;
    }
    return resolved;
}

std::shared_ptr<Embedder> make_embedder(const AppConfig& config) {
    if (config.embedder.type == "hash")
        return std::make_shared<HashEmbedder>(config.embedder.dim);
    if (config.embedder.type == "remote") {
        RemoteOptions options;
        options.base_url = !config.embedder.base_url.empty()
                               ? config.embedder.base_url
                               : env_or_empty("PREFALIGN_BASE_URL");
        options.api_key = env_or_empty(config.embedder.auth_env.c_str());
        options.model = config.embedder.model;
        return std::make_shared<RemoteEmbedder>(std::move(options));
    }
    throw ConfigError("unknown embedder type: " + config.embedder.type);
}

}  // namespace prefalign
