#include "prefalign/score_cache.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <filesystem>
#include <mutex>

namespace prefalign {

using nlohmann::json;

namespace {

// Canonical payload serialization; the checksum is computed over this.
std::string payload_string(const SequenceScore& score) {
    json toks = json::array();
    for (const auto& t : score.token_logprobs) toks.push_back(json::array({t.token, t.logprob}));
    json payload;
    payload["sum"] = score.sum_logprob;
    payload["count"] = score.token_count;
    payload["toks"] = std::move(toks);
    return payload.dump();
}

}  // namespace

ScoreCache::ScoreCache(std::string path) : path_(std::move(path)) {
    if (!path_.empty()) {
        load();
        appender_.open(path_, std::ios::binary | std::ios::app);
        if (!appender_) throw DataError("cannot open cache file for append: " + path_);
    }
}

std::uint64_t ScoreCache::key_of(const std::string& backend_id, const std::string& context,
                                 const std::string& completion) {
    // Lengths separate the fields so ("a","bc") and ("ab","c") differ.
    std::uint64_t h = fnv1a64(backend_id);
    h = fnv1a64(std::to_string(context.size()) + "|", h);
    h = fnv1a64(context, h);
    h = fnv1a64(std::to_string(completion.size()) + "|", h);
    h = fnv1a64(completion, h);
    return h;
}

void ScoreCache::load() {
    if (!std::filesystem::exists(path_)) return;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path_)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        bool ok = obj.is_object() && obj.contains("key") && obj.contains("check") &&
                  obj.contains("score");
        SequenceScore score;
        std::uint64_t key = 0;
        if (ok) {
            try {
                key = std::stoull(obj["key"].get<std::string>(), nullptr, 16);
                const auto& s = obj["score"];
                score.sum_logprob = s.at("sum").get<double>();
                score.token_count = s.at("count").get<std::size_t>();
                for (const auto& t : s.at("toks"))
                    score.token_logprobs.push_back({t.at(0).get<std::string>(),
                                                    t.at(1).get<double>()});
                std::uint64_t check =
                    std::stoull(obj["check"].get<std::string>(), nullptr, 16);
                ok = check == fnv1a64(payload_string(score));
            } catch (...) {
                ok = false;
            }
        }
        if (!ok) {
            corrupt_dropped_.fetch_add(1);
            log_warn("dropping corrupt cache entry at " + path_ + " line " +
                     std::to_string(line_no));
            continue;
        }
        entries_[key] = std::move(score);
    }
}

std::optional<SequenceScore> ScoreCache::get(const std::string& backend_id,
                                             const std::string& context,
                                             const std::string& completion) {
    const auto key = key_of(backend_id, context, completion);
    std::shared_lock read(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        misses_.fetch_add(1);
        return std::nullopt;
    }
    hits_.fetch_add(1);
    return it->second;
}

void ScoreCache::put(const std::string& backend_id, const std::string& context,
                     const std::string& completion, const SequenceScore& score) {
    const auto key = key_of(backend_id, context, completion);
    std::unique_lock write(mutex_);
    auto [it, inserted] = entries_.emplace(key, score);
    if (!inserted) return;
    if (appender_.is_open()) {
        const std::string payload = payload_string(score);
        json obj;
        obj["key"] = to_hex(key);
        obj["check"] = to_hex(fnv1a64(payload));
        obj["score"] = json::parse(payload);
        appender_ << obj.dump() << '\n';
        appender_.flush();
    }
}

CacheStats ScoreCache::stats() const {
    CacheStats out;
    out.hits = hits_.load();
    out.misses = misses_.load();
    out.corrupt_dropped = corrupt_dropped_.load();
    return out;
}

std::size_t ScoreCache::size() const {
    std::shared_lock read(mutex_);
    return entries_.size();
}

CachedLm::CachedLm(std::shared_ptr<LmBackend> inner, std::shared_ptr<ScoreCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedLm::backend_id() const { return inner_->backend_id(); }

bool CachedLm::deterministic_completion() const { return inner_->deterministic_completion(); }

std::vector<std::string> CachedLm::complete(const std::string& context,
                                            const GenerationParams& params) {
    return inner_->complete(context, params);
}

SequenceScore CachedLm::score(const std::string& context, const std::string& completion) {
    const std::string id = inner_->backend_id();
    if (auto hit = cache_->get(id, context, completion)) return *hit;
    auto computed = inner_->score(context, completion);
    cache_->put(id, context, completion, computed);
    return computed;
}

std::shared_ptr<LmBackend> cached(std::shared_ptr<LmBackend> inner,
                                  std::shared_ptr<ScoreCache> cache) {
    return std::make_shared<CachedLm>(std::move(inner), std::move(cache));
}

}  // namespace prefalign
