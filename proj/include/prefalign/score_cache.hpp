#pragma once

/**
 * Append-only persistent cache of score queries.
 *
 * Entries are keyed by fnv64(backend_id, context, completion) and carry
 * a payload checksum. Corrupt entries are dropped on load, recomputed on
 * the next miss and a warning is logged. Concurrent readers share the
 * map; writers take an exclusive lock and append one line per entry.
 */

#include "prefalign/lm_backend.hpp"

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace prefalign {

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t corrupt_dropped = 0;

    double hit_rate() const {
        auto total = hits + misses;
        return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
};

class ScoreCache {
public:
    // In-memory only when path is empty; otherwise loads existing
    // entries and appends new ones to the file.
    explicit ScoreCache(std::string path = "");

    static std::uint64_t key_of(const std::string& backend_id, const std::string& context,
                                const std::string& completion);

    std::optional<SequenceScore> get(const std::string& backend_id, const std::string& context,
                                     const std::string& completion);
    void put(const std::string& backend_id, const std::string& context,
             const std::string& completion, const SequenceScore& score);

    CacheStats stats() const;
    std::size_t size() const;
    const std::string& path() const { return path_; }

private:
    void load();

    std::string path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::uint64_t, SequenceScore> entries_;
    std::ofstream appender_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> corrupt_dropped_{0};
};

// Score-memoizing wrapper: repeated queries return byte-identical
// SequenceScores without touching the inner backend. complete() passes
// through untouched.
class CachedLm : public LmBackend {
public:
    CachedLm(std::shared_ptr<LmBackend> inner, std::shared_ptr<ScoreCache> cache);

    std::string backend_id() const override;
    bool deterministic_completion() const override;
    std::vector<std::string> complete(const std::string& context,
                                      const GenerationParams& params) override;
    SequenceScore score(const std::string& context, const std::string& completion) override;

private:
    std::shared_ptr<LmBackend> inner_;
    std::shared_ptr<ScoreCache> cache_;
};

std::shared_ptr<LmBackend> cached(std::shared_ptr<LmBackend> inner,
                                  std::shared_ptr<ScoreCache> cache);

}  // namespace prefalign
