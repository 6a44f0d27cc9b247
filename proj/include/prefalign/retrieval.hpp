#pragma once

/**
 * Two-stage demonstration retrieval.
 *
 * Stage one scores the tail windows of pool prompts with Okapi BM25
 * (positively-floored idf) against the tail window of the query. Stage
 * two reranks the shortlist by cosine similarity of full prompt
 * embeddings and keeps the top m. The fine stage can never resurrect a
 * document the coarse stage pruned.
 */

#include "prefalign/corpus.hpp"
#include "prefalign/prompting.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prefalign {

enum class DemoOrdering { most_similar_last, most_similar_first, pool_order };

std::string to_string(DemoOrdering ordering);
DemoOrdering demo_ordering_from_string(const std::string& name);

struct RetrievalConfig {
    std::size_t m = 2;
    std::size_t pool_k = 20;
    // Tail-window length in tokens. Not pinned by the source method;
    // exposed prominently and swept in tests.
    std::size_t window_l = 64;
    double k1 = 1.2;
    double b = 0.75;
    DemoOrdering ordering = DemoOrdering::most_similar_last;

    void validate() const;
};

// Last min(l, size) tokens, order preserved.
std::vector<std::string> tail_window(const std::vector<std::string>& tokens, std::size_t l);

class Bm25Index {
public:
    Bm25Index(std::vector<std::vector<std::string>> documents, double k1 = 1.2,
              double b = 0.75);

    // Okapi BM25 with idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)), summed
    // per query-term occurrence.
    double score(const std::vector<std::string>& query, std::size_t doc_id) const;

    // Top k by descending score, ties by ascending doc id.
    std::vector<std::pair<std::size_t, double>> top_k(const std::vector<std::string>& query,
                                                      std::size_t k) const;

    double idf(const std::string& term) const;
    std::size_t document_frequency(const std::string& term) const;
    double average_doc_length() const { return avgdl_; }
    std::size_t size() const { return documents_.size(); }
    const std::vector<std::vector<std::string>>& documents() const { return documents_; }
    double k1() const { return k1_; }
    double b() const { return b_; }

private:
    std::vector<std::vector<std::string>> documents_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_frequencies_;
    std::unordered_map<std::string, std::size_t> document_frequencies_;
    double avgdl_ = 0.0;
    double k1_;
    double b_;
};

// Capability contract: unit-normalized fixed-dimension embeddings,
// deterministic per text.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string embedder_id() const = 0;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

// Deterministic hashed bag-of-words embedder (tokens plus character
// trigrams) for tests and offline runs. raw_scale multiplies the raw
// vector before normalization; cosine results are invariant to it.
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 64, double raw_scale = 1.0);
    std::string embedder_id() const override;
    std::vector<double> embed(const std::string& text) override;
    std::vector<double> raw_embed(const std::string& text) const;

private:
    std::size_t dim_;
    double raw_scale_;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Top m shortlist entries by descending cosine to the query embedding;
// ties by shortlist position. Returns doc ids in rank order.
std::vector<std::size_t> rerank_embed(Embedder& embedder, const std::string& query_text,
                                      const std::vector<std::pair<std::size_t, std::string>>& shortlist,
                                      std::size_t m);
std::vector<std::pair<std::size_t, double>> rerank_embed_scored(
    Embedder& embedder, const std::string& query_text,
    const std::vector<std::pair<std::size_t, std::string>>& shortlist, std::size_t m);

// A demonstration pool with its BM25 index over prompt tail windows.
class DemoPool {
public:
    DemoPool(std::vector<PreferenceRecord> records, const RetrievalConfig& cfg);

    const std::vector<PreferenceRecord>& records() const { return records_; }
    const Bm25Index& index() const { return *index_; }
    std::uint64_t pool_hash() const { return pool_hash_; }
    const RetrievalConfig& config() const { return cfg_; }

    std::optional<std::size_t> find_by_id(const std::string& id) const;

    // Sidecar persistence keyed by pool content hash and index
    // parameters; loading silently falls back to a rebuild on mismatch.
    void save_index_sidecar(const std::string& path) const;
    static std::optional<Bm25Index> load_index_sidecar(const std::string& path,
                                                       std::uint64_t expected_hash,
                                                       const RetrievalConfig& cfg);
    static DemoPool with_sidecar(std::vector<PreferenceRecord> records,
                                 const RetrievalConfig& cfg, const std::string& sidecar_path);

private:
    std::vector<PreferenceRecord> records_;
    RetrievalConfig cfg_;
    std::uint64_t pool_hash_ = 0;
    std::shared_ptr<Bm25Index> index_;
};

struct SelectedDemo {
    std::size_t pool_index = 0;
    std::string id;
    double bm25 = 0.0;
    double cosine = 0.0;
};

struct RetrievalResult {
    // In final rendering order (per RetrievalConfig::ordering).
    std::vector<SelectedDemo> selected;
    bool truncated = false;  // pool smaller than m

    std::vector<Demonstration> demonstrations(const DemoPool& pool) const;
};

RetrievalResult retrieve_demonstrations(const DemoPool& pool, Embedder& embedder,
                                        const std::string& x, const RetrievalConfig& cfg,
                                        bool strict = false);

}  // namespace prefalign
