#include "prefalign/retrieval.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <unordered_map>

namespace prefalign {

using nlohmann::json;

std::string to_string(DemoOrdering ordering) {
    switch (ordering) {
        case DemoOrdering::most_similar_last: return "most_similar_last";
        case DemoOrdering::most_similar_first: return "most_similar_first";
        case DemoOrdering::pool_order: return "pool_order";
    }
    return "most_similar_last";
}

DemoOrdering demo_ordering_from_string(const std::string& name) {
    if (name == "most_similar_last") return DemoOrdering::most_similar_last;
    if (name == "most_similar_first") return DemoOrdering::most_similar_first;
    if (name == "pool_order") return DemoOrdering::pool_order;
    throw ConfigError("unknown demonstration ordering: " + name);
}

void RetrievalConfig::validate() const {
    std::string violations;
    auto add = [&](const char* msg) {
        if (!violations.empty()) violations += "; ";
        violations += msg;
    };
    if (m < 1) add("m must be >= 1");
    if (m > pool_k) add("m must be <= pool_k");
    if (window_l < 1) add("window_l must be >= 1");
    if (!(k1 > 0.0)) add("k1 must be > 0");
    if (b < 0.0 || b > 1.0) add("b must be in [0, 1]");
    if (!violations.empty()) throw ConfigError("invalid retrieval config: " + violations);
}

std::vector<std::string> tail_window(const std::vector<std::string>& tokens, std::size_t l) {
    if (l >= tokens.size()) return tokens;
    return {tokens.end() - static_cast<std::ptrdiff_t>(l), tokens.end()};
}

Bm25Index::Bm25Index(std::vector<std::vector<std::string>> documents, double k1, double b)
    : documents_(std::move(documents)), k1_(k1), b_(b) {
    std::size_t total_len = 0;
    term_frequencies_.reserve(documents_.size());
    for (const auto& doc : documents_) {
        total_len += doc.size();
        std::unordered_map<std::string, std::size_t> tf;
        for (const auto& term : doc) ++tf[term];
        for (const auto& [term, _] : tf) ++document_frequencies_[term];
        term_frequencies_.push_back(std::move(tf));
    }
    avgdl_ = documents_.empty() ? 0.0
                                : static_cast<double>(total_len) /
                                      static_cast<double>(documents_.size());
}

std::size_t Bm25Index::document_frequency(const std::string& term) const {
    auto it = document_frequencies_.find(term);
    return it == document_frequencies_.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const {
    const double n = static_cast<double>(documents_.size());
    const double df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(const std::vector<std::string>& query, std::size_t doc_id) const {
    if (doc_id >= documents_.size()) throw DataError("BM25 doc_id out of range");
    const auto& tf_map = term_frequencies_[doc_id];
    const double dl = static_cast<double>(documents_[doc_id].size());
    const double length_norm = k1_ * (1.0 - b_ + b_ * (avgdl_ > 0.0 ? dl / avgdl_ : 0.0));

    double total = 0.0;
    for (const auto& term : query) {
        auto it = tf_map.find(term);
        if (it == tf_map.end()) continue;
        const double tf = static_cast<double>(it->second);
        total += idf(term) * tf * (k1_ + 1.0) / (tf + length_norm);
    }
    return total;
}

std::vector<std::pair<std::size_t, double>> Bm25Index::top_k(
    const std::vector<std::string>& query, std::size_t k) const {
    if (k < 1) throw ConfigError("top_k requires k >= 1");
    std::vector<std::pair<std::size_t, double>> scored;
    scored.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) scored.emplace_back(i, score(query, i));
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second > b.second;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

HashEmbedder::HashEmbedder(std::size_t dim, double raw_scale)
    : dim_(dim), raw_scale_(raw_scale) {
    if (dim_ < 1) throw ConfigError("embedder dimension must be >= 1");
}

std::string HashEmbedder::embedder_id() const {
    return "hash-" + std::to_string(dim_);
}

std::vector<double> HashEmbedder::raw_embed(const std::string& text) const {
    std::vector<double> vec(dim_, 0.0);
    const auto tokens = retrieval_tokens(text);
    for (const auto& tok : tokens) {
        vec[fnv1a64(tok) % dim_] += 1.0;
        // Character trigrams smooth similarity between near-duplicates.
        if (tok.size() >= 3) {
            for (std::size_t i = 0; i + 3 <= tok.size(); ++i)
                vec[fnv1a64(std::string_view(tok).substr(i, 3), 0x9e3779b97f4a7c15ull) % dim_] +=
                    0.5;
        }
    }
    for (auto& v : vec) v *= raw_scale_;
    return vec;
}

std::vector<double> HashEmbedder::embed(const std::string& text) {
    auto vec = raw_embed(text);
    double norm = std::sqrt(std::inner_product(vec.begin(), vec.end(), vec.begin(), 0.0));
    if (norm == 0.0) {
        // Degenerate (empty) text: deterministic unit basis vector.
        vec[0] = 1.0;
        return vec;
    }
    for (auto& v : vec) v /= norm;
    return vec;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("cosine of vectors with different dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<std::size_t, double>> rerank_embed_scored(
    Embedder& embedder, const std::string& query_text,
    const std::vector<std::pair<std::size_t, std::string>>& shortlist, std::size_t m) {
    if (shortlist.empty()) throw DataError("rerank over an empty shortlist");
    if (m > shortlist.size()) throw DataError("rerank m exceeds shortlist size");

    const auto query_vec = embedder.embed(query_text);
    std::vector<double> sims;
    sims.reserve(shortlist.size());
    for (const auto& [doc_id, text] : shortlist) {
        try {
            sims.push_back(cosine_similarity(query_vec, embedder.embed(text)));
        } catch (const Error& e) {
            throw DataError("embedder failed for doc " + std::to_string(doc_id) + ": " +
                            e.what());
        }
    }

    std::vector<std::size_t> positions(shortlist.size());
    std::iota(positions.begin(), positions.end(), 0);
    std::stable_sort(positions.begin(), positions.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
        out.emplace_back(shortlist[positions[i]].first, sims[positions[i]]);
    return out;
}

std::vector<std::size_t> rerank_embed(Embedder& embedder, const std::string& query_text,
                                      const std::vector<std::pair<std::size_t, std::string>>& shortlist,
                                      std::size_t m) {
    std::vector<std::size_t> ids;
    for (const auto& [doc_id, _] : rerank_embed_scored(embedder, query_text, shortlist, m))
        ids.push_back(doc_id);
    return ids;
}

namespace {

std::vector<std::vector<std::string>> window_documents(
    const std::vector<PreferenceRecord>& records, std::size_t window_l) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(records.size());
    for (const auto& rec : records)
        docs.push_back(tail_window(retrieval_tokens(rec.prompt), window_l));
    return docs;
}

}  // namespace

DemoPool::DemoPool(std::vector<PreferenceRecord> records, const RetrievalConfig& cfg)
    : records_(std::move(records)), cfg_(cfg) {
    cfg_.validate();
    pool_hash_ = content_hash(records_);
    index_ = std::make_shared<Bm25Index>(window_documents(records_, cfg_.window_l), cfg_.k1,
                                         cfg_.b);
}

std::optional<std::size_t> DemoPool::find_by_id(const std::string& id) const {
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (records_[i].id == id) return i;
    return std::nullopt;
}

void DemoPool::save_index_sidecar(const std::string& path) const {
    json obj;
    obj["pool_hash"] = to_hex(pool_hash_);
    obj["window_l"] = cfg_.window_l;
    obj["k1"] = cfg_.k1;
    obj["b"] = cfg_.b;
    obj["documents"] = index_->documents();
    write_file(path, obj.dump());
}

std::optional<Bm25Index> DemoPool::load_index_sidecar(const std::string& path,
                                                      std::uint64_t expected_hash,
                                                      const RetrievalConfig& cfg) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    json obj = json::parse(read_file(path), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        log_warn("ignoring malformed index sidecar: " + path);
        return std::nullopt;
    }
    try {
        if (obj.at("pool_hash").get<std::string>() != to_hex(expected_hash)) return std::nullopt;
        if (obj.at("window_l").get<std::size_t>() != cfg.window_l) return std::nullopt;
        if (obj.at("k1").get<double>() != cfg.k1 || obj.at("b").get<double>() != cfg.b)
            return std::nullopt;
        auto docs = obj.at("documents").get<std::vector<std::vector<std::string>>>();
        return Bm25Index(std::move(docs), cfg.k1, cfg.b);
    } catch (const json::exception&) {
        log_warn("ignoring malformed index sidecar: " + path);
        return std::nullopt;
    }
}

DemoPool DemoPool::with_sidecar(std::vector<PreferenceRecord> records,
                                const RetrievalConfig& cfg, const std::string& sidecar_path) {
    DemoPool pool(std::move(records), cfg);
    auto loaded = load_index_sidecar(sidecar_path, pool.pool_hash_, cfg);
    if (loaded) {
        pool.index_ = std::make_shared<Bm25Index>(std::move(*loaded));
    } else {
        pool.save_index_sidecar(sidecar_path);
    }
    return pool;
}

std::vector<Demonstration> RetrievalResult::demonstrations(const DemoPool& pool) const {
    std::vector<Demonstration> demos;
    demos.reserve(selected.size());
    for (const auto& sel : selected)
        demos.push_back(demonstration_from(pool.records()[sel.pool_index]));
    return demos;
}

RetrievalResult retrieve_demonstrations(const DemoPool& pool, Embedder& embedder,
                                        const std::string& x, const RetrievalConfig& cfg,
                                        bool strict) {
    cfg.validate();
    if (pool.records().empty()) throw DataError("demonstration pool is empty");

    RetrievalResult result;
    std::size_t m = cfg.m;
    if (pool.records().size() < m) {
        if (strict)
            throw DataError("pool has " + std::to_string(pool.records().size()) +
                            " records, fewer than m=" + std::to_string(m));
        log_warn("pool smaller than m; returning all records");
        result.truncated = true;
        m = pool.records().size();
    }

    const auto query = tail_window(retrieval_tokens(x), cfg.window_l);
    const auto shortlist_scored = pool.index().top_k(query, cfg.pool_k);

    std::vector<std::pair<std::size_t, std::string>> shortlist;
    shortlist.reserve(shortlist_scored.size());
    for (const auto& [doc_id, _] : shortlist_scored)
        shortlist.emplace_back(doc_id, pool.records()[doc_id].prompt);

    // Fine stage sees full prompt texts, not tail windows.
    const auto reranked = rerank_embed_scored(embedder, x, shortlist, m);

    std::unordered_map<std::size_t, double> bm25_of;
    for (const auto& [doc_id, s] : shortlist_scored) bm25_of[doc_id] = s;

    std::vector<SelectedDemo> selected;  // most similar first
    selected.reserve(reranked.size());
    for (const auto& [doc_id, cos] : reranked) {
        SelectedDemo sel;
        sel.pool_index = doc_id;
        sel.id = pool.records()[doc_id].id;
        sel.bm25 = bm25_of[doc_id];
        sel.cosine = cos;
        selected.push_back(std::move(sel));
    }

    switch (cfg.ordering) {
        case DemoOrdering::most_similar_first: break;
        case DemoOrdering::most_similar_last:
            std::reverse(selected.begin(), selected.end());
            break;
        case DemoOrdering::pool_order:
            std::stable_sort(selected.begin(), selected.end(),
                             [](const SelectedDemo& a, const SelectedDemo& b) {
                                 return a.pool_index < b.pool_index;
                             });
            break;
    }
    result.selected = std::move(selected);
    return result;
}

}  // namespace prefalign
