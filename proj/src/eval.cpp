#include "prefalign/eval.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace prefalign {

using nlohmann::json;

void RankedQuery::validate() const {
    if (candidates.empty()) throw DataError("query " + query_id + ": no candidates");
    if (gold_ranking.size() != candidates.size() ||
        predicted_scores.size() != candidates.size())
        throw DataError("query " + query_id + ": field lengths disagree");
    std::vector<bool> seen(candidates.size(), false);
    for (auto idx : gold_ranking) {
        if (idx >= candidates.size() || seen[idx])
            throw DataError("query " + query_id + ": gold_ranking is not a permutation");
        seen[idx] = true;
    }
}

namespace {

// Candidate indices by descending score, ties by ascending index; the
// same rule candidate ranking uses.
std::vector<std::size_t> predicted_order(const RankedQuery& query) {
    std::vector<std::size_t> order(query.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return query.predicted_scores[a] > query.predicted_scores[b];
    });
    return order;
}

double spearman_vs_gold(const RankedQuery& query) {
    const std::size_t k = query.candidates.size();
    if (k < 2) return 1.0;
    const auto order = predicted_order(query);
    std::vector<std::size_t> predicted_rank(k), gold_rank(k);
    for (std::size_t r = 0; r < k; ++r) predicted_rank[order[r]] = r;
    for (std::size_t r = 0; r < k; ++r) gold_rank[query.gold_ranking[r]] = r;
    double d2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double d = static_cast<double>(predicted_rank[i]) - static_cast<double>(gold_rank[i]);
        d2 += d * d;
    }
    double kk = static_cast<double>(k);
    return 1.0 - 6.0 * d2 / (kk * (kk * kk - 1.0));
}

}  // namespace

std::size_t predicted_rank_of_gold_best(const RankedQuery& query) {
    query.validate();
    const std::size_t gold_best = query.gold_ranking.front();
    const auto order = predicted_order(query);
    for (std::size_t r = 0; r < order.size(); ++r)
        if (order[r] == gold_best) return r + 1;
    throw DataError("query " + query.query_id + ": gold-best candidate missing");
}

double mean_reciprocal_rank(const std::vector<RankedQuery>& queries) {
    if (queries.empty()) throw DataError("MRR of an empty query list");
    double total = 0.0;
    for (const auto& q : queries)
        total += 1.0 / static_cast<double>(predicted_rank_of_gold_best(q));
    return total / static_cast<double>(queries.size());
}

LossReport nll_mean_loss(LmBackend& backend,
                         const std::vector<std::pair<std::string, std::string>>& records) {
    LossReport report;
    double total = 0.0;
    std::size_t idx = 0;
    for (const auto& [context, response] : records) {
        if (response.empty())
            throw DataError("record " + std::to_string(idx) + ": empty response");
        auto seq = backend.score(context, response);
        if (seq.token_count == 0)
            throw DataError("record " + std::to_string(idx) + ": response has no tokens");
        double loss = -seq.sum_logprob / static_cast<double>(seq.token_count);
        report.per_record.push_back({std::to_string(idx), loss, seq.token_count});
        total += loss;
        ++idx;
    }
    if (report.per_record.empty()) throw DataError("NLL analysis over an empty record list");
    report.aggregate_mean = total / static_cast<double>(report.per_record.size());
    return report;
}

ConsistencyReport consistency_report(
    const std::map<std::string, std::vector<RankedQuery>>& scorer_runs) {
    if (scorer_runs.empty()) throw DataError("consistency report over no scorers");

    std::set<std::string> reference_ids;
    bool first = true;
    for (const auto& [scorer, queries] : scorer_runs) {
        std::set<std::string> ids;
        for (const auto& q : queries) ids.insert(q.query_id);
        if (ids.size() != queries.size())
            throw DataError("scorer " + scorer + ": duplicate query ids");
        if (first) {
            reference_ids = ids;
            first = false;
        } else if (ids != reference_ids) {
            throw DataError("scorer " + scorer + ": query ids differ from other scorers");
        }
    }

    ConsistencyReport report;
    std::map<std::string, std::map<std::string, std::size_t>> top1;  // scorer -> qid -> index
    for (const auto& [scorer, queries] : scorer_runs) {
        ScorerReport sr;
        sr.scorer = scorer;
        sr.mrr = mean_reciprocal_rank(queries);
        double corr = 0.0;
        for (const auto& q : queries) {
            corr += spearman_vs_gold(q);
            top1[scorer][q.query_id] = predicted_order(q).front();
        }
        sr.rank_corr_aux = corr / static_cast<double>(queries.size());
        report.per_scorer.push_back(std::move(sr));
    }

    for (auto a = scorer_runs.begin(); a != scorer_runs.end(); ++a) {
        for (auto b = std::next(a); b != scorer_runs.end(); ++b) {
            std::size_t agree = 0;
            for (const auto& [qid, idx] : top1[a->first])
                if (top1[b->first][qid] == idx) ++agree;
            report.pairwise.push_back(
                {a->first, b->first,
                 static_cast<double>(agree) / static_cast<double>(reference_ids.size())});
        }
    }
    return report;
}

std::string ConsistencyReport::to_json_string() const {
    json obj;
    json scorers = json::array();
    for (const auto& sr : per_scorer) {
        json s;
        s["scorer"] = sr.scorer;
        s["mrr"] = sr.mrr;
        s["rank_corr_aux"] = sr.rank_corr_aux;
        scorers.push_back(std::move(s));
    }
    obj["per_scorer"] = std::move(scorers);
    json pairs = json::array();
    for (const auto& p : pairwise) {
        json e;
        e["scorer_a"] = p.scorer_a;
        e["scorer_b"] = p.scorer_b;
        e["top1_agreement"] = p.top1_agreement;
        pairs.push_back(std::move(e));
    }
    obj["pairwise"] = std::move(pairs);
    return obj.dump(2);
}

ConsistencyReport ConsistencyReport::from_json_string(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
        throw DataError("malformed consistency report JSON");
    try {
        ConsistencyReport report;
        for (const auto& s : obj.at("per_scorer"))
            report.per_scorer.push_back({s.at("scorer").get<std::string>(),
                                         s.at("mrr").get<double>(),
                                         s.at("rank_corr_aux").get<double>()});
        for (const auto& p : obj.at("pairwise"))
            report.pairwise.push_back({p.at("scorer_a").get<std::string>(),
                                       p.at("scorer_b").get<std::string>(),
                                       p.at("top1_agreement").get<double>()});
        return report;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed consistency report JSON: ") + e.what());
    }
}

std::string ConsistencyReport::to_table() const {
    std::ostringstream out;
    out << "scorer            MRR      rank_corr(aux)\n";
    for (const auto& sr : per_scorer) {
        out << sr.scorer;
        for (std::size_t i = sr.scorer.size(); i < 18; ++i) out << ' ';
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f %.6f\n", sr.mrr, sr.rank_corr_aux);
        out << buf;
    }
    if (!pairwise.empty()) {
        out << "\npairwise top-1 agreement\n";
        for (const auto& p : pairwise) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f\n", p.top1_agreement);
            out << "  " << p.scorer_a << " ~ " << p.scorer_b << ": " << buf;
        }
    }
    return out.str();
}

bool ConsistencyReport::operator==(const ConsistencyReport& other) const {
    if (per_scorer.size() != other.per_scorer.size() ||
        pairwise.size() != other.pairwise.size())
        return false;
    for (std::size_t i = 0; i < per_scorer.size(); ++i) {
        if (per_scorer[i].scorer != other.per_scorer[i].scorer ||
            per_scorer[i].mrr != other.per_scorer[i].mrr ||
            per_scorer[i].rank_corr_aux != other.per_scorer[i].rank_corr_aux)
            return false;
    }
    for (std::size_t i = 0; i < pairwise.size(); ++i) {
        if (pairwise[i].scorer_a != other.pairwise[i].scorer_a ||
            pairwise[i].scorer_b != other.pairwise[i].scorer_b ||
            pairwise[i].top1_agreement != other.pairwise[i].top1_agreement)
            return false;
    }
    return true;
}

std::vector<RankedQuery> load_gold_queries(const std::string& path) {
    std::vector<RankedQuery> queries;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": malformed JSON object");
        try {
            RankedQuery q;
            q.query_id = obj.at("query_id").is_string()
                             ? obj.at("query_id").get<std::string>()
                             : obj.at("query_id").dump();
            q.candidates = obj.at("candidates").get<std::vector<std::string>>();
            q.gold_ranking = obj.at("gold_ranking").get<std::vector<std::size_t>>();
            q.predicted_scores.assign(q.candidates.size(), 0.0);
            queries.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return queries;
}

std::map<std::string, std::vector<RankedQuery>> load_scored_runs(
    const std::string& runs_path, const std::vector<RankedQuery>& gold) {
    std::map<std::string, const RankedQuery*> by_id;
    for (const auto& q : gold) by_id[q.query_id] = &q;

    std::map<std::string, std::vector<RankedQuery>> runs;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(runs_path)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw DataError(runs_path + " line " + std::to_string(line_no) +
                            ": malformed JSON object");
        try {
            std::string qid = obj.at("query_id").is_string()
                                  ? obj.at("query_id").get<std::string>()
                                  : obj.at("query_id").dump();
            auto it = by_id.find(qid);
            if (it == by_id.end())
                throw DataError(runs_path + " line " + std::to_string(line_no) +
                                ": query id \"" + qid + "\" not present in gold file");
            RankedQuery q = *it->second;
            q.predicted_scores = obj.at("predicted_scores").get<std::vector<double>>();
            std::string tag = obj.contains("scorer_tag")
                                  ? obj.at("scorer_tag").get<std::string>()
                                  : "default";
            q.validate();
            runs[tag].push_back(std::move(q));
        } catch (const json::exception& e) {
            throw DataError(runs_path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (runs.empty()) throw DataError(runs_path + ": no scored runs");
    return runs;
}

}  // namespace prefalign
