// Python bindings for the main operations: corpus handling, the toy
// n-gram backend, prompt rendering, contrastive scoring, two-stage
// retrieval, the selection pipeline and the evaluation harness.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prefalign/config.hpp"
#include "prefalign/corpus.hpp"
#include "prefalign/errors.hpp"
#include "prefalign/eval.hpp"
#include "prefalign/pipeline.hpp"
#include "prefalign/prompting.hpp"
#include "prefalign/remote_lm.hpp"
#include "prefalign/retrieval.hpp"
#include "prefalign/score_cache.hpp"
#include "prefalign/scoring.hpp"
#include "prefalign/toy_lm.hpp"
#include "prefalign/util.hpp"

#include <fstream>

namespace py = pybind11;
using namespace prefalign;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Inference-time preference alignment: retrieval, in-context "
              "prompting, contrastive candidate scoring and evaluation.";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<CapabilityError>(m, "CapabilityError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<PartialFailure>(m, "PartialFailure");
    py::register_exception<TransportError>(m, "TransportError");

    // ---- corpus ----
    py::enum_<RecordSource>(m, "RecordSource")
        .value("original", RecordSource::original)
        .value("teacher", RecordSource::teacher);

    py::class_<PreferenceRecord>(m, "PreferenceRecord")
        .def(py::init<>())
        .def(py::init([](std::string prompt, std::string chosen, std::string rejected,
                         std::string id, RecordSource source) {
                 return PreferenceRecord{std::move(prompt), std::move(chosen),
                                         std::move(rejected), std::move(id), source};
             }),
             py::arg("prompt"), py::arg("chosen"), py::arg("rejected"), py::arg("id") = "",
             py::arg("source") = RecordSource::original)
        .def_readwrite("prompt", &PreferenceRecord::prompt)
        .def_readwrite("chosen", &PreferenceRecord::chosen)
        .def_readwrite("rejected", &PreferenceRecord::rejected)
        .def_readwrite("id", &PreferenceRecord::id)
        .def_readwrite("source", &PreferenceRecord::source)
        .def("__eq__", [](const PreferenceRecord& a, const PreferenceRecord& b) {
            return a == b;
        });

    py::class_<LengthFilter>(m, "LengthFilter")
        .def(py::init<>())
        .def(py::init([](std::size_t max_prompt, std::size_t max_response,
                         std::string tokenizer_id) {
                 return LengthFilter{max_prompt, max_response, std::move(tokenizer_id)};
             }),
             py::arg("max_prompt_tokens"), py::arg("max_response_tokens"),
             py::arg("tokenizer_id") = "whitespace")
        .def_readwrite("max_prompt_tokens", &LengthFilter::max_prompt_tokens)
        .def_readwrite("max_response_tokens", &LengthFilter::max_response_tokens)
        .def_readwrite("tokenizer_id", &LengthFilter::tokenizer_id)
        .def_static("hh_rlhf", &LengthFilter::hh_rlhf)
        .def_static("synthetic_gpt", &LengthFilter::synthetic_gpt);

    m.def("load_preference_records", &load_preference_records, py::arg("path"));
    m.def("save_preference_records", &save_preference_records, py::arg("path"),
          py::arg("records"));
    m.def("parse_preference_records", &parse_preference_records, py::arg("jsonl"),
          py::arg("origin") = "memory");
    m.def(
        "filter_by_length",
        [](const std::vector<PreferenceRecord>& records, const LengthFilter& filter,
           const std::optional<TokenCounter>& counter) {
            return counter ? filter_by_length(records, filter, *counter)
                           : filter_by_length(records, filter);
        },
        py::arg("records"), py::arg("filter"), py::arg("count_tokens") = std::nullopt);

    // ---- lm backend ----
    py::class_<GenerationParams>(m, "GenerationParams")
        .def(py::init<>())
        .def_readwrite("n", &GenerationParams::n)
        .def_readwrite("top_p", &GenerationParams::top_p)
        .def_readwrite("temperature", &GenerationParams::temperature)
        .def_readwrite("max_tokens", &GenerationParams::max_tokens)
        .def_readwrite("seed", &GenerationParams::seed)
        .def("validate", &GenerationParams::validate);

    py::class_<TokenLogprob>(m, "TokenLogprob")
        .def_readonly("token", &TokenLogprob::token)
        .def_readonly("logprob", &TokenLogprob::logprob);

    py::class_<SequenceScore>(m, "SequenceScore")
        .def_readonly("token_logprobs", &SequenceScore::token_logprobs)
        .def_readonly("sum_logprob", &SequenceScore::sum_logprob)
        .def_readonly("token_count", &SequenceScore::token_count);

    py::class_<LmBackend, std::shared_ptr<LmBackend>>(m, "LmBackend")
        .def("backend_id", &LmBackend::backend_id)
        .def("deterministic_completion", &LmBackend::deterministic_completion)
        .def("complete", &LmBackend::complete, py::arg("context"), py::arg("params"),
             py::call_guard<py::gil_scoped_release>())
        .def("score", &LmBackend::score, py::arg("context"), py::arg("completion"),
             py::call_guard<py::gil_scoped_release>());

    py::class_<ToyNgramConfig>(m, "ToyNgramConfig")
        .def(py::init<>())
        .def_readwrite("order", &ToyNgramConfig::order)
        .def_readwrite("smoothing_alpha", &ToyNgramConfig::smoothing_alpha)
        .def_readwrite("adapt_weight", &ToyNgramConfig::adapt_weight)
        .def_readwrite("eos_token", &ToyNgramConfig::eos_token);

    py::class_<ToyNgramLm, LmBackend, std::shared_ptr<ToyNgramLm>>(m, "ToyNgramLm")
        .def(py::init<ToyNgramConfig, std::vector<std::string>>(), py::arg("config"),
             py::arg("vocabulary"))
        .def("add_count", &ToyNgramLm::add_count, py::arg("gram"), py::arg("token"),
             py::arg("count"))
        .def_static("fit", &ToyNgramLm::fit, py::arg("config"), py::arg("lines"))
        .def_property_readonly("vocabulary", &ToyNgramLm::vocabulary)
        .def("next_token_distribution", &ToyNgramLm::next_token_distribution,
             py::arg("history"))
        .def("token_probability", &ToyNgramLm::token_probability, py::arg("history"),
             py::arg("token"))
        .def("to_json", &ToyNgramLm::to_json_string)
        .def_static("from_json", &ToyNgramLm::from_json_string, py::arg("text"))
        .def("save", &ToyNgramLm::save, py::arg("path"))
        .def_static("load", &ToyNgramLm::load, py::arg("path"));

    m.def("enumerate_distribution", &enumerate_distribution, py::arg("lm"),
          py::arg("context"), py::arg("max_len"));

    py::class_<RemoteOptions>(m, "RemoteOptions")
        .def(py::init<>())
        .def_readwrite("base_url", &RemoteOptions::base_url)
        .def_readwrite("api_key", &RemoteOptions::api_key)
        .def_readwrite("model", &RemoteOptions::model)
        .def_readwrite("max_inflight", &RemoteOptions::max_inflight)
        .def_readwrite("max_retries", &RemoteOptions::max_retries)
        .def_readwrite("backoff_initial_ms", &RemoteOptions::backoff_initial_ms);

    py::class_<RemoteLm, LmBackend, std::shared_ptr<RemoteLm>>(m, "RemoteLm")
        .def(py::init<RemoteOptions>(), py::arg("options"));

    py::class_<CountingLm, LmBackend, std::shared_ptr<CountingLm>>(m, "CountingLm")
        .def(py::init<std::shared_ptr<LmBackend>>(), py::arg("inner"))
        .def_property_readonly("complete_calls", &CountingLm::complete_calls)
        .def_property_readonly("score_calls", &CountingLm::score_calls);

    py::class_<CacheStats>(m, "CacheStats")
        .def_readonly("hits", &CacheStats::hits)
        .def_readonly("misses", &CacheStats::misses)
        .def_readonly("corrupt_dropped", &CacheStats::corrupt_dropped)
        .def("hit_rate", &CacheStats::hit_rate);

    py::class_<ScoreCache, std::shared_ptr<ScoreCache>>(m, "ScoreCache")
        .def(py::init<std::string>(), py::arg("path") = "")
        .def("stats", &ScoreCache::stats)
        .def("size", &ScoreCache::size);

    m.def("cached", &cached, py::arg("inner"), py::arg("cache"),
          "Wrap a backend with a persistent score cache.");

    // ---- prompting ----
    py::class_<Demonstration>(m, "Demonstration")
        .def(py::init([](std::string context, std::optional<std::string> positive,
                         std::optional<std::string> negative, std::string id) {
                 return Demonstration{std::move(context), std::move(positive),
                                      std::move(negative), std::move(id)};
             }),
             py::arg("context"), py::arg("positive_response") = std::nullopt,
             py::arg("negative_response") = std::nullopt, py::arg("id") = "")
        .def_readwrite("context", &Demonstration::context)
        .def_readwrite("positive_response", &Demonstration::positive_response)
        .def_readwrite("negative_response", &Demonstration::negative_response)
        .def_readwrite("id", &Demonstration::id);

    m.def("demonstration_from", &demonstration_from, py::arg("record"));
    m.def("positive_style_words", &positive_style_words);
    m.def("negative_style_words", &negative_style_words);
    m.def("negative_style_for", &negative_style_for, py::arg("positive_word"));
    m.def("render_positive_context", &render_positive_context, py::arg("demos"),
          py::arg("x"), py::arg("style_word") = "polite");
    m.def("render_negative_context", &render_negative_context, py::arg("demos"),
          py::arg("x"), py::arg("style_word") = "offensive");
    m.def("render_zero_shot", &render_zero_shot, py::arg("x"));
    m.def("render_zero_shot_with_header", &render_zero_shot_with_header, py::arg("x"),
          py::arg("style_word") = "polite");

    py::class_<PromptBundle>(m, "PromptBundle")
        .def(py::init<>())
        .def_readwrite("expert_context", &PromptBundle::expert_context)
        .def_readwrite("negative_context", &PromptBundle::negative_context)
        .def_readwrite("zero_shot_context", &PromptBundle::zero_shot_context)
        .def_readwrite("demo_ids", &PromptBundle::demo_ids);

    py::class_<BundleOptions>(m, "BundleOptions")
        .def(py::init<>())
        .def_readwrite("style_word", &BundleOptions::style_word)
        .def_readwrite("negative_style_word", &BundleOptions::negative_style_word)
        .def_readwrite("zero_shot_header", &BundleOptions::zero_shot_header)
        .def_readwrite("need_negative", &BundleOptions::need_negative);

    m.def("assemble_bundle", &assemble_bundle, py::arg("demos"), py::arg("x"),
          py::arg("options") = BundleOptions{});

    // ---- scoring ----
    py::enum_<ScorerTag>(m, "ScorerTag")
        .value("S", ScorerTag::s)
        .value("S_hat", ScorerTag::s_hat)
        .value("external", ScorerTag::external)
        .value("naive", ScorerTag::naive);

    py::enum_<ProbabilityReading>(m, "ProbabilityReading")
        .value("log_product", ProbabilityReading::log_product)
        .value("literal_sum", ProbabilityReading::literal_sum);

    py::class_<ScoreOptions>(m, "ScoreOptions")
        .def(py::init<>())
        .def_readwrite("length_normalized", &ScoreOptions::length_normalized)
        .def_readwrite("reading", &ScoreOptions::reading);

    py::class_<ScoredCandidate>(m, "ScoredCandidate")
        .def_readonly("text", &ScoredCandidate::text)
        .def_readonly("logp_expert", &ScoredCandidate::logp_expert)
        .def_readonly("logp_reference", &ScoredCandidate::logp_reference)
        .def_readonly("logp_negative", &ScoredCandidate::logp_negative)
        .def_readonly("score", &ScoredCandidate::score)
        .def_readonly("scorer_tag", &ScoredCandidate::scorer_tag)
        .def_readonly("token_count", &ScoredCandidate::token_count);

    m.def("sequence_logprob", &sequence_logprob, py::arg("seq"),
          py::arg("options") = ScoreOptions{});
    m.def("normalized_policy_score", &normalized_policy_score, py::arg("seq"));
    m.def("contrastive_score_s", &contrastive_score_s, py::arg("backend"),
          py::arg("bundle"), py::arg("y"), py::arg("options") = ScoreOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("contrastive_score_s_hat", &contrastive_score_s_hat, py::arg("backend"),
          py::arg("bundle"), py::arg("y"), py::arg("options") = ScoreOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("rank_candidates", &rank_candidates, py::arg("candidates"));

    // ---- retrieval ----
    py::enum_<DemoOrdering>(m, "DemoOrdering")
        .value("most_similar_last", DemoOrdering::most_similar_last)
        .value("most_similar_first", DemoOrdering::most_similar_first)
        .value("pool_order", DemoOrdering::pool_order);

    py::class_<RetrievalConfig>(m, "RetrievalConfig")
        .def(py::init<>())
        .def_readwrite("m", &RetrievalConfig::m)
        .def_readwrite("pool_k", &RetrievalConfig::pool_k)
        .def_readwrite("window_l", &RetrievalConfig::window_l)
        .def_readwrite("k1", &RetrievalConfig::k1)
        .def_readwrite("b", &RetrievalConfig::b)
        .def_readwrite("ordering", &RetrievalConfig::ordering)
        .def("validate", [](const RetrievalConfig& cfg) { cfg.validate(); });

    m.def("tail_window", &tail_window, py::arg("tokens"), py::arg("l"));
    m.def("retrieval_tokens",
          [](const std::string& text) { return retrieval_tokens(text); }, py::arg("text"));

    py::class_<Bm25Index>(m, "Bm25Index")
        .def(py::init<std::vector<std::vector<std::string>>, double, double>(),
             py::arg("documents"), py::arg("k1") = 1.2, py::arg("b") = 0.75)
        .def("score", &Bm25Index::score, py::arg("query"), py::arg("doc_id"))
        .def("top_k", &Bm25Index::top_k, py::arg("query"), py::arg("k"))
        .def("idf", &Bm25Index::idf, py::arg("term"))
        .def("document_frequency", &Bm25Index::document_frequency, py::arg("term"))
        .def_property_readonly("average_doc_length", &Bm25Index::average_doc_length)
        .def("__len__", &Bm25Index::size);

    py::class_<Embedder, std::shared_ptr<Embedder>>(m, "Embedder")
        .def("embedder_id", &Embedder::embedder_id)
        .def("embed", &Embedder::embed, py::arg("text"));

    py::class_<HashEmbedder, Embedder, std::shared_ptr<HashEmbedder>>(m, "HashEmbedder")
        .def(py::init<std::size_t, double>(), py::arg("dim") = 64,
             py::arg("raw_scale") = 1.0);

    py::class_<RemoteEmbedder, Embedder, std::shared_ptr<RemoteEmbedder>>(m,
                                                                          "RemoteEmbedder")
        .def(py::init<RemoteOptions>(), py::arg("options"));

    m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));
    m.def("rerank_embed", &rerank_embed, py::arg("embedder"), py::arg("query_text"),
          py::arg("shortlist"), py::arg("m"));

    py::class_<DemoPool>(m, "DemoPool")
        .def(py::init<std::vector<PreferenceRecord>, const RetrievalConfig&>(),
             py::arg("records"), py::arg("config"))
        .def_property_readonly("records", &DemoPool::records)
        .def_property_readonly("pool_hash", &DemoPool::pool_hash)
        .def("save_index_sidecar", &DemoPool::save_index_sidecar, py::arg("path"))
        .def_static("with_sidecar", &DemoPool::with_sidecar, py::arg("records"),
                    py::arg("config"), py::arg("sidecar_path"));

    py::class_<SelectedDemo>(m, "SelectedDemo")
        .def_readonly("pool_index", &SelectedDemo::pool_index)
        .def_readonly("id", &SelectedDemo::id)
        .def_readonly("bm25", &SelectedDemo::bm25)
        .def_readonly("cosine", &SelectedDemo::cosine);

    py::class_<RetrievalResult>(m, "RetrievalResult")
        .def_readonly("selected", &RetrievalResult::selected)
        .def_readonly("truncated", &RetrievalResult::truncated)
        .def("demonstrations", &RetrievalResult::demonstrations, py::arg("pool"));

    m.def("retrieve_demonstrations",
          [](const DemoPool& pool, std::shared_ptr<Embedder> embedder, const std::string& x,
             const RetrievalConfig& cfg, bool strict) {
              return retrieve_demonstrations(pool, *embedder, x, cfg, strict);
          },
          py::arg("pool"), py::arg("embedder"), py::arg("x"), py::arg("config"),
          py::arg("strict") = false);

    // ---- pipeline ----
    py::enum_<ScorerKind>(m, "ScorerKind")
        .value("S", ScorerKind::s)
        .value("S_hat", ScorerKind::s_hat)
        .value("external", ScorerKind::external)
        .value("naive_loglik", ScorerKind::naive_loglik)
        .value("random", ScorerKind::random_pick)
        .value("first", ScorerKind::first);

    py::enum_<RetrievalMode>(m, "RetrievalMode")
        .value("two_stage", RetrievalMode::two_stage)
        .value("random_seeded", RetrievalMode::random_seeded)
        .value("fixed_ids", RetrievalMode::fixed_ids);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("retrieval_mode", &PipelineConfig::retrieval_mode)
        .def_readwrite("retrieval", &PipelineConfig::retrieval)
        .def_readwrite("fixed_demo_ids", &PipelineConfig::fixed_demo_ids)
        .def_readwrite("generation", &PipelineConfig::generation)
        .def_readwrite("scorer", &PipelineConfig::scorer)
        .def_readwrite("score_options", &PipelineConfig::score_options)
        .def_readwrite("style_word", &PipelineConfig::style_word)
        .def_readwrite("negative_style_word", &PipelineConfig::negative_style_word)
        .def_readwrite("zero_shot_header", &PipelineConfig::zero_shot_header)
        .def_readwrite("strict", &PipelineConfig::strict)
        .def_readwrite("seed", &PipelineConfig::seed)
        .def_readwrite("workers", &PipelineConfig::workers)
        .def("validate", [](const PipelineConfig& cfg) { cfg.validate(); });

    py::class_<CandidateOutcome>(m, "CandidateOutcome")
        .def_readonly("candidate", &CandidateOutcome::candidate)
        .def_readonly("scored", &CandidateOutcome::scored)
        .def_readonly("rank", &CandidateOutcome::rank)
        .def_readonly("error", &CandidateOutcome::error);

    py::class_<RunRecord>(m, "RunRecord")
        .def_readonly("input_id", &RunRecord::input_id)
        .def_readonly("input", &RunRecord::input)
        .def_readonly("demo_ids", &RunRecord::demo_ids)
        .def_readonly("scorer", &RunRecord::scorer)
        .def_readonly("candidates", &RunRecord::candidates)
        .def_readonly("selected_index", &RunRecord::selected_index)
        .def_readonly("selected_text", &RunRecord::selected_text)
        .def_readonly("complete_calls", &RunRecord::complete_calls)
        .def_readonly("score_calls", &RunRecord::score_calls)
        .def_readonly("wall_ms", &RunRecord::wall_ms)
        .def("to_jsonl_line", &RunRecord::to_jsonl_line);

    py::class_<BatchInput>(m, "BatchInput")
        .def(py::init([](std::string id, std::string text) {
                 return BatchInput{std::move(id), std::move(text)};
             }),
             py::arg("id"), py::arg("text"))
        .def_readwrite("id", &BatchInput::id)
        .def_readwrite("text", &BatchInput::text);

    py::class_<BatchSummary>(m, "BatchSummary")
        .def_readonly("total", &BatchSummary::total)
        .def_readonly("succeeded", &BatchSummary::succeeded)
        .def_readonly("failed", &BatchSummary::failed)
        .def_readonly("failed_ids", &BatchSummary::failed_ids)
        .def_readonly("mean_selected_score", &BatchSummary::mean_selected_score)
        .def_readonly("complete_calls", &BatchSummary::complete_calls)
        .def_readonly("score_calls", &BatchSummary::score_calls)
        .def_readonly("has_cache", &BatchSummary::has_cache)
        .def_readonly("cache_hit_rate", &BatchSummary::cache_hit_rate)
        .def_readonly("wall_ms", &BatchSummary::wall_ms)
        .def("to_json", &BatchSummary::to_json_string);

    m.def(
        "select_best",
        [](std::shared_ptr<LmBackend> backend, const DemoPool* pool,
           std::shared_ptr<Embedder> embedder, const std::string& x,
           const PipelineConfig& cfg, const std::optional<ExternalScorer>& external,
           const std::string& input_id, std::uint64_t input_index) {
            py::gil_scoped_release release;
            return select_best(*backend, pool, embedder.get(), x, cfg,
                               external ? &*external : nullptr, input_id, input_index);
        },
        py::arg("backend"), py::arg("pool") = nullptr, py::arg("embedder") = nullptr,
        py::arg("x") = "", py::arg("config") = PipelineConfig{},
        py::arg("external") = std::nullopt, py::arg("input_id") = "1",
        py::arg("input_index") = 0);

    m.def(
        "run_batch_to_file",
        [](std::shared_ptr<LmBackend> backend, const DemoPool* pool,
           std::shared_ptr<Embedder> embedder, const std::vector<BatchInput>& inputs,
           const PipelineConfig& cfg, const std::string& out_path,
           std::shared_ptr<ScoreCache> cache) {
            std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
            if (!out) throw DataError("cannot write output file: " + out_path);
            py::gil_scoped_release release;
            return run_batch(*backend, pool, embedder.get(), inputs, cfg, out, cache);
        },
        py::arg("backend"), py::arg("pool") = nullptr, py::arg("embedder") = nullptr,
        py::arg("inputs") = std::vector<BatchInput>{}, py::arg("config") = PipelineConfig{},
        py::arg("out_path") = "", py::arg("cache") = nullptr);

    m.def("load_batch_inputs", &load_batch_inputs, py::arg("path"));

    // ---- eval ----
    py::class_<RankedQuery>(m, "RankedQuery")
        .def(py::init([](std::string query_id, std::vector<std::string> candidates,
                         std::vector<std::size_t> gold_ranking,
                         std::vector<double> predicted_scores) {
                 return RankedQuery{std::move(query_id), std::move(candidates),
                                    std::move(gold_ranking), std::move(predicted_scores)};
             }),
             py::arg("query_id"), py::arg("candidates"), py::arg("gold_ranking"),
             py::arg("predicted_scores"))
        .def_readwrite("query_id", &RankedQuery::query_id)
        .def_readwrite("candidates", &RankedQuery::candidates)
        .def_readwrite("gold_ranking", &RankedQuery::gold_ranking)
        .def_readwrite("predicted_scores", &RankedQuery::predicted_scores)
        .def("validate", &RankedQuery::validate);

    m.def("mean_reciprocal_rank", &mean_reciprocal_rank, py::arg("queries"));
    m.def("predicted_rank_of_gold_best", &predicted_rank_of_gold_best, py::arg("query"));

    m.def(
        "nll_mean_loss",
        [](std::shared_ptr<LmBackend> backend,
           const std::vector<std::pair<std::string, std::string>>& records) {
            py::gil_scoped_release release;
            return nll_mean_loss(*backend, records);
        },
        py::arg("backend"), py::arg("records"));

    py::class_<LossRecord>(m, "LossRecord")
        .def_readonly("id", &LossRecord::id)
        .def_readonly("mean_nll", &LossRecord::mean_nll)
        .def_readonly("token_count", &LossRecord::token_count);

    py::class_<LossReport>(m, "LossReport")
        .def_readonly("per_record", &LossReport::per_record)
        .def_readonly("aggregate_mean", &LossReport::aggregate_mean);

    py::class_<ScorerReport>(m, "ScorerReport")
        .def_readonly("scorer", &ScorerReport::scorer)
        .def_readonly("mrr", &ScorerReport::mrr)
        .def_readonly("rank_corr_aux", &ScorerReport::rank_corr_aux);

    py::class_<PairAgreement>(m, "PairAgreement")
        .def_readonly("scorer_a", &PairAgreement::scorer_a)
        .def_readonly("scorer_b", &PairAgreement::scorer_b)
        .def_readonly("top1_agreement", &PairAgreement::top1_agreement);

    py::class_<ConsistencyReport>(m, "ConsistencyReport")
        .def_readonly("per_scorer", &ConsistencyReport::per_scorer)
        .def_readonly("pairwise", &ConsistencyReport::pairwise)
        .def("to_json", &ConsistencyReport::to_json_string)
        .def_static("from_json", &ConsistencyReport::from_json_string, py::arg("text"))
        .def("to_table", &ConsistencyReport::to_table);

    m.def("consistency_report", &consistency_report, py::arg("scorer_runs"));

    // ---- misc ----
    m.def("split_seed",
          py::overload_cast<std::uint64_t, std::string_view, std::uint64_t>(&split_seed),
          py::arg("root"), py::arg("subsystem"), py::arg("index"));

    m.attr("__version__") = "0.1.0";
}
