// prefalign command line tool: corpus filtering, retrieval inspection,
// prompt dumping, single/batch candidate selection, ranker-consistency
// evaluation and NLL analysis. Exit codes: 0 ok, 2 config error,
// 3 backend/capability error, 4 data error, 5 partial batch failure.

#include "prefalign/config.hpp"
#include "prefalign/corpus.hpp"
#include "prefalign/errors.hpp"
#include "prefalign/eval.hpp"
#include "prefalign/pipeline.hpp"
#include "prefalign/prompting.hpp"
#include "prefalign/retrieval.hpp"
#include "prefalign/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace prefalign;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> log_level;
    std::optional<std::string> backend_url;
    std::optional<std::string> cache_path;
    bool dry_run = false;
};

AppConfig resolve_config(const GlobalArgs& args) {
    AppConfig cfg = args.config_path.empty() ? AppConfig::defaults()
                                             : AppConfig::load(args.config_path);
    if (args.seed) cfg.pipeline.seed = *args.seed;
    if (args.workers) cfg.pipeline.workers = *args.workers;
    if (args.log_level) cfg.log_level = *args.log_level;
    if (args.backend_url) {
        cfg.backend.type = "remote";
        cfg.backend.base_url = *args.backend_url;
    }
    if (args.cache_path) cfg.cache_path = *args.cache_path;
    return cfg;
}

void require_valid(const AppConfig& cfg) { cfg.validate_or_throw(); }

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        write_file(out_path, text);
    }
}

int print_plan(const GlobalArgs& args, const std::string& command, const json& detail) {
    AppConfig cfg = resolve_config(args);
    auto violations = cfg.validate();
    if (!violations.empty()) {
        std::string joined;
        for (const auto& v : violations) {
            if (!joined.empty()) joined += "; ";
            joined += v;
        }
        throw ConfigError("invalid config: " + joined);
    }
    json plan;
    plan["command"] = command;
    plan["args"] = detail;
    plan["config"] = json::parse(cfg.to_json_string());
    std::cout << plan.dump(2) << "\n";
    return 0;
}

DemoPool load_pool(const std::string& path, const AppConfig& cfg,
                   const std::string& sidecar) {
    auto records = load_preference_records(path);
    if (!sidecar.empty())
        return DemoPool::with_sidecar(std::move(records), cfg.pipeline.retrieval, sidecar);
    return DemoPool(std::move(records), cfg.pipeline.retrieval);
}

int run_filter(const GlobalArgs& args, const std::string& in_path,
               const std::string& out_path, const std::string& preset,
               std::optional<std::size_t> max_prompt, std::optional<std::size_t> max_resp) {
    AppConfig cfg = resolve_config(args);
    LengthFilter filter = cfg.length_filter;
    if (preset == "hh_rlhf") filter = LengthFilter::hh_rlhf();
    else if (preset == "synthetic_gpt") filter = LengthFilter::synthetic_gpt();
    else if (!preset.empty()) throw ConfigError("unknown preset: " + preset);
    if (max_prompt) filter.max_prompt_tokens = *max_prompt;
    if (max_resp) filter.max_response_tokens = *max_resp;
    filter.validate();

    if (args.dry_run)
        return print_plan(args, "filter",
                          {{"in", in_path},
                           {"out", out_path},
                           {"max_prompt_tokens", filter.max_prompt_tokens},
                           {"max_response_tokens", filter.max_response_tokens}});

    auto records = load_preference_records(in_path);
    auto kept = filter_by_length(records, filter);
    save_preference_records(out_path, kept);
    std::cerr << "kept " << kept.size() << " of " << records.size() << " records\n";
    return 0;
}

int run_retrieve(const GlobalArgs& args, const std::string& query_file,
                 const std::string& pool_path, std::optional<std::size_t> m,
                 std::optional<std::size_t> pool_k, std::optional<std::size_t> window_l,
                 const std::string& ordering, const std::string& sidecar) {
    AppConfig cfg = resolve_config(args);
    if (m) cfg.pipeline.retrieval.m = *m;
    if (pool_k) cfg.pipeline.retrieval.pool_k = *pool_k;
    if (window_l) cfg.pipeline.retrieval.window_l = *window_l;
    if (!ordering.empty())
        cfg.pipeline.retrieval.ordering = demo_ordering_from_string(ordering);
    cfg.pipeline.retrieval.validate();

    if (args.dry_run)
        return print_plan(args, "retrieve",
                          {{"query_file", query_file}, {"pool", pool_path}});

    const std::string x = read_file(query_file);
    auto pool = load_pool(pool_path, cfg, sidecar);
    auto embedder = make_embedder(cfg);
    auto result = retrieve_demonstrations(pool, *embedder, x, cfg.pipeline.retrieval,
                                          cfg.pipeline.strict);
    for (const auto& sel : result.selected) {
        json line;
        line["id"] = sel.id;
        line["pool_index"] = sel.pool_index;
        line["bm25"] = sel.bm25;
        line["cosine"] = sel.cosine;
        std::cout << line.dump() << "\n";
    }
    if (result.truncated) log_warn("pool smaller than m; returned every record");
    return 0;
}

int run_render(const GlobalArgs& args, const std::string& input_path,
               const std::string& demos_path, const std::string& mode,
               const std::string& style_word, const std::string& out_path) {
    AppConfig cfg = resolve_config(args);
    const std::string word = style_word.empty() ? cfg.pipeline.style_word : style_word;

    if (args.dry_run)
        return print_plan(args, "render",
                          {{"input", input_path}, {"demos", demos_path}, {"mode", mode}});

    const std::string x = read_file(input_path);
    std::vector<Demonstration> demos;
    if (!demos_path.empty())
        for (const auto& rec : load_preference_records(demos_path))
            demos.push_back(demonstration_from(rec));

    std::string rendered;
    if (mode == "positive") rendered = render_positive_context(demos, x, word);
    else if (mode == "negative") rendered = render_negative_context(demos, x, word);
    else if (mode == "zero_shot") rendered = render_zero_shot(x);
    else throw ConfigError("unknown render mode: " + mode);

    emit(rendered, out_path);
    return 0;
}

int run_select(const GlobalArgs& args, const std::string& input_path,
               const std::string& pool_path, const std::string& scorer,
               const std::string& out_path) {
    AppConfig cfg = resolve_config(args);
    if (!scorer.empty()) cfg.pipeline.scorer = scorer_kind_from_string(scorer);
    require_valid(cfg);

    if (args.dry_run)
        return print_plan(args, "select", {{"input", input_path}, {"pool", pool_path}});

    const std::string x = read_file(input_path);
    auto resolved = make_backend(cfg);
    auto embedder = make_embedder(cfg);

    std::optional<DemoPool> pool;
    if (!pool_path.empty()) pool.emplace(load_pool(pool_path, cfg, ""));

    auto record = select_best(*resolved.backend, pool ? &*pool : nullptr, embedder.get(), x,
                              cfg.pipeline);
    emit(record.to_jsonl_line() + "\n", out_path);
    return 0;
}

int run_batch_cmd(const GlobalArgs& args, const std::string& inputs_path,
                  const std::string& pool_path, const std::string& scorer,
                  const std::string& out_path) {
    AppConfig cfg = resolve_config(args);
    if (!scorer.empty()) cfg.pipeline.scorer = scorer_kind_from_string(scorer);
    require_valid(cfg);

    if (args.dry_run)
        return print_plan(args, "batch",
                          {{"inputs", inputs_path}, {"pool", pool_path}, {"out", out_path}});

    auto inputs = load_batch_inputs(inputs_path);
    auto resolved = make_backend(cfg);
    auto embedder = make_embedder(cfg);

    std::optional<DemoPool> pool;
    if (!pool_path.empty()) pool.emplace(load_pool(pool_path, cfg, ""));

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write output file: " + out_path);
    auto summary = run_batch(*resolved.backend, pool ? &*pool : nullptr, embedder.get(),
                             inputs, cfg.pipeline, out, resolved.cache);
    std::cout << summary.to_json_string() << "\n";
    if (summary.failed > 0)
        throw PartialFailure(std::to_string(summary.failed) + " of " +
                             std::to_string(summary.total) + " inputs failed");
    return 0;
}

int run_eval_mrr(const GlobalArgs& args, const std::string& runs_path,
                 const std::string& gold_path, const std::string& json_out) {
    if (args.dry_run)
        return print_plan(args, "eval-mrr", {{"runs", runs_path}, {"gold", gold_path}});

    auto gold = load_gold_queries(gold_path);
    auto runs = load_scored_runs(runs_path, gold);
    for (auto& [tag, queries] : runs) {
        if (queries.size() != gold.size())
            throw DataError("scorer " + tag + " covers " + std::to_string(queries.size()) +
                            " of " + std::to_string(gold.size()) + " gold queries");
    }
    auto report = consistency_report(runs);
    std::cout << report.to_table();
    if (!json_out.empty()) write_file(json_out, report.to_json_string());
    return 0;
}

int run_analyze_loss(const GlobalArgs& args, const std::string& records_path,
                     const std::string& out_path) {
    AppConfig cfg = resolve_config(args);
    require_valid(cfg);
    if (args.dry_run) return print_plan(args, "analyze-loss", {{"records", records_path}});

    std::vector<std::pair<std::string, std::string>> records;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(records_path)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("response"))
            throw DataError(records_path + " line " + std::to_string(line_no) +
                            ": expected {context, response}");
        records.emplace_back(obj.value("context", ""), obj.at("response").get<std::string>());
    }

    auto resolved = make_backend(cfg);
    auto report = nll_mean_loss(*resolved.backend, records);
    json out;
    out["aggregate_mean"] = report.aggregate_mean;
    json per = json::array();
    for (const auto& rec : report.per_record)
        per.push_back({{"id", rec.id}, {"mean_nll", rec.mean_nll},
                       {"token_count", rec.token_count}});
    out["per_record"] = std::move(per);
    emit(out.dump(2) + "\n", out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prefalign: inference-time preference alignment engine"};
    app.require_subcommand(1);

    GlobalArgs global;
    app.add_option("--config", global.config_path, "JSON config file");
    app.add_option("--seed", global.seed, "root seed; subsystem seeds derive from it");
    app.add_option("--workers", global.workers, "batch parallelism cap");
    app.add_option("--log-level", global.log_level, "error|warn|info|debug");
    app.add_option("--backend-url", global.backend_url, "remote backend base URL");
    app.add_option("--cache", global.cache_path, "score cache file");
    app.add_flag("--dry-run", global.dry_run,
                 "validate config and print the resolved plan without backend calls");

    // filter
    auto* filter_cmd = app.add_subcommand("filter", "length-filter a preference corpus");
    std::string filter_in, filter_out, filter_preset;
    std::optional<std::size_t> filter_max_prompt, filter_max_resp;
    filter_cmd->add_option("--in", filter_in, "input JSONL")->required();
    filter_cmd->add_option("--out", filter_out, "output JSONL")->required();
    filter_cmd->add_option("--preset", filter_preset, "hh_rlhf|synthetic_gpt");
    filter_cmd->add_option("--max-prompt-tokens", filter_max_prompt);
    filter_cmd->add_option("--max-response-tokens", filter_max_resp);

    // retrieve
    auto* retrieve_cmd = app.add_subcommand("retrieve", "inspect two-stage retrieval");
    std::string retrieve_query, retrieve_pool, retrieve_ordering, retrieve_sidecar;
    std::optional<std::size_t> retrieve_m, retrieve_pool_k, retrieve_window;
    retrieve_cmd->add_option("--query-file", retrieve_query, "file holding the test prompt")
        ->required();
    retrieve_cmd->add_option("--pool", retrieve_pool, "demonstration pool JSONL")->required();
    retrieve_cmd->add_option("--m", retrieve_m, "demonstrations to return");
    retrieve_cmd->add_option("--pool-k", retrieve_pool_k, "BM25 shortlist size");
    retrieve_cmd->add_option("--window-l", retrieve_window, "tail window length");
    retrieve_cmd->add_option("--ordering", retrieve_ordering,
                             "most_similar_last|most_similar_first|pool_order");
    retrieve_cmd->add_option("--index-sidecar", retrieve_sidecar, "BM25 index sidecar file");

    // render
    auto* render_cmd = app.add_subcommand("render", "dump rendered prompts");
    std::string render_input, render_demos, render_mode = "positive", render_style,
                render_out;
    render_cmd->add_option("--input", render_input, "file holding the test prompt")
        ->required();
    render_cmd->add_option("--demos", render_demos, "demonstrations JSONL, used in order");
    render_cmd->add_option("--mode", render_mode, "positive|negative|zero_shot");
    render_cmd->add_option("--style-word", render_style, "template style word");
    render_cmd->add_option("--out", render_out, "write to file instead of stdout");

    // select
    auto* select_cmd = app.add_subcommand("select", "best-of-n selection for one prompt");
    std::string select_input, select_pool, select_scorer, select_out;
    select_cmd->add_option("--input", select_input, "file holding the test prompt")
        ->required();
    select_cmd->add_option("--pool", select_pool, "demonstration pool JSONL");
    select_cmd->add_option("--scorer", select_scorer,
                           "S|S_hat|naive_loglik|random|first");
    select_cmd->add_option("--out", select_out, "write the run record to a file");

    // batch
    auto* batch_cmd = app.add_subcommand("batch", "batch selection over an input file");
    std::string batch_inputs, batch_pool, batch_scorer, batch_out;
    batch_cmd->add_option("--inputs", batch_inputs, "inputs JSONL ({prompt, id?})")
        ->required();
    batch_cmd->add_option("--pool", batch_pool, "demonstration pool JSONL");
    batch_cmd->add_option("--scorer", batch_scorer, "S|S_hat|naive_loglik|random|first");
    batch_cmd->add_option("--out", batch_out, "run-record JSONL output")->required();

    // eval-mrr
    auto* eval_cmd = app.add_subcommand("eval-mrr", "ranker consistency against gold");
    std::string eval_runs, eval_gold, eval_json_out;
    eval_cmd->add_option("--runs", eval_runs, "scored runs JSONL")->required();
    eval_cmd->add_option("--gold", eval_gold, "gold ranking JSONL")->required();
    eval_cmd->add_option("--json-out", eval_json_out, "also write the report as JSON");

    // analyze-loss
    auto* loss_cmd = app.add_subcommand("analyze-loss", "mean-NLL analysis of responses");
    std::string loss_records, loss_out;
    loss_cmd->add_option("--records", loss_records, "JSONL of {context, response}")
        ->required();
    loss_cmd->add_option("--out", loss_out, "write the report to a file");

    try {
        app.parse(argc, argv);

        if (filter_cmd->parsed())
            return run_filter(global, filter_in, filter_out, filter_preset,
                              filter_max_prompt, filter_max_resp);
        if (retrieve_cmd->parsed())
            return run_retrieve(global, retrieve_query, retrieve_pool, retrieve_m,
                                retrieve_pool_k, retrieve_window, retrieve_ordering,
                                retrieve_sidecar);
        if (render_cmd->parsed())
            return run_render(global, render_input, render_demos, render_mode, render_style,
                              render_out);
        if (select_cmd->parsed())
            return run_select(global, select_input, select_pool, select_scorer, select_out);
        if (batch_cmd->parsed())
            return run_batch_cmd(global, batch_inputs, batch_pool, batch_scorer, batch_out);
        if (eval_cmd->parsed())
            return run_eval_mrr(global, eval_runs, eval_gold, eval_json_out);
        if (loss_cmd->parsed()) return run_analyze_loss(global, loss_records, loss_out);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::string what = e.what();
        for (auto& c : what)
            if (c == '\n') c = ' ';
        std::cerr << "error: " << e.error_class() << ": " << what << "\n";
        const auto& klass = e.error_class();
        if (klass == "config_error") return 2;
        if (klass == "capability_error" || klass == "transport_error") return 3;
        if (klass == "data_error") return 4;
        if (klass == "partial_failure") return 5;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
