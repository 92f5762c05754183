#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "iccl/errors.hpp"
#include "iccl/runner.hpp"
#include "iccl/version.hpp"

namespace {

using iccl::runner::ExperimentConfig;

iccl::gateway::BackendConfig backend_from_flags(const std::string& kind,
                                                const std::string& base_url,
                                                const std::string& model) {
    iccl::gateway::BackendConfig cfg;
    cfg.backend_kind =
        kind == "http" ? iccl::gateway::BackendKind::http : iccl::gateway::BackendKind::mock;
    cfg.base_url = base_url;
    if (!model.empty()) cfg.model_name = model;
    return cfg;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string part = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                            : comma - pos);
        if (!part.empty()) seeds.push_back(std::stoull(part));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"iccl: curriculum-ordered in-context learning experiment harness"};
    app.set_version_flag("--version", std::string("iccl ") + ICCL_VERSION);
    app.require_subcommand(1);

    bool strict = false;
    app.add_flag("--strict", strict, "abort on the first per-record error");

    // run
    auto* run = app.add_subcommand("run", "execute a full experiment from a config file");
    std::string run_config;
    std::string run_backend, run_template, run_seeds, run_run_id;
    std::vector<std::string> run_strategies;
    int run_k = -1;
    bool run_normalize = false;
    run->add_option("--config", run_config, "experiment config file")->required();
    run->add_option("--backend", run_backend, "override backend kind (http|mock)");
    run->add_option("--template", run_template, "override template family (mixtral|llama2|qwen|messages)");
    run->add_option("--strategy", run_strategies, "override strategy list (repeatable)");
    run->add_option("--seeds", run_seeds, "override seeds, comma separated");
    run->add_option("--k", run_k, "override candidates per test");
    run->add_flag("--normalize-ppl", run_normalize, "length-normalize perplexity");
    run->add_option("--run-id", run_run_id, "name of the run directory");

    // score
    auto* score = app.add_subcommand("score", "perplexity-score a demonstration pool");
    std::string score_task, score_pool, score_out = "scores.jsonl";
    std::string score_backend = "mock", score_base_url, score_model, score_template = "mixtral";
    std::string score_system;
    bool score_normalize = false;
    score->add_option("--task", score_task, "task spec file")->required();
    score->add_option("--pool", score_pool, "demonstration pool file")->required();
    score->add_option("--out", score_out, "output scores file");
    score->add_option("--backend", score_backend, "http|mock");
    score->add_option("--base-url", score_base_url, "http backend base url");
    score->add_option("--model", score_model, "model name");
    score->add_option("--template", score_template, "template family");
    score->add_option("--system-message", score_system, "system message for chat families");
    score->add_flag("--normalize-ppl", score_normalize, "length-normalize perplexity");

    // order
    auto* order = app.add_subcommand("order", "order candidate sets from a score file");
    std::string order_in, order_out = "orders.jsonl", order_strategy = "iccl";
    std::uint64_t order_seed = 0;
    bool order_has_seed = false;
    order->add_option("--candidates", order_in, "candidate/score records")->required();
    order->add_option("--out", order_out, "output order plans");
    order->add_option("--strategy", order_strategy, "ordering strategy kind");
    order->add_option("--seed", order_seed, "seed for the random strategy")
        ->each([&](const std::string&) { order_has_seed = true; });

    // eval
    auto* eval = app.add_subcommand("eval", "score predictions against gold labels");
    std::string eval_task, eval_preds, eval_tests, eval_out = "metrics.json";
    eval->add_option("--task", eval_task, "task spec file")->required();
    eval->add_option("--predictions", eval_preds, "predictions jsonl")->required();
    eval->add_option("--tests", eval_tests, "gold test file")->required();
    eval->add_option("--out", eval_out, "output metrics file");

    // kendall
    auto* kendall = app.add_subcommand("kendall", "Kendall's W and mean ranks for expert rankings");
    std::string kendall_file;
    kendall->add_option("--rankings", kendall_file, "ranking records {judge, demo_id, rank}")
        ->required();

    // search
    auto* search = app.add_subcommand("search", "exhaustive order search over small candidate sets");
    std::string search_in;
    std::size_t search_max_n = 6;
    search->add_option("--candidates", search_in, "candidate/score records")->required();
    search->add_option("--max-n", search_max_n, "largest candidate set to enumerate");

    // report
    auto* report = app.add_subcommand("report", "tabulate metrics files with mean±std and deltas");
    std::vector<std::string> report_files;
    std::string report_baseline = "random";
    bool report_csv = false;
    report->add_option("files", report_files, "metrics.json files")->required();
    report->add_option("--baseline", report_baseline, "baseline strategy for delta columns");
    report->add_flag("--csv", report_csv, "emit CSV instead of the text table");

    CLI11_PARSE(app, argc, argv);

    try {
        int record_errors = 0;
        if (*run) {
            ExperimentConfig cfg = iccl::runner::load_experiment_config(run_config);
            if (!run_backend.empty())
                cfg.backend = backend_from_flags(run_backend, cfg.backend.base_url,
                                                 cfg.backend.model_name);
            if (!run_template.empty())
                cfg.family.kind = iccl::promptkit::family_kind_from_name(run_template);
            if (!run_strategies.empty()) {
                cfg.strategies.clear();
                for (const std::string& name : run_strategies) {
                    iccl::curriculum::OrderingStrategy s;
                    s.kind = iccl::curriculum::strategy_kind_from_name(name);
                    cfg.strategies.push_back(s);
                }
            }
            if (!run_seeds.empty()) cfg.seeds = parse_seed_list(run_seeds);
            if (run_k >= 0) cfg.k = static_cast<std::size_t>(run_k);
            if (run_normalize) cfg.normalize_perplexity = true;
            if (!run_run_id.empty()) cfg.run_id = run_run_id;

            const iccl::runner::RunOutcome outcome = iccl::runner::cmd_run(cfg);
            std::cout << "run dir: " << outcome.run_dir.string() << "\n"
                      << "predictions: " << outcome.predictions << " (resumed " << outcome.skipped
                      << ")\n"
                      << "failures: " << outcome.failures << "\n";
            if (outcome.failures > 0) {
                std::cerr << "run is partial; rerun with the same --run-id to retry failures\n";
                return 2;
            }
        } else if (*score) {
            iccl::gateway::BackendConfig backend =
                backend_from_flags(score_backend, score_base_url, score_model);
            iccl::promptkit::TemplateFamily family;
            family.kind = iccl::promptkit::family_kind_from_name(score_template);
            if (!score_system.empty()) family.system_message = score_system;
            record_errors = iccl::runner::cmd_score(score_task, score_pool, backend, family,
                                                    score_normalize, score_out, strict);
        } else if (*order) {
            iccl::curriculum::OrderingStrategy strategy;
            strategy.kind = iccl::curriculum::strategy_kind_from_name(order_strategy);
            if (order_has_seed) strategy.seed = order_seed;
            record_errors = iccl::runner::cmd_order(order_in, strategy, order_out, strict);
        } else if (*eval) {
            record_errors =
                iccl::runner::cmd_eval(eval_task, eval_preds, eval_tests, eval_out, strict);
        } else if (*kendall) {
            record_errors = iccl::runner::cmd_kendall(kendall_file, std::cout);
        } else if (*search) {
            record_errors = iccl::runner::cmd_search(search_in, search_max_n, std::cout, strict);
        } else if (*report) {
            std::vector<std::filesystem::path> files(report_files.begin(), report_files.end());
            record_errors = iccl::runner::cmd_report(files, report_baseline, std::cout, report_csv);
        }
        if (record_errors > 0) {
            std::cerr << record_errors << " record error(s)\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
