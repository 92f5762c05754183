#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iccl/corpus.hpp"
#include "iccl/curriculum.hpp"
#include "iccl/gateway.hpp"
#include "iccl/promptkit.hpp"

namespace iccl::runner {

enum class Level { corpus, instance };

struct ExperimentConfig {
    std::filesystem::path task_file;
    std::filesystem::path pool_file;
    std::filesystem::path test_file;
    Level level = Level::instance;
    std::vector<std::string> corpus_demo_ids; // corpus level: the fixed pool
    std::size_t k = 5;                        // instance level: candidates per test
    std::vector<std::uint64_t> seeds;
    std::vector<curriculum::OrderingStrategy> strategies;
    bool normalize_perplexity = false;
    promptkit::TemplateFamily family;
    gateway::BackendConfig backend;
    gateway::MockBehavior mock;
    bool rigged_gold_from_test_file = false;  // fill rigged gold map from test golds
    std::optional<std::filesystem::path> rankings_file; // human_curriculum input
    std::filesystem::path runs_dir = "runs";
    std::optional<std::string> run_id;
    std::optional<std::filesystem::path> embedding_cache;
    std::string baseline_strategy = "random"; // delta reference in reports
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void validate_experiment_config(const ExperimentConfig& cfg);

struct RunOutcome {
    std::filesystem::path run_dir;
    std::size_t predictions = 0;
    std::size_t skipped = 0;  // already persisted (resumed runs)
    std::size_t failures = 0; // run is partial when > 0
};

// The full experiment: per (strategy x seed x test) build candidates,
// score difficulty where needed, order, render, generate, persist; then
// score runs, aggregate seeds, and write metrics + report. Outputs are
// sorted by (strategy, seed, test_id) before the final write, so worker
// scheduling never changes bytes.
RunOutcome cmd_run(const ExperimentConfig& cfg);

// File-in / file-out wrappers over single module operations. Each returns
// the number of per-record errors encountered (0 on full success); with
// strict set, the first record error aborts by rethrowing.
int cmd_score(const std::filesystem::path& task_file, const std::filesystem::path& pool_file,
              const gateway::BackendConfig& backend, const promptkit::TemplateFamily& family,
              bool normalize, const std::filesystem::path& out_path, bool strict);

int cmd_order(const std::filesystem::path& candidates_file,
              const curriculum::OrderingStrategy& strategy,
              const std::filesystem::path& out_path, bool strict);

int cmd_eval(const std::filesystem::path& task_file, const std::filesystem::path& predictions_file,
             const std::filesystem::path& test_file, const std::filesystem::path& out_path,
             bool strict);

int cmd_kendall(const std::filesystem::path& rankings_file, std::ostream& out);

int cmd_search(const std::filesystem::path& candidates_file, std::size_t max_n, std::ostream& out,
               bool strict);

int cmd_report(const std::vector<std::filesystem::path>& metrics_files,
               const std::string& baseline_strategy, std::ostream& out, bool csv = false);

} // namespace iccl::runner
