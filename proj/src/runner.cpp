#include "iccl/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "iccl/difficulty.hpp"
#include "iccl/errors.hpp"
#include "iccl/evaluation.hpp"
#include "iccl/jsonio.hpp"
#include "iccl/retrieval.hpp"
#include "iccl/version.hpp"

namespace iccl::runner {

using nlohmann::json;

namespace {

std::string iso8601_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

gateway::BackendConfig backend_from_json(const json& j) {
    gateway::BackendConfig cfg;
    const std::string kind = j.value("kind", std::string("mock"));
    if (kind == "mock") cfg.backend_kind = gateway::BackendKind::mock;
    else if (kind == "http") cfg.backend_kind = gateway::BackendKind::http;
    else raise(Errc::config_invalid, "backend kind must be 'mock' or 'http'");
    cfg.base_url = j.value("base_url", std::string{});
    cfg.model_name = j.value("model_name", std::string("mock-lm"));
    cfg.timeout_seconds = j.value("timeout_seconds", 30.0);
    cfg.max_in_flight = j.value("max_in_flight", 4);
    cfg.max_retries = j.value("max_retries", 2);
    cfg.gen_max_tokens = j.value("max_tokens", 64);
    const std::string style = j.value("api_style", std::string("native"));
    if (style == "native") cfg.api_style = gateway::ApiStyle::native;
    else if (style == "openai") cfg.api_style = gateway::ApiStyle::openai;
    else raise(Errc::config_invalid, "api_style must be 'native' or 'openai'");
    return cfg;
}

} // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        raise(Errc::config_invalid, "config " + path.string() + ": " + e.what());
    }
    const std::filesystem::path base = path.parent_path();

    ExperimentConfig cfg;
    cfg.task_file = resolve(base, doc.at("task_file").get<std::string>());
    cfg.pool_file = resolve(base, doc.at("pool_file").get<std::string>());
    cfg.test_file = resolve(base, doc.at("test_file").get<std::string>());

    const std::string level = doc.value("level", std::string("instance"));
    if (level == "corpus") cfg.level = Level::corpus;
    else if (level == "instance") cfg.level = Level::instance;
    else raise(Errc::config_invalid, "level must be 'corpus' or 'instance'");

    cfg.corpus_demo_ids = doc.value("corpus_demo_ids", std::vector<std::string>{});
    cfg.k = doc.value("k", std::size_t{5});
    cfg.seeds = doc.value("seeds", std::vector<std::uint64_t>{});
    cfg.normalize_perplexity = doc.value("normalize_perplexity", false);

    for (const json& entry : doc.value("strategies", json::array())) {
        curriculum::OrderingStrategy strategy;
        if (entry.is_string())
            strategy.kind = curriculum::strategy_kind_from_name(entry.get<std::string>());
        else
            strategy = entry.get<curriculum::OrderingStrategy>();
        cfg.strategies.push_back(std::move(strategy));
    }

    if (doc.contains("template")) {
        const json& t = doc["template"];
        cfg.family.kind = promptkit::family_kind_from_name(t.value("family", std::string("mixtral")));
        if (t.contains("system_message") && !t["system_message"].is_null())
            cfg.family.system_message = t["system_message"].get<std::string>();
    }
    if (doc.contains("backend")) cfg.backend = backend_from_json(doc["backend"]);

    if (doc.contains("mock")) {
        const json& m = doc["mock"];
        cfg.mock.predictions =
            m.value("predictions", std::map<std::string, std::string>{});
        cfg.mock.fallback_text = m.value("fallback", std::string{});
        if (m.contains("rigged")) {
            gateway::RiggedGenerator rigged;
            rigged.gold_by_test_id =
                m["rigged"].value("gold", std::map<std::string, std::string>{});
            rigged.wrong_text = m["rigged"].value("wrong_text", rigged.wrong_text);
            cfg.rigged_gold_from_test_file = m["rigged"].value("gold_from_test_file", false);
            cfg.mock.rigged = std::move(rigged);
        }
    }

    if (doc.contains("rankings_file"))
        cfg.rankings_file = resolve(base, doc["rankings_file"].get<std::string>());
    cfg.runs_dir = resolve(base, doc.value("runs_dir", std::string("runs")));
    if (doc.contains("run_id")) cfg.run_id = doc["run_id"].get<std::string>();
    if (doc.contains("embedding_cache"))
        cfg.embedding_cache = resolve(base, doc["embedding_cache"].get<std::string>());
    cfg.baseline_strategy = doc.value("baseline_strategy", std::string("random"));
    return cfg;
}

void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) raise(Errc::config_invalid, "seeds must be nonempty");
    if (cfg.strategies.empty()) raise(Errc::config_invalid, "strategies must be nonempty");
    std::set<std::string> kinds;
    for (const curriculum::OrderingStrategy& s : cfg.strategies)
        if (!kinds.insert(curriculum::strategy_kind_name(s.kind)).second)
            raise(Errc::config_invalid, "each strategy kind may appear once per run");
    if (cfg.level == Level::corpus && cfg.corpus_demo_ids.empty())
        raise(Errc::config_invalid, "corpus level requires corpus_demo_ids");
    if (cfg.level == Level::instance && cfg.k == 0)
        raise(Errc::config_invalid, "instance level requires k >= 1");
    gateway::validate_backend_config(cfg.backend);
}

namespace {

json config_snapshot(const ExperimentConfig& cfg) {
    json strategies = json::array();
    for (const auto& s : cfg.strategies) strategies.push_back(s);
    json snapshot = {
        {"task_file", cfg.task_file.string()},
        {"pool_file", cfg.pool_file.string()},
        {"test_file", cfg.test_file.string()},
        {"level", cfg.level == Level::corpus ? "corpus" : "instance"},
        {"corpus_demo_ids", cfg.corpus_demo_ids},
        {"k", cfg.k},
        {"seeds", cfg.seeds},
        {"strategies", strategies},
        {"normalize_perplexity", cfg.normalize_perplexity},
        {"template", {{"family", promptkit::family_kind_name(cfg.family.kind)}}},
        {"backend",
         {{"kind", cfg.backend.backend_kind == gateway::BackendKind::mock ? "mock" : "http"},
          {"model_name", cfg.backend.model_name},
          {"base_url", cfg.backend.base_url},
          {"max_in_flight", cfg.backend.max_in_flight},
          {"max_retries", cfg.backend.max_retries}}},
        {"baseline_strategy", cfg.baseline_strategy},
    };
    if (cfg.family.system_message) snapshot["template"]["system_message"] = *cfg.family.system_message;
    if (cfg.rankings_file) snapshot["rankings_file"] = cfg.rankings_file->string();
    return snapshot;
}

struct ResultRecord {
    std::string strategy;
    std::uint64_t seed = 0;
    curriculum::OrderPlan plan;
    evaluation::Prediction prediction;
};

struct FailureRecord {
    std::string strategy;
    std::uint64_t seed = 0;
    std::string test_id;
    std::string error;
};

bool record_less(const ResultRecord& a, const ResultRecord& b) {
    if (a.strategy != b.strategy) return a.strategy < b.strategy;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.prediction.test_id < b.prediction.test_id;
}

std::string query_text(const std::string& primary, const std::optional<std::string>& secondary) {
    return secondary ? primary + "\n" + *secondary : primary;
}

// Everything shared by the worker threads, read-only during the sweep.
struct RunContext {
    explicit RunContext(const ExperimentConfig& c) : cfg(c) {}

    const ExperimentConfig& cfg;
    corpus::TaskSpec spec;
    std::vector<corpus::Demonstration> pool;
    std::vector<corpus::Demonstration> tests;
    std::map<std::string, const corpus::Demonstration*> demo_by_id;
    std::map<std::string, retrieval::CandidateSet> candidates_by_test;
    std::map<std::string, double> complexity_by_demo;
    std::map<std::string, double> mean_rank_by_demo;
    gateway::LmGateway* gw = nullptr;
};

ResultRecord run_one(const RunContext& ctx, const curriculum::OrderingStrategy& strategy,
                     std::uint64_t seed, const corpus::Demonstration& test) {
    const retrieval::CandidateSet& cands = ctx.candidates_by_test.at(test.demo_id);
    std::vector<std::string> candidate_ids;
    for (const auto& [id, sim] : cands.entries) candidate_ids.push_back(id);

    curriculum::OrderingStrategy effective = strategy;
    const std::map<std::string, double>* scores = nullptr;
    std::map<std::string, double> similarity;
    switch (strategy.kind) {
        case curriculum::StrategyKind::iccl:
        case curriculum::StrategyKind::anti_iccl:
            scores = &ctx.complexity_by_demo;
            break;
        case curriculum::StrategyKind::similarity_ascending:
            for (const auto& [id, sim] : cands.entries) similarity[id] = sim;
            scores = &similarity;
            break;
        case curriculum::StrategyKind::human_curriculum:
            scores = &ctx.mean_rank_by_demo;
            break;
        case curriculum::StrategyKind::random:
            effective.seed = seed;
            break;
        case curriculum::StrategyKind::fixed:
            break;
    }

    ResultRecord record;
    record.strategy = curriculum::strategy_kind_name(strategy.kind);
    record.seed = seed;
    record.plan =
        curriculum::order_demonstrations(test.demo_id, candidate_ids, effective, scores);

    std::vector<corpus::Demonstration> demos;
    demos.reserve(record.plan.ordered_demo_ids.size());
    for (const std::string& id : record.plan.ordered_demo_ids)
        demos.push_back(*ctx.demo_by_id.at(id));

    promptkit::TestInput input{test.demo_id, test.primary_text, test.secondary_text};
    const bool mock = ctx.cfg.backend.backend_kind == gateway::BackendKind::mock;
    const promptkit::RenderedPrompt prompt =
        promptkit::render(ctx.cfg.family, ctx.spec, demos, input, mock);

    record.prediction.test_id = test.demo_id;
    record.prediction.raw_text = ctx.gw->generate(prompt);
    record.prediction.parsed = evaluation::parse_label(record.prediction.raw_text, ctx.spec);
    return record;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    for (const json& line : lines) out << line.dump() << "\n";
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f%%", fraction * 100.0);
    return buf;
}

std::string format_mean_std(const evaluation::MeanStd& ms) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f±%.4f", ms.mean, ms.std);
    return buf;
}

// setw counts bytes; ± is two bytes in UTF-8, so pad by display width.
std::string pad_cell(const std::string& cell, std::size_t width) {
    std::size_t display = cell.size();
    for (std::size_t i = 0; i + 1 < cell.size(); ++i)
        if (static_cast<unsigned char>(cell[i]) == 0xC2 &&
            static_cast<unsigned char>(cell[i + 1]) == 0xB1)
            --display;
    std::string padded = cell;
    if (display < width) padded.append(width - display, ' ');
    return padded;
}

// Table-1-shaped text: one row per strategy, one column per populated
// metric (mean±std), then Figure-2-style delta rows against the baseline.
std::string format_report(const json& metrics_doc) {
    const std::vector<std::string> metric_order = {"macro_precision", "macro_f1", "micro_f1",
                                                   "accuracy"};
    std::set<std::string> present;
    std::map<std::string, evaluation::AggregateReport> aggregates;
    for (const auto& [strategy, agg] : metrics_doc.at("aggregates").items()) {
        aggregates[strategy] = agg.get<evaluation::AggregateReport>();
        for (const auto& [name, ms] : aggregates[strategy].metrics) present.insert(name);
    }
    std::vector<std::string> columns;
    for (const std::string& name : metric_order)
        if (present.count(name)) columns.push_back(name);

    std::ostringstream out;
    out << "task: " << metrics_doc.at("task_id").get<std::string>() << "\n";
    out << "seeds:";
    for (const auto& seed : metrics_doc.at("seeds")) out << " " << seed;
    out << "\n\n";

    const std::size_t name_w = 22, col_w = 18;
    out << pad_cell("strategy", name_w);
    for (const std::string& c : columns) out << pad_cell(c, col_w);
    out << "\n";
    for (const auto& [strategy, agg] : aggregates) {
        out << pad_cell(strategy, name_w);
        for (const std::string& c : columns) {
            auto it = agg.metrics.find(c);
            out << pad_cell(it != agg.metrics.end() ? format_mean_std(it->second) : "-", col_w);
        }
        out << "\n";
    }

    const std::string baseline = metrics_doc.value("baseline", std::string{});
    if (metrics_doc.contains("deltas") && !metrics_doc["deltas"].empty()) {
        out << "\nrelative change vs " << baseline << ":\n";
        for (const auto& [strategy, deltas] : metrics_doc["deltas"].items()) {
            out << pad_cell(strategy, name_w);
            for (const std::string& c : columns) {
                out << pad_cell(
                    deltas.contains(c) ? format_percent(deltas[c].get<double>()) : "-", col_w);
            }
            out << "\n";
        }
    }
    if (metrics_doc.value("has_deterministic_strategies", false))
        out << "\nnote: score- and similarity-driven strategies are seed-free; their per-seed "
               "runs are identical under temperature-0 decoding.\n";
    return out.str();
}

} // namespace

RunOutcome cmd_run(const ExperimentConfig& cfg) {
    validate_experiment_config(cfg);

    RunContext ctx(cfg);
    ctx.spec = corpus::load_task_spec(cfg.task_file);
    ctx.pool = corpus::load_pool(cfg.pool_file, ctx.spec);
    ctx.tests = corpus::load_pool(cfg.test_file, ctx.spec);
    if (ctx.tests.empty()) raise(Errc::config_invalid, "test file is empty");
    if (ctx.pool.empty()) raise(Errc::config_invalid, "pool file is empty");
    for (const corpus::Demonstration& d : ctx.pool) ctx.demo_by_id[d.demo_id] = &d;

    if (cfg.level == Level::corpus) {
        if (cfg.corpus_demo_ids.size() != static_cast<std::size_t>(ctx.spec.default_demo_count))
            raise(Errc::config_invalid,
                  "corpus level requires exactly default_demo_count (" +
                      std::to_string(ctx.spec.default_demo_count) + ") demo ids");
        for (const std::string& id : cfg.corpus_demo_ids)
            if (!ctx.demo_by_id.count(id))
                raise(Errc::config_invalid, "corpus demo id '" + id + "' not in pool");
    }

    // Run directory and manifest come before any gateway traffic.
    const std::string run_id = cfg.run_id.value_or("run-" + iso8601_utc_now());
    const std::filesystem::path run_dir = cfg.runs_dir / run_id;
    std::filesystem::create_directories(run_dir);

    gateway::MockBehavior mock = cfg.mock;
    if (mock.fallback_text.empty())
        mock.fallback_text = ctx.spec.label_set.empty() ? "[]" : ctx.spec.label_set.front();
    if (mock.rigged && cfg.rigged_gold_from_test_file)
        for (const corpus::Demonstration& t : ctx.tests)
            mock.rigged->gold_by_test_id[t.demo_id] =
                promptkit::serialize_label(t.gold, ctx.spec);

    {
        json manifest = {{"run_id", run_id},
                         {"code_version", "iccl " ICCL_VERSION},
                         {"started_at", iso8601_utc_now()},
                         {"config", config_snapshot(cfg)}};
        std::ofstream out(run_dir / "manifest.json", std::ios::app);
        if (!out) raise(Errc::io_error, "cannot write manifest in " + run_dir.string());
        out << manifest.dump() << "\n";
    }

    gateway::LmGateway gw(cfg.backend, std::move(mock));
    ctx.gw = &gw;

    // Resume: previously persisted predictions are kept, not regenerated.
    std::vector<ResultRecord> kept;
    std::set<std::tuple<std::string, std::uint64_t, std::string>> done;
    {
        std::ifstream in(run_dir / "predictions.jsonl");
        std::map<std::tuple<std::string, std::uint64_t, std::string>, curriculum::OrderPlan> plans;
        std::ifstream orders_in(run_dir / "orders.jsonl");
        std::string line;
        while (orders_in && std::getline(orders_in, line)) {
            if (line.empty()) continue;
            const json record = json::parse(line);
            plans[{record.at("strategy").get<std::string>(), record.at("seed").get<std::uint64_t>(),
                   record.at("plan").at("test_id").get<std::string>()}] =
                record.at("plan").get<curriculum::OrderPlan>();
        }
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            const json record = json::parse(line);
            ResultRecord r;
            r.strategy = record.at("strategy").get<std::string>();
            r.seed = record.at("seed").get<std::uint64_t>();
            r.prediction.test_id = record.at("test_id").get<std::string>();
            r.prediction.raw_text = record.at("raw_text").get<std::string>();
            r.prediction.parsed = record.at("parsed").get<corpus::Label>();
            auto plan_it = plans.find({r.strategy, r.seed, r.prediction.test_id});
            if (plan_it != plans.end()) r.plan = plan_it->second;
            done.insert({r.strategy, r.seed, r.prediction.test_id});
            kept.push_back(std::move(r));
        }
    }

    // Candidate construction.
    const bool needs_similarity = std::any_of(
        cfg.strategies.begin(), cfg.strategies.end(), [](const curriculum::OrderingStrategy& s) {
            return s.kind == curriculum::StrategyKind::similarity_ascending;
        });
    const bool needs_embeddings = cfg.level == Level::instance || needs_similarity;
    std::map<std::string, gateway::EmbeddingVector> demo_vectors, test_vectors;
    if (needs_embeddings) {
        std::vector<std::string> texts;
        const auto demo_ids_needed = [&]() -> std::vector<const corpus::Demonstration*> {
            std::vector<const corpus::Demonstration*> demos;
            if (cfg.level == Level::corpus)
                for (const std::string& id : cfg.corpus_demo_ids)
                    demos.push_back(ctx.demo_by_id.at(id));
            else
                for (const corpus::Demonstration& d : ctx.pool) demos.push_back(&d);
            return demos;
        }();
        for (const corpus::Demonstration* d : demo_ids_needed)
            texts.push_back(query_text(d->primary_text, d->secondary_text));
        for (const corpus::Demonstration& t : ctx.tests)
            texts.push_back(query_text(t.primary_text, t.secondary_text));

        const std::filesystem::path cache_path =
            cfg.embedding_cache.value_or(cfg.runs_dir / "embedding_cache.jsonl");
        retrieval::EmbeddingCache cache(cache_path);
        auto by_text = cache.get_or_embed(texts, gw);
        for (const corpus::Demonstration* d : demo_ids_needed)
            demo_vectors[d->demo_id] = by_text.at(query_text(d->primary_text, d->secondary_text));
        for (const corpus::Demonstration& t : ctx.tests)
            test_vectors[t.demo_id] = by_text.at(query_text(t.primary_text, t.secondary_text));
    }

    for (const corpus::Demonstration& test : ctx.tests) {
        if (cfg.level == Level::instance) {
            ctx.candidates_by_test[test.demo_id] =
                retrieval::top_k(test.demo_id, test_vectors.at(test.demo_id), demo_vectors, cfg.k);
        } else {
            retrieval::CandidateSet set;
            set.test_id = test.demo_id;
            for (const std::string& id : cfg.corpus_demo_ids) {
                const double sim = needs_similarity
                                       ? retrieval::cosine(test_vectors.at(test.demo_id),
                                                           demo_vectors.at(id))
                                       : 0.0;
                set.entries.emplace_back(id, sim);
            }
            ctx.candidates_by_test[test.demo_id] = std::move(set);
        }
    }

    // Difficulty scores: one gateway scoring call per distinct candidate demo.
    const bool needs_complexity = std::any_of(
        cfg.strategies.begin(), cfg.strategies.end(), [](const curriculum::OrderingStrategy& s) {
            return s.kind == curriculum::StrategyKind::iccl ||
                   s.kind == curriculum::StrategyKind::anti_iccl;
        });
    if (needs_complexity) {
        std::set<std::string> unique_ids;
        for (const auto& [test_id, cands] : ctx.candidates_by_test)
            for (const auto& [id, sim] : cands.entries) unique_ids.insert(id);
        for (const std::string& id : unique_ids)
            ctx.complexity_by_demo[id] =
                difficulty::complexity(*ctx.demo_by_id.at(id), ctx.spec, cfg.family, gw,
                                       cfg.normalize_perplexity)
                    .complexity;
    }

    const bool needs_ranks = std::any_of(
        cfg.strategies.begin(), cfg.strategies.end(), [](const curriculum::OrderingStrategy& s) {
            return s.kind == curriculum::StrategyKind::human_curriculum;
        });
    if (needs_ranks) {
        if (!cfg.rankings_file)
            raise(Errc::config_invalid, "human_curriculum requires rankings_file");
        const auto rankings = difficulty::load_rankings(*cfg.rankings_file);
        ctx.mean_rank_by_demo = difficulty::aggregate_expert_ranks(rankings).mean_rank;
    }

    // Work sweep over strategy x seed x test, bounded by max_in_flight.
    struct WorkItem {
        const curriculum::OrderingStrategy* strategy;
        std::uint64_t seed;
        const corpus::Demonstration* test;
    };
    std::vector<WorkItem> items;
    std::size_t skipped = 0;
    for (const curriculum::OrderingStrategy& strategy : cfg.strategies)
        for (std::uint64_t seed : cfg.seeds)
            for (const corpus::Demonstration& test : ctx.tests) {
                if (done.count({curriculum::strategy_kind_name(strategy.kind), seed, test.demo_id})) {
                    ++skipped;
                    continue;
                }
                items.push_back({&strategy, seed, &test});
            }

    std::vector<std::optional<ResultRecord>> slots(items.size());
    std::vector<FailureRecord> failures;
    std::mutex failures_mutex;
    std::atomic<std::size_t> next{0};
    const std::size_t n_workers = std::min<std::size_t>(
        items.size(), static_cast<std::size_t>(std::max(1, cfg.backend.max_in_flight)));
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            const WorkItem& item = items[i];
            try {
                slots[i] = run_one(ctx, *item.strategy, item.seed, *item.test);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failures_mutex);
                failures.push_back({curriculum::strategy_kind_name(item.strategy->kind), item.seed,
                                    item.test->demo_id, e.what()});
            }
        }
    };
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
    for (std::thread& t : workers) t.join();

    std::vector<ResultRecord> records = std::move(kept);
    for (std::optional<ResultRecord>& slot : slots)
        if (slot) records.push_back(std::move(*slot));
    std::sort(records.begin(), records.end(), record_less);

    // Persist sorted artifacts.
    std::vector<json> pred_lines, order_lines;
    for (const ResultRecord& r : records) {
        pred_lines.push_back({{"strategy", r.strategy},
                              {"seed", r.seed},
                              {"test_id", r.prediction.test_id},
                              {"raw_text", r.prediction.raw_text},
                              {"parsed", r.prediction.parsed}});
        order_lines.push_back({{"strategy", r.strategy}, {"seed", r.seed}, {"plan", r.plan}});
    }
    write_jsonl(run_dir / "predictions.jsonl", pred_lines);
    write_jsonl(run_dir / "orders.jsonl", order_lines);
    if (!failures.empty()) {
        std::vector<json> failure_lines;
        std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) {
            return std::tie(a.strategy, a.seed, a.test_id) < std::tie(b.strategy, b.seed, b.test_id);
        });
        for (const FailureRecord& f : failures)
            failure_lines.push_back({{"strategy", f.strategy},
                                     {"seed", f.seed},
                                     {"test_id", f.test_id},
                                     {"error", f.error}});
        write_jsonl(run_dir / "failures.jsonl", failure_lines);
    }

    // Score complete (strategy, seed) cells, aggregate across seeds.
    std::map<std::string, corpus::Label> golds;
    for (const corpus::Demonstration& t : ctx.tests) golds[t.demo_id] = t.gold;

    json runs = json::array();
    json aggregates = json::object();
    json deltas = json::object();
    std::map<std::string, evaluation::AggregateReport> agg_by_strategy;
    for (const curriculum::OrderingStrategy& strategy : cfg.strategies) {
        const std::string name = curriculum::strategy_kind_name(strategy.kind);
        std::vector<evaluation::MetricReport> reports;
        for (std::uint64_t seed : cfg.seeds) {
            std::vector<evaluation::Prediction> preds;
            for (const ResultRecord& r : records)
                if (r.strategy == name && r.seed == seed) preds.push_back(r.prediction);
            if (preds.size() != ctx.tests.size()) continue; // incomplete cell (failures)
            evaluation::MetricReport report = evaluation::score_run(preds, golds, ctx.spec);
            report.seed = seed;
            json entry = report;
            entry["strategy"] = name;
            runs.push_back(entry);
            reports.push_back(std::move(report));
        }
        if (!reports.empty()) {
            agg_by_strategy[name] = evaluation::aggregate_seeds(reports);
            aggregates[name] = agg_by_strategy[name];
        }
    }
    const std::string baseline = cfg.baseline_strategy;
    if (agg_by_strategy.count(baseline)) {
        for (const auto& [name, agg] : agg_by_strategy) {
            if (name == baseline) continue;
            json delta = json::object();
            for (const auto& [metric, ms] : agg.metrics) {
                auto base_it = agg_by_strategy[baseline].metrics.find(metric);
                if (base_it == agg_by_strategy[baseline].metrics.end() ||
                    base_it->second.mean == 0.0)
                    continue; // zero-baseline metrics are unreportable as ratios
                delta[metric] = (ms.mean - base_it->second.mean) / base_it->second.mean;
            }
            deltas[name] = delta;
        }
    }

    const bool has_deterministic = std::any_of(
        cfg.strategies.begin(), cfg.strategies.end(), [](const curriculum::OrderingStrategy& s) {
            return s.kind != curriculum::StrategyKind::random;
        });
    json metrics_doc = {{"task_id", ctx.spec.task_id},
                        {"level", cfg.level == Level::corpus ? "corpus" : "instance"},
                        {"seeds", cfg.seeds},
                        {"baseline", baseline},
                        {"runs", runs},
                        {"aggregates", aggregates},
                        {"deltas", deltas},
                        {"has_deterministic_strategies", has_deterministic}};
    {
        std::ofstream out(run_dir / "metrics.json", std::ios::trunc);
        out << metrics_doc.dump(2) << "\n";
    }
    {
        std::ofstream out(run_dir / "report.txt", std::ios::trunc);
        out << format_report(metrics_doc);
    }

    // Manifest amendment: append-only.
    {
        json amendment = {{"event", "finished"},
                          {"ended_at", iso8601_utc_now()},
                          {"new_predictions", records.size() - kept.size()},
                          {"resumed", skipped},
                          {"failures", failures.size()},
                          {"partial", !failures.empty()}};
        std::ofstream out(run_dir / "manifest.json", std::ios::app);
        out << amendment.dump() << "\n";
    }

    RunOutcome outcome;
    outcome.run_dir = run_dir;
    outcome.predictions = records.size();
    outcome.skipped = skipped;
    outcome.failures = failures.size();
    return outcome;
}

namespace {

// Shared scaffolding for the line-oriented subcommands: parse each line,
// apply, report per-record errors with their locator.
int for_each_jsonl(const std::filesystem::path& path, bool strict,
                   const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    int errors = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            fn(json::parse(line), line_no);
        } catch (const std::exception& e) {
            std::cerr << path.filename().string() << ":" << line_no << ": " << e.what() << "\n";
            ++errors;
            if (strict) throw;
        }
    }
    return errors;
}

} // namespace

int cmd_score(const std::filesystem::path& task_file, const std::filesystem::path& pool_file,
              const gateway::BackendConfig& backend, const promptkit::TemplateFamily& family,
              bool normalize, const std::filesystem::path& out_path, bool strict) {
    const corpus::TaskSpec spec = corpus::load_task_spec(task_file);
    const std::vector<corpus::Demonstration> pool = corpus::load_pool(pool_file, spec);
    gateway::LmGateway gw(backend);

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + out_path.string());
    int errors = 0;
    for (const corpus::Demonstration& demo : pool) {
        try {
            const json line = difficulty::complexity(demo, spec, family, gw, normalize);
            out << line.dump() << "\n";
        } catch (const std::exception& e) {
            std::cerr << "demo '" << demo.demo_id << "': " << e.what() << "\n";
            ++errors;
            if (strict) throw;
        }
    }
    return errors;
}

int cmd_order(const std::filesystem::path& candidates_file,
              const curriculum::OrderingStrategy& strategy, const std::filesystem::path& out_path,
              bool strict) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + out_path.string());
    return for_each_jsonl(candidates_file, strict, [&](const json& record, std::size_t) {
        const std::string test_id = record.at("test_id").get<std::string>();
        const auto candidates = record.at("candidates").get<std::vector<std::string>>();
        std::map<std::string, double> scores;
        if (record.contains("scores"))
            scores = record["scores"].get<std::map<std::string, double>>();
        const json line = curriculum::order_demonstrations(
            test_id, candidates, strategy, scores.empty() ? nullptr : &scores);
        out << line.dump() << "\n";
    });
}

int cmd_eval(const std::filesystem::path& task_file, const std::filesystem::path& predictions_file,
             const std::filesystem::path& test_file, const std::filesystem::path& out_path,
             bool strict) {
    const corpus::TaskSpec spec = corpus::load_task_spec(task_file);
    const std::vector<corpus::Demonstration> tests = corpus::load_pool(test_file, spec);
    std::map<std::string, corpus::Label> golds;
    for (const corpus::Demonstration& t : tests) golds[t.demo_id] = t.gold;

    std::vector<evaluation::Prediction> preds;
    const int errors = for_each_jsonl(predictions_file, strict, [&](const json& record, std::size_t) {
        evaluation::Prediction pred;
        pred.test_id = record.at("test_id").get<std::string>();
        pred.raw_text = record.at("raw_text").get<std::string>();
        pred.parsed = record.contains("parsed") ? record["parsed"].get<corpus::Label>()
                                                : evaluation::parse_label(pred.raw_text, spec);
        preds.push_back(std::move(pred));
    });
    const evaluation::MetricReport report = evaluation::score_run(preds, golds, spec);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + out_path.string());
    out << json(report).dump(2) << "\n";
    return errors;
}

int cmd_kendall(const std::filesystem::path& rankings_file, std::ostream& out) {
    const std::vector<difficulty::HumanRanking> rankings = difficulty::load_rankings(rankings_file);
    const difficulty::AggregateRanking agg = difficulty::aggregate_expert_ranks(rankings);
    out << "judges: " << rankings.size() << "\n";
    out << "items: " << agg.ordered_ids.size() << "\n";
    char w[32];
    std::snprintf(w, sizeof w, "%.6f", agg.w_statistic);
    out << "W=" << w << "\n";
    out << "mean ranks (easiest first):\n";
    for (const std::string& id : agg.ordered_ids) {
        char rank[32];
        std::snprintf(rank, sizeof rank, "%.3f", agg.mean_rank.at(id));
        out << "  " << id << " " << rank << "\n";
    }
    return 0;
}

int cmd_search(const std::filesystem::path& candidates_file, std::size_t max_n, std::ostream& out,
               bool strict) {
    return for_each_jsonl(candidates_file, strict, [&](const json& record, std::size_t) {
        const std::string test_id = record.value("test_id", std::string{});
        const auto candidates = record.at("candidates").get<std::vector<std::string>>();
        const auto scores = record.at("scores").get<std::map<std::string, double>>();
        const curriculum::SearchResult result = curriculum::exhaustive_order_search(
            candidates,
            [&](const std::vector<std::string>& order) {
                return curriculum::ascending_adjacency_reward(order, scores);
            },
            max_n, test_id);
        json line = {{"test_id", test_id},
                     {"best_order", result.best.ordered_demo_ids},
                     {"permutations", result.table.size()}};
        json table = json::array();
        for (const auto& [order, score] : result.table)
            table.push_back({{"order", order}, {"score", score}});
        line["table"] = table;
        out << line.dump() << "\n";
    });
}

namespace {

// CSV rendering: one row per (strategy, metric) with mean, std, and the
// relative change against the baseline where defined.
void format_report_csv(const json& metrics_doc, std::ostream& out) {
    out << "task_id,strategy,metric,mean,std,delta_vs_baseline\n";
    const std::string task_id = metrics_doc.at("task_id").get<std::string>();
    const json deltas = metrics_doc.value("deltas", json::object());
    for (const auto& [strategy, agg] : metrics_doc.at("aggregates").items()) {
        for (const auto& [metric, ms] : agg.at("metrics").items()) {
            out << task_id << "," << strategy << "," << metric << ","
                << ms.at("mean").get<double>() << "," << ms.at("std").get<double>() << ",";
            if (deltas.contains(strategy) && deltas[strategy].contains(metric))
                out << deltas[strategy][metric].get<double>();
            out << "\n";
        }
    }
}

} // namespace

int cmd_report(const std::vector<std::filesystem::path>& metrics_files,
               const std::string& baseline_strategy, std::ostream& out, bool csv) {
    for (const std::filesystem::path& path : metrics_files) {
        std::ifstream in(path);
        if (!in) raise(Errc::io_error, "cannot open " + path.string());
        json doc = json::parse(in);
        if (!doc.contains("baseline")) doc["baseline"] = baseline_strategy;
        if (csv) format_report_csv(doc, out);
        else out << format_report(doc);
        if (!csv && metrics_files.size() > 1) out << "\n";
    }
    return 0;
}

} // namespace iccl::runner
