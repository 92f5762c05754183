#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "iccl/corpus.hpp"
#include "iccl/curriculum.hpp"
#include "iccl/difficulty.hpp"
#include "iccl/errors.hpp"
#include "iccl/evaluation.hpp"
#include "iccl/gateway.hpp"
#include "iccl/promptkit.hpp"
#include "iccl/retrieval.hpp"
#include "iccl/runner.hpp"
#include "iccl/version.hpp"

namespace py = pybind11;

using namespace iccl;

namespace {

gateway::EmbeddingVector to_vector(const std::vector<double>& values) {
    gateway::EmbeddingVector vec;
    vec.values = values;
    vec.dims = static_cast<int>(values.size());
    return vec;
}

std::vector<difficulty::HumanRanking> to_rankings(
    const std::vector<std::map<std::string, double>>& judges) {
    std::vector<difficulty::HumanRanking> rankings;
    for (std::size_t i = 0; i < judges.size(); ++i)
        rankings.push_back({"judge_" + std::to_string(i), judges[i]});
    return rankings;
}

curriculum::OrderingStrategy make_strategy(const std::string& kind,
                                           std::optional<std::uint64_t> seed,
                                           std::optional<std::vector<std::string>> fixed_order) {
    curriculum::OrderingStrategy strategy;
    strategy.kind = curriculum::strategy_kind_from_name(kind);
    strategy.seed = seed;
    strategy.fixed_order = std::move(fixed_order);
    return strategy;
}

promptkit::TemplateFamily make_family(const std::string& kind,
                                      std::optional<std::string> system_message) {
    promptkit::TemplateFamily family;
    family.kind = promptkit::family_kind_from_name(kind);
    family.system_message = std::move(system_message);
    return family;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "curriculum-ordered in-context learning harness";
    m.attr("__version__") = ICCL_VERSION;

    py::register_exception<Error>(m, "IcclError");

    // corpus
    py::enum_<corpus::TaskKind>(m, "TaskKind")
        .value("single_text_classification", corpus::TaskKind::single_text_classification)
        .value("sentence_pair_inference", corpus::TaskKind::sentence_pair_inference)
        .value("entity_extraction", corpus::TaskKind::entity_extraction);

    py::class_<corpus::TaskSpec>(m, "TaskSpec")
        .def(py::init<>())
        .def_readwrite("task_id", &corpus::TaskSpec::task_id)
        .def_readwrite("kind", &corpus::TaskSpec::kind)
        .def_readwrite("label_set", &corpus::TaskSpec::label_set)
        .def_readwrite("entity_type_set", &corpus::TaskSpec::entity_type_set)
        .def_readwrite("task_description", &corpus::TaskSpec::task_description)
        .def_readwrite("default_demo_count", &corpus::TaskSpec::default_demo_count);

    py::class_<corpus::Label>(m, "Label")
        .def_static("class_name",
                    [](const std::string& name) { return corpus::Label::make_class(name); })
        .def_static("entities",
                    [](const std::vector<std::pair<std::string, std::string>>& pairs) {
                        std::vector<corpus::EntityMention> mentions;
                        for (const auto& [span, type] : pairs) mentions.push_back({span, type});
                        return corpus::Label::make_entities(std::move(mentions));
                    })
        .def_static("invalid", [] { return corpus::Label::make_invalid(); })
        .def_property_readonly("is_invalid",
                               [](const corpus::Label& l) {
                                   return l.variant == corpus::Label::Variant::invalid;
                               })
        .def_property_readonly("name", [](const corpus::Label& l) { return l.class_name; })
        .def_property_readonly("entity_pairs",
                               [](const corpus::Label& l) {
                                   std::vector<std::pair<std::string, std::string>> pairs;
                                   for (const auto& e : l.entities)
                                       pairs.emplace_back(e.span, e.entity_type);
                                   return pairs;
                               })
        .def("__eq__", [](const corpus::Label& a, const corpus::Label& b) { return a == b; });

    py::class_<corpus::Demonstration>(m, "Demonstration")
        .def(py::init([](const std::string& id, const std::string& text,
                         std::optional<std::string> secondary, const corpus::Label& gold) {
                 return corpus::Demonstration{id, text, std::move(secondary), gold};
             }),
             py::arg("demo_id"), py::arg("primary_text"), py::arg("secondary_text") = std::nullopt,
             py::arg("gold") = corpus::Label::make_invalid())
        .def_readwrite("demo_id", &corpus::Demonstration::demo_id)
        .def_readwrite("primary_text", &corpus::Demonstration::primary_text)
        .def_readwrite("secondary_text", &corpus::Demonstration::secondary_text)
        .def_readwrite("gold", &corpus::Demonstration::gold);

    m.def("load_task_spec", &corpus::load_task_spec, py::arg("path"));
    m.def("load_pool", &corpus::load_pool, py::arg("path"), py::arg("spec"));
    m.def("validate_gold", &corpus::validate_gold, py::arg("label"), py::arg("spec"));

    // retrieval
    m.def(
        "cosine",
        [](const std::vector<double>& u, const std::vector<double>& v) {
            return retrieval::cosine(to_vector(u), to_vector(v));
        },
        py::arg("u"), py::arg("v"));
    m.def(
        "top_k",
        [](const std::string& test_id, const std::vector<double>& query,
           const std::map<std::string, std::vector<double>>& pool, std::size_t k) {
            std::map<std::string, gateway::EmbeddingVector> vectors;
            for (const auto& [id, values] : pool) vectors[id] = to_vector(values);
            return retrieval::top_k(test_id, to_vector(query), vectors, k).entries;
        },
        py::arg("test_id"), py::arg("query"), py::arg("pool"), py::arg("k"));

    // difficulty
    m.def(
        "kendalls_w",
        [](const std::vector<std::map<std::string, double>>& judges) {
            const auto rankings = to_rankings(judges);
            return difficulty::kendalls_w(rankings);
        },
        py::arg("rankings"));
    m.def(
        "aggregate_expert_ranks",
        [](const std::vector<std::map<std::string, double>>& judges) {
            const auto rankings = to_rankings(judges);
            const auto agg = difficulty::aggregate_expert_ranks(rankings);
            return py::make_tuple(agg.ordered_ids, agg.mean_rank, agg.w_statistic);
        },
        py::arg("rankings"));
    m.def("mock_complexity", &gateway::MockBackend::mock_complexity, py::arg("label_text"));

    // curriculum
    m.def(
        "order_demonstrations",
        [](const std::string& test_id, const std::vector<std::string>& candidates,
           const std::string& kind, std::optional<std::uint64_t> seed,
           std::optional<std::map<std::string, double>> scores,
           std::optional<std::vector<std::string>> fixed_order) {
            const auto strategy = make_strategy(kind, seed, std::move(fixed_order));
            const auto plan = curriculum::order_demonstrations(
                test_id, candidates, strategy, scores ? &*scores : nullptr);
            return plan.ordered_demo_ids;
        },
        py::arg("test_id"), py::arg("candidates"), py::arg("kind"), py::arg("seed") = std::nullopt,
        py::arg("scores") = std::nullopt, py::arg("fixed_order") = std::nullopt);
    m.def(
        "exhaustive_order_search",
        [](const std::vector<std::string>& candidates,
           const std::function<double(const std::vector<std::string>&)>& evaluator,
           std::size_t max_n) {
            const auto result = curriculum::exhaustive_order_search(candidates, evaluator, max_n);
            return py::make_tuple(result.best.ordered_demo_ids, result.table);
        },
        py::arg("candidates"), py::arg("evaluator"), py::arg("max_n") = 6);

    // promptkit
    py::class_<promptkit::RenderedPrompt>(m, "RenderedPrompt")
        .def_readonly("text", &promptkit::RenderedPrompt::text)
        .def_property_readonly("messages",
                               [](const promptkit::RenderedPrompt& p) {
                                   std::vector<std::pair<std::string, std::string>> messages;
                                   for (const auto& msg : p.messages)
                                       messages.emplace_back(msg.role, msg.content);
                                   return messages;
                               })
        .def_readonly("test_id_tag", &promptkit::RenderedPrompt::test_id_tag);

    m.def(
        "render",
        [](const std::string& family, std::optional<std::string> system_message,
           const corpus::TaskSpec& spec, const std::vector<corpus::Demonstration>& demos,
           const std::string& test_id, const std::string& primary_text,
           std::optional<std::string> secondary_text, bool mock_tag) {
            return promptkit::render(make_family(family, std::move(system_message)), spec, demos,
                                     {test_id, primary_text, std::move(secondary_text)}, mock_tag);
        },
        py::arg("family"), py::arg("system_message"), py::arg("spec"), py::arg("demos"),
        py::arg("test_id"), py::arg("primary_text"), py::arg("secondary_text") = std::nullopt,
        py::arg("mock_tag") = false);
    m.def(
        "render_scoring_pair",
        [](const std::string& family, std::optional<std::string> system_message,
           const corpus::TaskSpec& spec, const corpus::Demonstration& demo) {
            return promptkit::render_scoring_pair(make_family(family, std::move(system_message)),
                                                  spec, demo);
        },
        py::arg("family"), py::arg("system_message"), py::arg("spec"), py::arg("demo"));
    m.def("serialize_label", &promptkit::serialize_label, py::arg("label"), py::arg("spec"));

    // gateway (mock only from python; http runs through the CLI)
    py::class_<gateway::LmGateway>(m, "MockGateway")
        .def(py::init([](const std::map<std::string, std::string>& predictions,
                         const std::string& fallback) {
                 gateway::BackendConfig cfg;
                 cfg.backend_kind = gateway::BackendKind::mock;
                 gateway::MockBehavior behavior;
                 behavior.predictions = predictions;
                 behavior.fallback_text = fallback;
                 return std::make_unique<gateway::LmGateway>(cfg, std::move(behavior));
             }),
             py::arg("predictions") = std::map<std::string, std::string>{},
             py::arg("fallback") = std::string{})
        .def("generate",
             [](gateway::LmGateway& gw, const std::string& text) {
                 promptkit::RenderedPrompt prompt;
                 prompt.text = text;
                 return gw.generate(prompt);
             })
        .def("score_continuation",
             [](gateway::LmGateway& gw, const std::string& prompt, const std::string& continuation) {
                 std::vector<std::pair<std::string, double>> scores;
                 for (const auto& token : gw.score_continuation(prompt, continuation))
                     scores.emplace_back(token.token_text, token.logprob);
                 return scores;
             })
        .def("embed", [](gateway::LmGateway& gw, const std::string& text) {
            return gw.embed(text).values;
        });

    m.def(
        "complexity",
        [](const corpus::Demonstration& demo, const corpus::TaskSpec& spec,
           const std::string& family, std::optional<std::string> system_message,
           gateway::LmGateway& gw, bool normalize) {
            const auto score = difficulty::complexity(
                demo, spec, make_family(family, std::move(system_message)), gw, normalize);
            return py::make_tuple(score.complexity, score.token_count, score.sum_logprob);
        },
        py::arg("demo"), py::arg("spec"), py::arg("family"), py::arg("system_message"),
        py::arg("gateway"), py::arg("normalize") = false);

    // evaluation
    py::class_<evaluation::Prediction>(m, "Prediction")
        .def(py::init([](const std::string& test_id, const std::string& raw_text,
                         const corpus::Label& parsed) {
                 return evaluation::Prediction{test_id, raw_text, parsed};
             }),
             py::arg("test_id"), py::arg("raw_text"), py::arg("parsed"))
        .def_readwrite("test_id", &evaluation::Prediction::test_id)
        .def_readwrite("raw_text", &evaluation::Prediction::raw_text)
        .def_readwrite("parsed", &evaluation::Prediction::parsed);

    m.def("parse_label", &evaluation::parse_label, py::arg("raw"), py::arg("spec"));
    m.def(
        "score_run",
        [](const std::vector<evaluation::Prediction>& preds,
           const std::map<std::string, corpus::Label>& golds, const corpus::TaskSpec& spec) {
            const auto report = evaluation::score_run(preds, golds, spec);
            py::dict out;
            out["task_id"] = report.task_id;
            if (report.macro_precision) out["macro_precision"] = *report.macro_precision;
            if (report.macro_f1) out["macro_f1"] = *report.macro_f1;
            if (report.micro_f1) out["micro_f1"] = *report.micro_f1;
            if (report.accuracy) out["accuracy"] = *report.accuracy;
            return out;
        },
        py::arg("predictions"), py::arg("golds"), py::arg("spec"));

    // runner
    m.def(
        "run_experiment",
        [](const std::string& config_path) {
            const auto outcome =
                runner::cmd_run(runner::load_experiment_config(config_path));
            return py::make_tuple(outcome.run_dir.string(), outcome.predictions,
                                  outcome.failures);
        },
        py::arg("config_path"));
}
