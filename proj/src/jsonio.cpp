#include "iccl/jsonio.hpp"

#include "iccl/errors.hpp"

namespace iccl::corpus {

using nlohmann::json;

void to_json(json& j, const Label& label) {
    switch (label.variant) {
        case Label::Variant::class_name:
            j = {{"variant", "class_name"}, {"class_name", label.class_name}};
            break;
        case Label::Variant::entity_list: {
            json pairs = json::array();
            for (const EntityMention& m : label.entities)
                pairs.push_back(json::array({m.span, m.entity_type}));
            j = {{"variant", "entity_list"}, {"entities", pairs}};
            break;
        }
        case Label::Variant::invalid:
            j = {{"variant", "invalid"}};
            break;
    }
}

void from_json(const json& j, Label& label) {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "class_name") {
        label = Label::make_class(j.at("class_name").get<std::string>());
    } else if (variant == "entity_list") {
        std::vector<EntityMention> mentions;
        for (const json& pair : j.at("entities"))
            mentions.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
        label = Label::make_entities(std::move(mentions));
    } else {
        label = Label::make_invalid();
    }
}

} // namespace iccl::corpus

namespace iccl::curriculum {

using nlohmann::json;

void to_json(json& j, const OrderingStrategy& strategy) {
    j = {{"kind", strategy_kind_name(strategy.kind)}};
    if (strategy.seed) j["seed"] = *strategy.seed;
    if (strategy.fixed_order) j["fixed_order"] = *strategy.fixed_order;
}

void from_json(const json& j, OrderingStrategy& strategy) {
    strategy.kind = strategy_kind_from_name(j.at("kind").get<std::string>());
    strategy.seed.reset();
    strategy.fixed_order.reset();
    if (j.contains("seed") && !j["seed"].is_null())
        strategy.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("fixed_order") && !j["fixed_order"].is_null())
        strategy.fixed_order = j["fixed_order"].get<std::vector<std::string>>();
}

void to_json(json& j, const OrderPlan& plan) {
    j = {{"test_id", plan.test_id},
         {"ordered_demo_ids", plan.ordered_demo_ids},
         {"strategy", plan.strategy},
         {"provenance", plan.provenance}};
}

void from_json(const json& j, OrderPlan& plan) {
    plan.test_id = j.at("test_id").get<std::string>();
    plan.ordered_demo_ids = j.at("ordered_demo_ids").get<std::vector<std::string>>();
    plan.strategy = j.at("strategy").get<OrderingStrategy>();
    plan.provenance = j.value("provenance", std::map<std::string, double>{});
}

} // namespace iccl::curriculum

namespace iccl::difficulty {

using nlohmann::json;

void to_json(json& j, const DifficultyScore& score) {
    j = {{"demo_id", score.demo_id},
         {"complexity", score.complexity},
         {"normalized", score.normalized},
         {"token_count", score.token_count},
         {"sum_logprob", score.sum_logprob}};
}

void from_json(const json& j, DifficultyScore& score) {
    score.demo_id = j.at("demo_id").get<std::string>();
    score.complexity = j.at("complexity").get<double>();
    score.normalized = j.at("normalized").get<bool>();
    score.token_count = j.at("token_count").get<int>();
    score.sum_logprob = j.at("sum_logprob").get<double>();
}

} // namespace iccl::difficulty

namespace iccl::evaluation {

using nlohmann::json;

void to_json(json& j, const Prediction& pred) {
    j = {{"test_id", pred.test_id}, {"raw_text", pred.raw_text}, {"parsed", pred.parsed}};
}

void from_json(const json& j, Prediction& pred) {
    pred.test_id = j.at("test_id").get<std::string>();
    pred.raw_text = j.at("raw_text").get<std::string>();
    pred.parsed = j.at("parsed").get<corpus::Label>();
}

namespace {

void put_metric(json& j, const char* name, const std::optional<double>& metric) {
    if (metric) j[name] = *metric;
}

std::optional<double> get_metric(const json& j, const char* name) {
    if (!j.contains(name) || j[name].is_null()) return std::nullopt;
    return j[name].get<double>();
}

} // namespace

void to_json(json& j, const MetricReport& report) {
    j = {{"task_id", report.task_id}, {"seed", report.seed}};
    put_metric(j, "macro_precision", report.macro_precision);
    put_metric(j, "macro_f1", report.macro_f1);
    put_metric(j, "micro_f1", report.micro_f1);
    put_metric(j, "accuracy", report.accuracy);
    json per_class = json::object();
    for (const auto& [cls, pc] : report.per_class)
        per_class[cls] = {{"precision", pc.precision},
                          {"recall", pc.recall},
                          {"f1", pc.f1},
                          {"support", pc.support}};
    j["per_class"] = per_class;
}

void from_json(const json& j, MetricReport& report) {
    report.task_id = j.at("task_id").get<std::string>();
    report.seed = j.value("seed", 0ULL);
    report.macro_precision = get_metric(j, "macro_precision");
    report.macro_f1 = get_metric(j, "macro_f1");
    report.micro_f1 = get_metric(j, "micro_f1");
    report.accuracy = get_metric(j, "accuracy");
    report.per_class.clear();
    for (const auto& [cls, pc] : j.value("per_class", json::object()).items())
        report.per_class[cls] = {pc.at("precision").get<double>(), pc.at("recall").get<double>(),
                                 pc.at("f1").get<double>(), pc.at("support").get<int>()};
}

void to_json(json& j, const AggregateReport& report) {
    json metrics = json::object();
    for (const auto& [name, ms] : report.metrics)
        metrics[name] = {{"mean", ms.mean}, {"std", ms.std}};
    j = {{"task_id", report.task_id}, {"seeds", report.seeds}, {"metrics", metrics}};
}

void from_json(const json& j, AggregateReport& report) {
    report.task_id = j.at("task_id").get<std::string>();
    report.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    report.metrics.clear();
    for (const auto& [name, ms] : j.at("metrics").items())
        report.metrics[name] = {ms.at("mean").get<double>(), ms.at("std").get<double>()};
}

} // namespace iccl::evaluation
