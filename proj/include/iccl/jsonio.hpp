#pragma once

#include "json.hpp"

#include "iccl/corpus.hpp"
#include "iccl/curriculum.hpp"
#include "iccl/difficulty.hpp"
#include "iccl/evaluation.hpp"

// ADL (de)serializers for the record types that cross file boundaries:
// predictions.jsonl, orders.jsonl, metrics.json, score/ranking files.

namespace iccl::corpus {
void to_json(nlohmann::json& j, const Label& label);
void from_json(const nlohmann::json& j, Label& label);
} // namespace iccl::corpus

namespace iccl::curriculum {
void to_json(nlohmann::json& j, const OrderingStrategy& strategy);
void from_json(const nlohmann::json& j, OrderingStrategy& strategy);
void to_json(nlohmann::json& j, const OrderPlan& plan);
void from_json(const nlohmann::json& j, OrderPlan& plan);
} // namespace iccl::curriculum

namespace iccl::difficulty {
void to_json(nlohmann::json& j, const DifficultyScore& score);
void from_json(const nlohmann::json& j, DifficultyScore& score);
} // namespace iccl::difficulty

namespace iccl::evaluation {
void to_json(nlohmann::json& j, const Prediction& pred);
void from_json(const nlohmann::json& j, Prediction& pred);
void to_json(nlohmann::json& j, const MetricReport& report);
void from_json(const nlohmann::json& j, MetricReport& report);
void to_json(nlohmann::json& j, const AggregateReport& report);
void from_json(const nlohmann::json& j, AggregateReport& report);
} // namespace iccl::evaluation
