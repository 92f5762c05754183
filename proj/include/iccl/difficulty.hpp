#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iccl/corpus.hpp"
#include "iccl/gateway.hpp"
#include "iccl/promptkit.hpp"

namespace iccl::difficulty {

// Complexity of one demonstration: exp(-sum logprob of its label given the
// instruction-wrapped input), or the token-count-normalized variant.
struct DifficultyScore {
    std::string demo_id;
    double complexity = 1.0;
    bool normalized = false;
    int token_count = 0;
    double sum_logprob = 0.0;
};

DifficultyScore complexity(const corpus::Demonstration& demo, const corpus::TaskSpec& spec,
                           const promptkit::TemplateFamily& family, gateway::LmGateway& gw,
                           bool normalize);

// One judge's difficulty ranking; tie-averaged ranks allowed, so ranks per
// judge always sum to n(n+1)/2.
struct HumanRanking {
    std::string judge_id;
    std::map<std::string, double> ranks; // demo_id -> rank (1 = easiest)
};

struct AggregateRanking {
    std::vector<std::string> ordered_ids; // easiest first; ties by ascending id
    std::map<std::string, double> mean_rank;
    double w_statistic = 0.0;
};

// W = 12S / (m^2 (n^3 - n) - m * sum_j T_j), with S the squared deviation
// of rank sums from their mean and T_j = sum over tie groups of (t^3 - t).
double kendalls_w(std::span<const HumanRanking> rankings);

AggregateRanking aggregate_expert_ranks(std::span<const HumanRanking> rankings);

// Ranking file: line-delimited {judge, demo_id, rank} records.
std::vector<HumanRanking> load_rankings(const std::filesystem::path& path);

} // namespace iccl::difficulty
