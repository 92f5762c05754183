#include "iccl/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "iccl/errors.hpp"

namespace iccl::difficulty {

using nlohmann::json;

DifficultyScore complexity(const corpus::Demonstration& demo, const corpus::TaskSpec& spec,
                           const promptkit::TemplateFamily& family, gateway::LmGateway& gw,
                           bool normalize) {
    const auto [prompt, continuation] = promptkit::render_scoring_pair(family, spec, demo);
    if (continuation.empty())
        raise(Errc::empty_label_serialization, "label of '" + demo.demo_id + "' serializes empty");

    const std::vector<gateway::TokenScore> tokens = gw.score_continuation(prompt, continuation);
    DifficultyScore score;
    score.demo_id = demo.demo_id;
    score.normalized = normalize;
    score.token_count = static_cast<int>(tokens.size());
    for (const gateway::TokenScore& t : tokens) score.sum_logprob += t.logprob;
    score.complexity = normalize ? std::exp(-score.sum_logprob / score.token_count)
                                 : std::exp(-score.sum_logprob);
    return score;
}

namespace {

// Shared entry checks: >= 2 judges, >= 2 items, identical item sets,
// per-judge rank sums equal to n(n+1)/2.
void validate_rankings(std::span<const HumanRanking> rankings) {
    if (rankings.size() < 2)
        raise(Errc::fewer_than_two_judges,
              "need >= 2 judges, got " + std::to_string(rankings.size()));
    const auto& first = rankings.front().ranks;
    if (first.size() < 2) raise(Errc::invalid_ranking, "need >= 2 ranked items");
    const double n = static_cast<double>(first.size());
    for (const HumanRanking& judge : rankings) {
        if (judge.ranks.size() != first.size())
            raise(Errc::item_set_mismatch, "judge '" + judge.judge_id + "' ranks " +
                                               std::to_string(judge.ranks.size()) + " items, expected " +
                                               std::to_string(first.size()));
        double sum = 0.0;
        for (const auto& [id, rank] : judge.ranks) {
            if (!first.count(id))
                raise(Errc::item_set_mismatch,
                      "judge '" + judge.judge_id + "' ranks unknown item '" + id + "'");
            sum += rank;
        }
        if (std::abs(sum - n * (n + 1) / 2.0) > 1e-6)
            raise(Errc::invalid_ranking, "ranks of judge '" + judge.judge_id +
                                             "' do not sum to n(n+1)/2 (ties must be averaged)");
    }
}

} // namespace

double kendalls_w(std::span<const HumanRanking> rankings) {
    validate_rankings(rankings);
    const double m = static_cast<double>(rankings.size());
    const double n = static_cast<double>(rankings.front().ranks.size());

    std::map<std::string, double> rank_sums;
    for (const HumanRanking& judge : rankings)
        for (const auto& [id, rank] : judge.ranks) rank_sums[id] += rank;

    const double mean_sum = m * (n + 1) / 2.0;
    double s = 0.0;
    for (const auto& [id, sum] : rank_sums) s += (sum - mean_sum) * (sum - mean_sum);

    double tie_correction = 0.0;
    for (const HumanRanking& judge : rankings) {
        std::map<double, int> groups;
        for (const auto& [id, rank] : judge.ranks) ++groups[rank];
        for (const auto& [rank, t] : groups)
            tie_correction += static_cast<double>(t) * t * t - t;
    }

    const double denominator = m * m * (n * n * n - n) - m * tie_correction;
    if (denominator <= 0.0)
        raise(Errc::degenerate_denominator, "all judges tie all items; W undefined");
    return std::clamp(12.0 * s / denominator, 0.0, 1.0);
}

AggregateRanking aggregate_expert_ranks(std::span<const HumanRanking> rankings) {
    validate_rankings(rankings);
    AggregateRanking agg;
    for (const HumanRanking& judge : rankings)
        for (const auto& [id, rank] : judge.ranks) agg.mean_rank[id] += rank;
    for (auto& [id, sum] : agg.mean_rank) sum /= static_cast<double>(rankings.size());

    for (const auto& [id, mean] : agg.mean_rank) agg.ordered_ids.push_back(id);
    std::sort(agg.ordered_ids.begin(), agg.ordered_ids.end(),
              [&](const std::string& a, const std::string& b) {
                  const double ma = agg.mean_rank.at(a), mb = agg.mean_rank.at(b);
                  if (ma != mb) return ma < mb;
                  return a < b;
              });
    agg.w_statistic = kendalls_w(rankings);
    return agg;
}

std::vector<HumanRanking> load_rankings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open ranking file " + path.string());
    std::map<std::string, HumanRanking> by_judge;
    std::vector<std::string> judge_order;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::malformed_record, "line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string judge = record.at("judge").get<std::string>();
        const std::string demo_id = record.at("demo_id").get<std::string>();
        const double rank = record.at("rank").get<double>();
        auto [it, inserted] = by_judge.try_emplace(judge);
        if (inserted) {
            it->second.judge_id = judge;
            judge_order.push_back(judge);
        }
        if (!it->second.ranks.emplace(demo_id, rank).second)
            raise(Errc::malformed_record, "line " + std::to_string(line_no) + ": judge '" + judge +
                                              "' ranks '" + demo_id + "' twice");
    }
    std::vector<HumanRanking> rankings;
    rankings.reserve(judge_order.size());
    for (const std::string& judge : judge_order) rankings.push_back(std::move(by_judge[judge]));
    return rankings;
}

} // namespace iccl::difficulty
