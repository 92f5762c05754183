#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace iccl::curriculum {

enum class StrategyKind {
    iccl,                 // ascending complexity, easy first
    anti_iccl,            // exact reverse of iccl
    random,               // seeded Fisher-Yates
    similarity_ascending, // most similar demonstration last, next to the test input
    human_curriculum,     // ascending mean expert rank
    fixed,                // caller-supplied order
};

const char* strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(const std::string& name);

struct OrderingStrategy {
    StrategyKind kind = StrategyKind::iccl;
    std::optional<std::uint64_t> seed;                    // required iff kind == random
    std::optional<std::vector<std::string>> fixed_order;  // required iff kind == fixed
};

struct OrderPlan {
    std::string test_id;
    std::vector<std::string> ordered_demo_ids;
    OrderingStrategy strategy;
    std::map<std::string, double> provenance; // score/similarity/rank each id was ordered by
};

// Score-driven kinds require `scores` to cover every candidate. Random
// shuffles with SplitMix64 seeded by (seed XOR fnv1a64(test_id)); ties in
// score-driven kinds keep input position (stable sort).
OrderPlan order_demonstrations(const std::string& test_id,
                               const std::vector<std::string>& candidates,
                               const OrderingStrategy& strategy,
                               const std::map<std::string, double>* scores = nullptr);

using OrderEvaluator = std::function<double(const std::vector<std::string>&)>;

struct SearchResult {
    OrderPlan best;
    // Every permutation with its score, in lexicographic id order;
    // exactly n! entries.
    std::vector<std::pair<std::vector<std::string>, double>> table;
};

// Desk-scale realization of the argmax over orders: evaluates all n!
// permutations, ties resolved toward the lexicographically smallest
// id sequence.
SearchResult exhaustive_order_search(const std::vector<std::string>& candidates,
                                     const OrderEvaluator& evaluator, std::size_t max_n = 6,
                                     const std::string& test_id = {});

// The synthetic reward used by the search oracle's self-checks: +1 for
// each adjacent pair already in ascending-score position.
double ascending_adjacency_reward(const std::vector<std::string>& order,
                                  const std::map<std::string, double>& scores);

} // namespace iccl::curriculum
