#include "iccl/curriculum.hpp"

#include <algorithm>

#include "iccl/errors.hpp"
#include "iccl/prng.hpp"

namespace iccl::curriculum {

const char* strategy_kind_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::iccl: return "iccl";
        case StrategyKind::anti_iccl: return "anti_iccl";
        case StrategyKind::random: return "random";
        case StrategyKind::similarity_ascending: return "similarity_ascending";
        case StrategyKind::human_curriculum: return "human_curriculum";
        case StrategyKind::fixed: return "fixed";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "iccl") return StrategyKind::iccl;
    if (name == "anti_iccl") return StrategyKind::anti_iccl;
    if (name == "random") return StrategyKind::random;
    if (name == "similarity_ascending") return StrategyKind::similarity_ascending;
    if (name == "human_curriculum") return StrategyKind::human_curriculum;
    if (name == "fixed") return StrategyKind::fixed;
    raise(Errc::config_invalid, "unknown ordering strategy '" + name + "'");
}

namespace {

bool needs_scores(StrategyKind kind) {
    return kind == StrategyKind::iccl || kind == StrategyKind::anti_iccl ||
           kind == StrategyKind::similarity_ascending || kind == StrategyKind::human_curriculum;
}

std::vector<std::string> ascending_stable(const std::vector<std::string>& candidates,
                                          const std::map<std::string, double>& scores) {
    std::vector<std::string> ordered = candidates;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](const std::string& a, const std::string& b) {
                         return scores.at(a) < scores.at(b);
                     });
    return ordered;
}

} // namespace

OrderPlan order_demonstrations(const std::string& test_id,
                               const std::vector<std::string>& candidates,
                               const OrderingStrategy& strategy,
                               const std::map<std::string, double>* scores) {
    OrderPlan plan;
    plan.test_id = test_id;
    plan.strategy = strategy;

    if (needs_scores(strategy.kind)) {
        if (!scores)
            raise(Errc::missing_score, std::string(strategy_kind_name(strategy.kind)) +
                                           " requires a score per candidate");
        for (const std::string& id : candidates) {
            auto it = scores->find(id);
            if (it == scores->end()) raise(Errc::missing_score, "no score for '" + id + "'");
            plan.provenance[id] = it->second;
        }
    }

    switch (strategy.kind) {
        case StrategyKind::iccl:
        case StrategyKind::similarity_ascending:
        case StrategyKind::human_curriculum:
            plan.ordered_demo_ids = ascending_stable(candidates, *scores);
            break;
        case StrategyKind::anti_iccl: {
            plan.ordered_demo_ids = ascending_stable(candidates, *scores);
            std::reverse(plan.ordered_demo_ids.begin(), plan.ordered_demo_ids.end());
            break;
        }
        case StrategyKind::random: {
            if (!strategy.seed) raise(Errc::seed_required, "random ordering requires a seed");
            plan.ordered_demo_ids = candidates;
            SplitMix64 rng(*strategy.seed ^ fnv1a64(test_id));
            fisher_yates_shuffle(plan.ordered_demo_ids, rng);
            break;
        }
        case StrategyKind::fixed: {
            if (!strategy.fixed_order)
                raise(Errc::fixed_order_not_permutation, "fixed ordering requires fixed_order");
            std::vector<std::string> a = *strategy.fixed_order, b = candidates;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b)
                raise(Errc::fixed_order_not_permutation,
                      "fixed_order is not a permutation of the candidate ids");
            plan.ordered_demo_ids = *strategy.fixed_order;
            break;
        }
    }
    return plan;
}

double ascending_adjacency_reward(const std::vector<std::string>& order,
                                  const std::map<std::string, double>& scores) {
    double reward = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i)
        if (scores.at(order[i - 1]) <= scores.at(order[i])) reward += 1.0;
    return reward;
}

SearchResult exhaustive_order_search(const std::vector<std::string>& candidates,
                                     const OrderEvaluator& evaluator, std::size_t max_n,
                                     const std::string& test_id) {
    if (candidates.empty()) raise(Errc::precondition, "search requires candidates");
    if (candidates.size() > max_n)
        raise(Errc::too_many_candidates, std::to_string(candidates.size()) +
                                             " candidates exceed max_n=" + std::to_string(max_n));

    std::vector<std::string> order = candidates;
    std::sort(order.begin(), order.end());
    if (std::adjacent_find(order.begin(), order.end()) != order.end())
        raise(Errc::precondition, "candidate ids must be unique");

    SearchResult result;
    bool have_best = false;
    double best_score = 0.0;
    // next_permutation walks lexicographically, so the first maximum seen
    // is the lexicographically smallest maximizer.
    do {
        const double score = evaluator(order);
        result.table.emplace_back(order, score);
        if (!have_best || score > best_score) {
            have_best = true;
            best_score = score;
            result.best.ordered_demo_ids = order;
        }
    } while (std::next_permutation(order.begin(), order.end()));

    result.best.test_id = test_id;
    result.best.strategy.kind = StrategyKind::fixed;
    result.best.strategy.fixed_order = result.best.ordered_demo_ids;
    return result;
}

} // namespace iccl::curriculum
