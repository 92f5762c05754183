#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iccl/corpus.hpp"

namespace iccl::evaluation {

struct Prediction {
    std::string test_id;
    std::string raw_text;
    corpus::Label parsed;
};

struct PerClass {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

// Which of the optional metrics is populated follows the task kind:
// classification and pair inference carry macro P / macro F1 / accuracy,
// extraction carries micro F1.
struct MetricReport {
    std::string task_id;
    std::uint64_t seed = 0;
    std::optional<double> macro_precision;
    std::optional<double> macro_f1;
    std::optional<double> micro_f1;
    std::optional<double> accuracy;
    std::map<std::string, PerClass> per_class;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // sample (n-1) standard deviation; 0 when n == 1
};

struct AggregateReport {
    std::string task_id;
    std::vector<std::uint64_t> seeds;
    std::map<std::string, MeanStd> metrics;
};

// Model output -> Label. Classification: first whole-word label_set match
// in the first line, case-insensitive. Extraction: first balanced bracketed
// [[span, type], ...] list, unknown types dropped. Failure is the invalid
// sentinel, never an error.
corpus::Label parse_label(const std::string& raw, const corpus::TaskSpec& spec);

// Per-run metrics. Invalid predictions score as wrong (a sentinel non-gold
// class), never dropped.
MetricReport score_run(std::span<const Prediction> preds,
                       const std::map<std::string, corpus::Label>& golds,
                       const corpus::TaskSpec& spec);

AggregateReport aggregate_seeds(std::span<const MetricReport> reports);

// Figure-2-style signed relative change per metric, (candidate - baseline) / baseline.
std::map<std::string, double> delta_report(const AggregateReport& candidate,
                                           const AggregateReport& baseline);

} // namespace iccl::evaluation
