#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "iccl/errors.hpp"
#include "iccl/evaluation.hpp"

#include "helpers.hpp"

using namespace iccl;
using corpus::Label;
using evaluation::Prediction;
using testutil::fixtures;

namespace {

corpus::TaskSpec scicite() {
    return corpus::load_task_spec(fixtures() / "tasks/scicite.json");
}

corpus::TaskSpec scinli() {
    return corpus::load_task_spec(fixtures() / "tasks/scinli.json");
}

corpus::TaskSpec scierc() {
    return corpus::load_task_spec(fixtures() / "tasks/scierc.json");
}

// Letter codes build quick classification fixtures: gold "ABAC" etc.
std::pair<std::vector<Prediction>, std::map<std::string, Label>> classification_case(
    const std::string& golds, const std::string& preds, const corpus::TaskSpec& spec) {
    std::vector<Prediction> predictions;
    std::map<std::string, Label> gold_map;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const std::string id = "t" + std::to_string(i);
        gold_map[id] = Label::make_class(spec.label_set[golds[i] - 'A']);
        Prediction p;
        p.test_id = id;
        if (preds[i] == '?') {
            p.raw_text = "no label here";
            p.parsed = Label::make_invalid();
        } else {
            p.raw_text = spec.label_set[preds[i] - 'A'];
            p.parsed = Label::make_class(spec.label_set[preds[i] - 'A']);
        }
        predictions.push_back(std::move(p));
    }
    return {predictions, gold_map};
}

} // namespace

TEST_CASE("parse_label: classification normalization and whole-word matching") {
    const auto spec = scicite();
    CHECK(evaluation::parse_label(" Background.", spec) == Label::make_class("background"));
    CHECK(evaluation::parse_label("METHOD", spec) == Label::make_class("method"));
    CHECK(evaluation::parse_label("I cannot determine this.", spec) == Label::make_invalid());
    // Only the first line counts.
    CHECK(evaluation::parse_label("unclear\nbackground", spec) == Label::make_invalid());
    // Earliest whole-word match wins.
    CHECK(evaluation::parse_label("result, not method", spec) == Label::make_class("result"));
    // Substrings inside words do not match.
    CHECK(evaluation::parse_label("methodology", spec) == Label::make_invalid());

    const auto nli = scinli();
    CHECK(evaluation::parse_label("The relation is contrasting because...", nli) ==
          Label::make_class("contrasting"));
}

TEST_CASE("parse_label: extraction lists") {
    const auto spec = scierc();
    CHECK(evaluation::parse_label("[['approach', 'Generic']]", spec) ==
          Label::make_entities({{"approach", "Generic"}}));
    CHECK(evaluation::parse_label("Answer: [['x', 'Task'], ['y', 'Metric']] done", spec) ==
          Label::make_entities({{"x", "Task"}, {"y", "Metric"}}));
    CHECK(evaluation::parse_label("[]", spec) == Label::make_entities({}));
    // Unknown types are dropped, not fatal.
    CHECK(evaluation::parse_label("[['x', 'Task'], ['y', 'Animal']]", spec) ==
          Label::make_entities({{"x", "Task"}}));
    // Double-quoted spans with embedded single quotes.
    CHECK(evaluation::parse_label("[[\"NTHU 's system\", 'Method']]", spec) ==
          Label::make_entities({{"NTHU 's system", "Method"}}));
    CHECK(evaluation::parse_label("no brackets at all", spec) == Label::make_invalid());
    CHECK(evaluation::parse_label("[[unquoted, Task]]", spec) == Label::make_invalid());
    CHECK(evaluation::parse_label("[['unterminated, 'Task']]", spec) == Label::make_invalid());
}

TEST_CASE("score_run worked example: macro F1 = 7/9, accuracy = 0.75") {
    const auto spec = scicite();
    const auto [preds, golds] = classification_case("AABC", "ABBC", spec);
    const auto report = evaluation::score_run(preds, golds, spec);
    REQUIRE(report.macro_f1.has_value());
    CHECK(*report.macro_f1 == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
    REQUIRE(report.accuracy.has_value());
    CHECK(*report.accuracy == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(!report.micro_f1.has_value());
    // Per-class agreement with the hand confusion matrix.
    CHECK(report.per_class.at(spec.label_set[0]).f1 == doctest::Approx(2.0 / 3.0));
    CHECK(report.per_class.at(spec.label_set[1]).f1 == doctest::Approx(2.0 / 3.0));
    CHECK(report.per_class.at(spec.label_set[2]).f1 == doctest::Approx(1.0));
}

TEST_CASE("score_run: extraction micro F1 worked example") {
    const auto spec = scierc();
    std::map<std::string, Label> golds{
        {"t0", Label::make_entities({{"x", "Method"}, {"y", "Task"}})}};
    std::vector<Prediction> preds{{
        "t0",
        "[['x', 'Method'], ['z', 'Metric']]",
        Label::make_entities({{"x", "Method"}, {"z", "Metric"}}),
    }};
    const auto report = evaluation::score_run(preds, golds, spec);
    REQUIRE(report.micro_f1.has_value());
    CHECK(*report.micro_f1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(!report.accuracy.has_value());
    CHECK(!report.macro_f1.has_value());
}

TEST_CASE("score_run: perfect predictions give 1.0 everywhere populated") {
    const auto spec = scicite();
    const auto [preds, golds] = classification_case("ABCABC", "ABCABC", spec);
    const auto report = evaluation::score_run(preds, golds, spec);
    CHECK(*report.macro_precision == doctest::Approx(1.0));
    CHECK(*report.macro_f1 == doctest::Approx(1.0));
    CHECK(*report.accuracy == doctest::Approx(1.0));
}

TEST_CASE("invalid predictions score as wrong, never dropped") {
    const auto spec = scicite();
    const auto [preds, golds] = classification_case("AA", "A?", spec);
    const auto report = evaluation::score_run(preds, golds, spec);
    CHECK(*report.accuracy == doctest::Approx(0.5));
    // Class A: tp=1, fn=1, fp=0 -> precision 1, recall 0.5, f1 2/3.
    CHECK(report.per_class.at(spec.label_set[0]).f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("score_run coverage mismatches") {
    const auto spec = scicite();
    auto [preds, golds] = classification_case("AB", "AB", spec);

    std::vector<Prediction> missing(preds.begin(), preds.begin() + 1);
    CHECK_THROWS_AS(evaluation::score_run(missing, golds, spec), Error);

    auto duplicated = preds;
    duplicated.push_back(preds[0]);
    CHECK_THROWS_AS(evaluation::score_run(duplicated, golds, spec), Error);

    auto unknown = preds;
    unknown[0].test_id = "stranger";
    CHECK_THROWS_AS(evaluation::score_run(unknown, golds, spec), Error);
}

TEST_CASE("prediction order never changes metrics") {
    const auto spec = scicite();
    auto [preds, golds] = classification_case("ABCCBAAB", "ABACBBAB", spec);
    const auto before = evaluation::score_run(preds, golds, spec);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(preds.begin(), preds.end(), rng);
        const auto after = evaluation::score_run(preds, golds, spec);
        CHECK(*after.macro_f1 == *before.macro_f1);
        CHECK(*after.macro_precision == *before.macro_precision);
        CHECK(*after.accuracy == *before.accuracy);
    }
}

TEST_CASE("score_run matches a brute-force confusion oracle on random instances") {
    const auto spec = scicite();
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::string golds, preds;
        for (std::size_t i = 0; i < n; ++i) {
            golds += static_cast<char>('A' + rng() % 3);
            const int r = static_cast<int>(rng() % 4);
            preds += r == 3 ? '?' : static_cast<char>('A' + r);
        }
        const auto [p, g] = classification_case(golds, preds, spec);
        const auto report = evaluation::score_run(p, g, spec);

        // Independent oracle: explicit confusion counts per class.
        double sum_f1 = 0.0, sum_p = 0.0, correct = 0.0;
        for (int c = 0; c < 3; ++c) {
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool gold_is_c = golds[i] == 'A' + c;
                const bool pred_is_c = preds[i] == 'A' + c;
                if (gold_is_c && pred_is_c) tp++;
                if (!gold_is_c && pred_is_c) fp++;
                if (gold_is_c && !pred_is_c) fn++;
            }
            const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
            const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
            const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
            sum_p += precision;
            sum_f1 += f1;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (golds[i] == preds[i]) correct++;

        CHECK(*report.macro_f1 == doctest::Approx(sum_f1 / 3.0).epsilon(1e-12));
        CHECK(*report.macro_precision == doctest::Approx(sum_p / 3.0).epsilon(1e-12));
        CHECK(*report.accuracy == doctest::Approx(correct / n).epsilon(1e-12));
        CHECK(*report.macro_f1 >= 0.0);
        CHECK(*report.macro_f1 <= 1.0);
    }
}

TEST_CASE("extraction micro F1 matches an independent set-count oracle") {
    const auto spec = scierc();
    std::mt19937_64 rng(88);
    const std::vector<std::string> spans{"a", "bb", "ccc", "dd ee", "f's"};
    const auto random_label = [&](std::size_t max_pairs) {
        std::vector<corpus::EntityMention> mentions;
        for (std::size_t i = 0; i < rng() % (max_pairs + 1); ++i)
            mentions.push_back({spans[rng() % spans.size()],
                                spec.entity_type_set[rng() % spec.entity_type_set.size()]});
        return Label::make_entities(std::move(mentions));
    };

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::map<std::string, Label> golds;
        std::vector<Prediction> preds;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string id = "t" + std::to_string(i);
            golds[id] = random_label(4);
            preds.push_back({id, "", random_label(4)});
        }
        const auto report = evaluation::score_run(preds, golds, spec);

        // Oracle over deduplicated per-example sets; the micro identities
        // tp+fp = predicted pairs and tp+fn = gold pairs hold by build.
        double tp = 0, fp = 0, fn = 0, total_pred = 0, total_gold = 0;
        for (const auto& pred : preds) {
            const std::set<corpus::EntityMention> g{golds.at(pred.test_id).entities.begin(),
                                                    golds.at(pred.test_id).entities.end()};
            const std::set<corpus::EntityMention> p{pred.parsed.entities.begin(),
                                                    pred.parsed.entities.end()};
            total_pred += static_cast<double>(p.size());
            total_gold += static_cast<double>(g.size());
            for (const auto& m : p) g.count(m) ? tp++ : fp++;
            for (const auto& m : g)
                if (!p.count(m)) fn++;
        }
        CHECK(tp + fp == total_pred);
        CHECK(tp + fn == total_gold);
        const double expected = 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
        CHECK(*report.micro_f1 == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("aggregate_seeds mean and sample standard deviation") {
    evaluation::MetricReport a, b, c;
    a.task_id = b.task_id = c.task_id = "scicite";
    a.seed = 1;
    b.seed = 2;
    c.seed = 3;
    a.macro_f1 = 0.60;
    b.macro_f1 = 0.62;
    c.macro_f1 = 0.64;
    const std::vector<evaluation::MetricReport> reports{a, b, c};
    const auto agg = evaluation::aggregate_seeds(reports);
    CHECK(agg.metrics.at("macro_f1").mean == doctest::Approx(0.62).epsilon(1e-12));
    CHECK(agg.metrics.at("macro_f1").std == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(agg.seeds == std::vector<std::uint64_t>{1, 2, 3});

    const std::vector<evaluation::MetricReport> identical{a, a, a};
    CHECK(evaluation::aggregate_seeds(identical).metrics.at("macro_f1").std == 0.0);
    // Exactly zero even for values whose mean carries rounding residue.
    evaluation::MetricReport tenth = a;
    tenth.macro_f1 = 0.1;
    const std::vector<evaluation::MetricReport> tenths{tenth, tenth, tenth};
    CHECK(evaluation::aggregate_seeds(tenths).metrics.at("macro_f1").std == 0.0);
    CHECK(evaluation::aggregate_seeds(tenths).metrics.at("macro_f1").mean == 0.1);

    const std::vector<evaluation::MetricReport> single{a};
    CHECK(evaluation::aggregate_seeds(single).metrics.at("macro_f1").mean == doctest::Approx(0.6));
    CHECK(evaluation::aggregate_seeds(single).metrics.at("macro_f1").std == doctest::Approx(0.0));

    evaluation::MetricReport other = a;
    other.task_id = "scinli";
    const std::vector<evaluation::MetricReport> mixed{a, other};
    CHECK_THROWS_AS(evaluation::aggregate_seeds(mixed), Error);
}

TEST_CASE("delta_report relative changes") {
    evaluation::AggregateReport candidate, baseline;
    candidate.task_id = baseline.task_id = "scicite";
    candidate.metrics["macro_f1"] = {0.55, 0.01};
    baseline.metrics["macro_f1"] = {0.50, 0.02};
    const auto deltas = evaluation::delta_report(candidate, baseline);
    CHECK(deltas.at("macro_f1") == doctest::Approx(0.10).epsilon(1e-12));

    CHECK(evaluation::delta_report(baseline, baseline).at("macro_f1") == doctest::Approx(0.0));

    baseline.metrics["macro_f1"] = {0.0, 0.0};
    CHECK_THROWS_AS(evaluation::delta_report(candidate, baseline), Error);

    evaluation::AggregateReport other = baseline;
    other.task_id = "scinli";
    CHECK_THROWS_AS(evaluation::delta_report(candidate, other), Error);
}
