#include "iccl/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "iccl/errors.hpp"

namespace iccl::evaluation {

using corpus::EntityMention;
using corpus::Label;
using corpus::TaskKind;
using corpus::TaskSpec;

namespace {

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Earliest whole-word occurrence of `word` in `line`, npos if none.
std::size_t find_whole_word(const std::string& line, const std::string& word) {
    std::size_t pos = 0;
    while ((pos = line.find(word, pos)) != std::string::npos) {
        const std::size_t end = pos + word.size();
        const bool left_ok = pos == 0 || !word_char(line[pos - 1]);
        const bool right_ok = end == line.size() || !word_char(line[end]);
        if (left_ok && right_ok) return pos;
        ++pos;
    }
    return std::string::npos;
}

Label parse_classification(const std::string& raw, const TaskSpec& spec) {
    std::string line = raw.substr(0, raw.find('\n'));
    line = corpus::to_lower(line);

    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    std::string best_label;
    for (const std::string& label : spec.label_set) {
        const std::string lowered = corpus::to_lower(label);
        const std::size_t pos = find_whole_word(line, lowered);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && lowered.size() > best_len)) {
            best_pos = pos;
            best_len = lowered.size();
            best_label = lowered;
        }
    }
    if (best_pos == std::string::npos) return Label::make_invalid();
    return Label::make_class(best_label);
}

struct Cursor {
    const std::string& text;
    std::size_t pos;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void skip_ws() {
        while (!done() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (done() || text[pos] != c) return false;
        ++pos;
        return true;
    }
};

// Quoted string with ' or " delimiters and backslash escapes, matching
// serialize_label's output format.
bool parse_quoted(Cursor& cur, std::string& out) {
    cur.skip_ws();
    if (cur.done() || (cur.peek() != '\'' && cur.peek() != '"')) return false;
    const char q = cur.peek();
    ++cur.pos;
    out.clear();
    while (!cur.done()) {
        char c = cur.text[cur.pos];
        if (c == '\\' && cur.pos + 1 < cur.text.size()) {
            out += cur.text[cur.pos + 1];
            cur.pos += 2;
            continue;
        }
        if (c == q) {
            ++cur.pos;
            return true;
        }
        out += c;
        ++cur.pos;
    }
    return false; // unterminated
}

Label parse_extraction(const std::string& raw, const TaskSpec& spec) {
    const std::size_t start = raw.find('[');
    if (start == std::string::npos) return Label::make_invalid();

    Cursor cur{raw, start};
    if (!cur.eat('[')) return Label::make_invalid();
    std::vector<EntityMention> mentions;
    cur.skip_ws();
    if (cur.eat(']')) return Label::make_entities(std::move(mentions)); // empty list

    while (true) {
        if (!cur.eat('[')) return Label::make_invalid();
        EntityMention m;
        if (!parse_quoted(cur, m.span)) return Label::make_invalid();
        if (!cur.eat(',')) return Label::make_invalid();
        if (!parse_quoted(cur, m.entity_type)) return Label::make_invalid();
        if (!cur.eat(']')) return Label::make_invalid();
        // Pairs with unknown types are dropped, not fatal.
        if (std::find(spec.entity_type_set.begin(), spec.entity_type_set.end(), m.entity_type) !=
            spec.entity_type_set.end())
            mentions.push_back(std::move(m));
        if (cur.eat(']')) break;
        if (!cur.eat(',')) return Label::make_invalid();
    }
    return Label::make_entities(std::move(mentions));
}

} // namespace

Label parse_label(const std::string& raw, const TaskSpec& spec) {
    if (spec.kind == TaskKind::entity_extraction) return parse_extraction(raw, spec);
    return parse_classification(raw, spec);
}

namespace {

void check_coverage(std::span<const Prediction> preds,
                    const std::map<std::string, Label>& golds) {
    std::set<std::string> seen;
    for (const Prediction& p : preds) {
        if (!golds.count(p.test_id))
            raise(Errc::coverage_mismatch, "prediction for unknown test id '" + p.test_id + "'");
        if (!seen.insert(p.test_id).second)
            raise(Errc::coverage_mismatch, "duplicate prediction for '" + p.test_id + "'");
    }
    if (seen.size() != golds.size())
        raise(Errc::coverage_mismatch,
              std::to_string(seen.size()) + " predictions for " + std::to_string(golds.size()) +
                  " gold test ids");
}

double f1_of(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::set<EntityMention> mention_set(const Label& label) {
    if (label.variant != Label::Variant::entity_list) return {};
    return {label.entities.begin(), label.entities.end()};
}

} // namespace

MetricReport score_run(std::span<const Prediction> preds,
                       const std::map<std::string, Label>& golds, const TaskSpec& spec) {
    check_coverage(preds, golds);
    MetricReport report;
    report.task_id = spec.task_id;

    if (spec.kind == TaskKind::entity_extraction) {
        double tp = 0.0, fp = 0.0, fn = 0.0;
        for (const Prediction& pred : preds) {
            const std::set<EntityMention> gold = mention_set(golds.at(pred.test_id));
            const std::set<EntityMention> predicted = mention_set(pred.parsed);
            for (const EntityMention& m : predicted)
                gold.count(m) ? tp += 1.0 : fp += 1.0;
            for (const EntityMention& m : gold)
                if (!predicted.count(m)) fn += 1.0;
        }
        const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
        report.micro_f1 = f1_of(precision, recall);
        return report;
    }

    // Classification kinds. Invalid or out-of-set predictions behave as a
    // sentinel class that is never gold: false negatives only.
    std::map<std::string, double> tp, fp, fn;
    std::map<std::string, int> support;
    double exact = 0.0;
    for (const Prediction& pred : preds) {
        const std::string gold = corpus::to_lower(golds.at(pred.test_id).class_name);
        std::string guess;
        if (pred.parsed.variant == Label::Variant::class_name) {
            const std::string lowered = corpus::to_lower(pred.parsed.class_name);
            for (const std::string& label : spec.label_set)
                if (corpus::to_lower(label) == lowered) guess = lowered;
        }
        ++support[gold];
        if (guess == gold && !guess.empty()) {
            exact += 1.0;
            tp[gold] += 1.0;
        } else {
            fn[gold] += 1.0;
            if (!guess.empty()) fp[guess] += 1.0;
        }
    }

    double sum_precision = 0.0, sum_f1 = 0.0;
    for (const std::string& label : spec.label_set) {
        const std::string cls = corpus::to_lower(label);
        PerClass pc;
        pc.support = support.count(cls) ? support[cls] : 0;
        const double tpc = tp[cls], fpc = fp[cls], fnc = fn[cls];
        pc.precision = tpc + fpc > 0.0 ? tpc / (tpc + fpc) : 0.0;
        pc.recall = tpc + fnc > 0.0 ? tpc / (tpc + fnc) : 0.0;
        pc.f1 = f1_of(pc.precision, pc.recall);
        sum_precision += pc.precision;
        sum_f1 += pc.f1;
        report.per_class[cls] = pc;
    }
    const double n_classes = static_cast<double>(spec.label_set.size());
    report.macro_precision = sum_precision / n_classes;
    report.macro_f1 = sum_f1 / n_classes;
    report.accuracy = preds.empty() ? 0.0 : exact / static_cast<double>(preds.size());
    return report;
}

namespace {

void collect(std::map<std::string, std::vector<double>>& values, const char* name,
             const std::optional<double>& metric) {
    if (metric) values[name].push_back(*metric);
}

} // namespace

AggregateReport aggregate_seeds(std::span<const MetricReport> reports) {
    if (reports.empty()) raise(Errc::precondition, "aggregate_seeds requires >= 1 report");
    AggregateReport agg;
    agg.task_id = reports.front().task_id;

    std::map<std::string, std::vector<double>> values;
    for (const MetricReport& report : reports) {
        if (report.task_id != agg.task_id)
            raise(Errc::mixed_tasks,
                  "cannot aggregate '" + report.task_id + "' with '" + agg.task_id + "'");
        agg.seeds.push_back(report.seed);
        collect(values, "macro_precision", report.macro_precision);
        collect(values, "macro_f1", report.macro_f1);
        collect(values, "micro_f1", report.micro_f1);
        collect(values, "accuracy", report.accuracy);
    }

    for (const auto& [name, series] : values) {
        MeanStd ms;
        const bool constant =
            std::all_of(series.begin(), series.end(), [&](double v) { return v == series[0]; });
        if (constant) {
            // Exact zero spread for identical seeds, no rounding residue.
            ms.mean = series[0];
        } else {
            for (double v : series) ms.mean += v;
            ms.mean /= static_cast<double>(series.size());
            double ss = 0.0;
            for (double v : series) ss += (v - ms.mean) * (v - ms.mean);
            ms.std = std::sqrt(ss / static_cast<double>(series.size() - 1));
        }
        agg.metrics[name] = ms;
    }
    return agg;
}

std::map<std::string, double> delta_report(const AggregateReport& candidate,
                                           const AggregateReport& baseline) {
    if (candidate.task_id != baseline.task_id)
        raise(Errc::mixed_tasks,
              "delta between '" + candidate.task_id + "' and '" + baseline.task_id + "'");
    std::map<std::string, double> deltas;
    for (const auto& [name, cand] : candidate.metrics) {
        auto it = baseline.metrics.find(name);
        if (it == baseline.metrics.end()) continue;
        if (it->second.mean == 0.0)
            raise(Errc::zero_baseline, "baseline mean for '" + name + "' is zero");
        deltas[name] = (cand.mean - it->second.mean) / it->second.mean;
    }
    return deltas;
}

} // namespace iccl::evaluation
