#include "iccl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "iccl/errors.hpp"

namespace iccl::corpus {

using nlohmann::json;

std::string to_lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

const char* task_kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::single_text_classification: return "single_text_classification";
        case TaskKind::sentence_pair_inference: return "sentence_pair_inference";
        case TaskKind::entity_extraction: return "entity_extraction";
    }
    return "unknown";
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "single_text_classification") return TaskKind::single_text_classification;
    if (name == "sentence_pair_inference") return TaskKind::sentence_pair_inference;
    if (name == "entity_extraction") return TaskKind::entity_extraction;
    raise(Errc::config_invalid, "unknown task kind '" + name + "'");
}

void validate_task_spec(const TaskSpec& spec) {
    if (spec.task_id.empty()) raise(Errc::config_invalid, "task_id must be nonempty");
    if (spec.default_demo_count < 1)
        raise(Errc::config_invalid, "default_demo_count must be >= 1");
    if (spec.kind == TaskKind::entity_extraction) {
        if (spec.entity_type_set.empty())
            raise(Errc::config_invalid, "entity_extraction requires a nonempty entity_type_set");
        if (!spec.label_set.empty())
            raise(Errc::config_invalid, "entity_extraction must not carry a label_set");
    } else {
        if (spec.label_set.empty())
            raise(Errc::config_invalid, "classification kinds require a nonempty label_set");
        if (!spec.entity_type_set.empty())
            raise(Errc::config_invalid, "classification kinds must not carry an entity_type_set");
        std::set<std::string> seen;
        for (const auto& label : spec.label_set) {
            if (!seen.insert(to_lower(label)).second)
                raise(Errc::config_invalid,
                      "label_set entries must be unique after lowercasing: '" + label + "'");
        }
    }
}

Label Label::make_class(std::string name) {
    Label label;
    label.variant = Variant::class_name;
    label.class_name = std::move(name);
    return label;
}

Label Label::make_entities(std::vector<EntityMention> entities) {
    Label label;
    label.variant = Variant::entity_list;
    label.entities = std::move(entities);
    return label;
}

bool validate_gold(const Label& label, const TaskSpec& spec) {
    switch (label.variant) {
        case Label::Variant::invalid:
            return false;
        case Label::Variant::class_name: {
            if (spec.kind == TaskKind::entity_extraction) return false;
            const std::string lowered = to_lower(label.class_name);
            return std::any_of(spec.label_set.begin(), spec.label_set.end(),
                               [&](const std::string& l) { return to_lower(l) == lowered; });
        }
        case Label::Variant::entity_list: {
            if (spec.kind != TaskKind::entity_extraction) return false;
            return std::all_of(
                label.entities.begin(), label.entities.end(), [&](const EntityMention& m) {
                    return !m.span.empty() &&
                           std::find(spec.entity_type_set.begin(), spec.entity_type_set.end(),
                                     m.entity_type) != spec.entity_type_set.end();
                });
        }
    }
    return false;
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
    raise(Errc::malformed_record, "line " + std::to_string(line_no) + ": " + what);
}

std::string require_string(const json& record, const char* key, std::size_t line_no) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string())
        malformed(line_no, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

Label parse_gold_field(const json& record, const TaskSpec& spec, std::size_t line_no) {
    auto it = record.find("label");
    if (it == record.end()) malformed(line_no, "missing field 'label'");
    if (spec.kind == TaskKind::entity_extraction) {
        if (!it->is_array()) malformed(line_no, "extraction label must be a [[span, type], ...] list");
        std::vector<EntityMention> mentions;
        for (const auto& pair : *it) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
                malformed(line_no, "entity entries must be [span, type] string pairs");
            mentions.push_back({pair[0].get<std::string>(), pair[1].get<std::string>()});
        }
        return Label::make_entities(std::move(mentions));
    }
    if (!it->is_string()) malformed(line_no, "label must be a string");
    // Classification golds are normalized to lowercase on load.
    return Label::make_class(to_lower(it->get<std::string>()));
}

} // namespace

std::vector<Demonstration> load_pool(const std::filesystem::path& path, const TaskSpec& spec) {
    validate_task_spec(spec);
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open pool file " + path.string());

    std::vector<Demonstration> pool;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            malformed(line_no, e.what());
        }
        if (!record.is_object()) malformed(line_no, "record is not a JSON object");

        Demonstration demo;
        demo.demo_id = require_string(record, "id", line_no);
        if (spec.kind == TaskKind::sentence_pair_inference) {
            demo.primary_text = require_string(record, "sentence1", line_no);
            std::string second = require_string(record, "sentence2", line_no);
            // Empty second sentence is treated as absent, which pair
            // inference does not allow.
            if (second.empty()) malformed(line_no, "sentence2 must be nonempty");
            demo.secondary_text = std::move(second);
        } else {
            demo.primary_text = require_string(record, "text", line_no);
        }
        if (demo.primary_text.empty()) malformed(line_no, "primary text must be nonempty");
        demo.gold = parse_gold_field(record, spec, line_no);

        if (!seen_ids.insert(demo.demo_id).second)
            raise(Errc::duplicate_demo_id,
                  "line " + std::to_string(line_no) + ": duplicate id '" + demo.demo_id + "'");
        if (!validate_gold(demo.gold, spec)) {
            if (demo.gold.variant == Label::Variant::class_name)
                raise(Errc::label_outside_label_set,
                      "line " + std::to_string(line_no) + ": label '" + demo.gold.class_name +
                          "' not in label_set of task " + spec.task_id);
            raise(Errc::label_outside_label_set,
                  "line " + std::to_string(line_no) + ": gold label invalid for task " +
                      spec.task_id);
        }
        pool.push_back(std::move(demo));
    }
    return pool;
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open task file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        raise(Errc::config_invalid, "task file " + path.string() + ": " + e.what());
    }
    TaskSpec spec;
    spec.task_id = doc.value("task_id", std::string{});
    spec.kind = task_kind_from_name(doc.value("kind", std::string{}));
    spec.label_set = doc.value("label_set", std::vector<std::string>{});
    spec.entity_type_set = doc.value("entity_type_set", std::vector<std::string>{});
    spec.task_description = doc.value("task_description", std::string{});
    spec.default_demo_count = doc.value("default_demo_count", 1);
    validate_task_spec(spec);
    return spec;
}

} // namespace iccl::corpus
