#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace iccl::corpus {

enum class TaskKind {
    single_text_classification,
    sentence_pair_inference,
    entity_extraction,
};

const char* task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

struct TaskSpec {
    std::string task_id;
    TaskKind kind = TaskKind::single_text_classification;
    std::vector<std::string> label_set;       // classification / inference kinds
    std::vector<std::string> entity_type_set; // entity_extraction kind
    std::string task_description;
    int default_demo_count = 1;
};

// Throws ConfigInvalid when the spec breaks its own invariants
// (empty label set, duplicate labels after lowercasing, ...).
void validate_task_spec(const TaskSpec& spec);

struct EntityMention {
    std::string span;
    std::string entity_type;

    bool operator==(const EntityMention& other) const = default;
    bool operator<(const EntityMention& other) const {
        return span != other.span ? span < other.span : entity_type < other.entity_type;
    }
};

// Either a class name, an entity list, or the invalid sentinel produced
// by failed output parsing. invalid is never a valid gold label.
struct Label {
    enum class Variant { class_name, entity_list, invalid };

    Variant variant = Variant::invalid;
    std::string class_name;                // variant == class_name
    std::vector<EntityMention> entities;   // variant == entity_list

    static Label make_class(std::string name);
    static Label make_entities(std::vector<EntityMention> entities);
    static Label make_invalid() { return Label{}; }

    bool operator==(const Label& other) const = default;
};

struct Demonstration {
    std::string demo_id;
    std::string primary_text;
    std::optional<std::string> secondary_text; // present iff sentence_pair_inference
    Label gold;

    bool operator==(const Demonstration& other) const = default;
};

// Pure predicate: does `label` satisfy the gold-label invariants for `spec`?
bool validate_gold(const Label& label, const TaskSpec& spec);

// Reads a line-delimited record file. Classification: {"id","text","label"};
// pair inference: {"id","sentence1","sentence2","label"};
// extraction: {"id","text","label":[[span,type],...]}.
// File order preserved; every returned record validates against `spec`.
std::vector<Demonstration> load_pool(const std::filesystem::path& path, const TaskSpec& spec);

// Task-spec file: one JSON object with task_id, kind, label_set or
// entity_type_set, task_description, default_demo_count.
TaskSpec load_task_spec(const std::filesystem::path& path);

std::string to_lower(std::string text);

} // namespace iccl::corpus
