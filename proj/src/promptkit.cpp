#include "iccl/promptkit.hpp"

#include "iccl/errors.hpp"

namespace iccl::promptkit {

using corpus::Demonstration;
using corpus::Label;
using corpus::TaskKind;
using corpus::TaskSpec;

const char* family_kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::mixtral_inst: return "mixtral";
        case FamilyKind::llama2_chat: return "llama2";
        case FamilyKind::qwen_chatml: return "qwen";
        case FamilyKind::generic_messages: return "messages";
    }
    return "unknown";
}

FamilyKind family_kind_from_name(const std::string& name) {
    if (name == "mixtral" || name == "mixtral_inst") return FamilyKind::mixtral_inst;
    if (name == "llama2" || name == "llama2_chat") return FamilyKind::llama2_chat;
    if (name == "qwen" || name == "qwen_chatml") return FamilyKind::qwen_chatml;
    if (name == "messages" || name == "generic_messages") return FamilyKind::generic_messages;
    raise(Errc::config_invalid, "unknown template family '" + name + "'");
}

namespace {

// Python-repr-style quoting, matching the printed label lists: single
// quotes unless the string itself holds one, escapes only where needed.
std::string quote_span(const std::string& s) {
    const bool has_single = s.find('\'') != std::string::npos;
    const bool has_double = s.find('"') != std::string::npos;
    const char q = (has_single && !has_double) ? '"' : '\'';
    std::string out(1, q);
    for (char c : s) {
        if (c == '\\' || c == q) out += '\\';
        out += c;
    }
    out += q;
    return out;
}

void check_demo_kind(const Demonstration& demo, const TaskSpec& spec) {
    const bool pair = spec.kind == TaskKind::sentence_pair_inference;
    if (pair != demo.secondary_text.has_value())
        raise(Errc::demo_kind_mismatch,
              "demonstration '" + demo.demo_id + "' does not match task kind " +
                  corpus::task_kind_name(spec.kind));
    if (demo.gold.variant != Label::Variant::invalid && !corpus::validate_gold(demo.gold, spec))
        raise(Errc::demo_kind_mismatch,
              "gold label of '" + demo.demo_id + "' invalid for task " + spec.task_id);
}

std::string input_block(const TaskSpec& spec, const std::string& primary,
                        const std::optional<std::string>& secondary) {
    if (spec.kind == TaskKind::sentence_pair_inference)
        return "Sentence1: " + primary + "\nSentence2: " + secondary.value_or("");
    return "Sentence: " + primary;
}

// User-side content for a demonstration: input lines plus the label cue.
// The label value itself always lands on the assistant side.
std::string demo_user_content(const TaskSpec& spec, const Demonstration& demo, bool first) {
    std::string content;
    if (first) content = spec.task_description + "\n";
    content += input_block(spec, demo.primary_text, demo.secondary_text);
    content += "\nLabel:";
    return content;
}

std::string test_user_content(const TaskSpec& spec, const TestInput& test, bool first) {
    std::string content;
    if (first) content = spec.task_description + "\n";
    content += input_block(spec, test.primary_text, test.secondary_text);
    return content;
}

const std::string& require_system(const TemplateFamily& family) {
    if (!family.system_message || family.system_message->empty())
        raise(Errc::missing_system_message,
              std::string(family_kind_name(family.kind)) + " requires a system message");
    return *family.system_message;
}

std::string flatten(const TemplateFamily& family, const std::vector<Message>& messages) {
    std::string text;
    switch (family.kind) {
        case FamilyKind::mixtral_inst: {
            // [INST]user[/INST]assistant</s>...[INST]user[/INST], no separators.
            for (std::size_t i = 0; i < messages.size(); ++i) {
                const Message& m = messages[i];
                if (m.role == "user")
                    text += "[INST]" + m.content + "[/INST]";
                else if (m.role == "assistant")
                    text += m.content + "</s>";
            }
            break;
        }
        case FamilyKind::llama2_chat: {
            bool first_user = true;
            for (const Message& m : messages) {
                if (m.role == "system") continue; // woven into the first user turn
                if (m.role == "user") {
                    if (first_user) {
                        text += "<s>[INST] <<SYS>> " + messages.front().content + "<</SYS>>\n" +
                                m.content + "[/INST]";
                        first_user = false;
                    } else {
                        text += "\n<s>[INST]" + m.content + "[/INST]";
                    }
                } else {
                    text += m.content + "</s>";
                }
            }
            break;
        }
        case FamilyKind::qwen_chatml: {
            for (std::size_t i = 0; i < messages.size(); ++i) {
                if (i > 0) text += "\n";
                text += "<|im_start|>" + messages[i].role + " " + messages[i].content +
                        "<|im_end|>";
            }
            break;
        }
        case FamilyKind::generic_messages: {
            for (std::size_t i = 0; i < messages.size(); ++i) {
                if (i > 0) text += "\n";
                text += messages[i].role + ": " + messages[i].content;
            }
            break;
        }
    }
    return text;
}

} // namespace

std::string serialize_label(const Label& label, const TaskSpec& spec) {
    switch (label.variant) {
        case Label::Variant::class_name:
            if (spec.kind == TaskKind::entity_extraction)
                raise(Errc::invalid_label_variant, "class label on an extraction task");
            return corpus::to_lower(label.class_name);
        case Label::Variant::entity_list: {
            if (spec.kind != TaskKind::entity_extraction)
                raise(Errc::invalid_label_variant, "entity label on a classification task");
            std::string out = "[";
            for (std::size_t i = 0; i < label.entities.size(); ++i) {
                if (i > 0) out += ", ";
                out += "[" + quote_span(label.entities[i].span) + ", " +
                       quote_span(label.entities[i].entity_type) + "]";
            }
            out += "]";
            return out;
        }
        case Label::Variant::invalid:
            raise(Errc::invalid_label_variant, "cannot serialize the invalid sentinel");
    }
    raise(Errc::invalid_label_variant, "unknown label variant");
}

RenderedPrompt render(const TemplateFamily& family, const TaskSpec& spec,
                      std::span<const Demonstration> demos, const TestInput& test_input,
                      bool mock_tag) {
    corpus::validate_task_spec(spec);
    for (const Demonstration& demo : demos) check_demo_kind(demo, spec);
    const bool pair = spec.kind == TaskKind::sentence_pair_inference;
    if (pair != test_input.secondary_text.has_value())
        raise(Errc::demo_kind_mismatch, "test input does not match task kind");

    RenderedPrompt prompt;
    if (family.kind == FamilyKind::llama2_chat || family.kind == FamilyKind::qwen_chatml)
        prompt.messages.push_back({"system", require_system(family)});
    else if (family.kind == FamilyKind::generic_messages && family.system_message)
        prompt.messages.push_back({"system", *family.system_message});

    bool first_user = true;
    for (const Demonstration& demo : demos) {
        prompt.messages.push_back({"user", demo_user_content(spec, demo, first_user)});
        prompt.messages.push_back({"assistant", serialize_label(demo.gold, spec)});
        first_user = false;
    }
    prompt.messages.push_back({"user", test_user_content(spec, test_input, first_user)});

    prompt.text = flatten(family, prompt.messages);
    if (mock_tag) {
        prompt.text += "\n# test:" + test_input.test_id;
        prompt.test_id_tag = test_input.test_id;
    }
    return prompt;
}

std::pair<std::string, std::string> render_scoring_pair(const TemplateFamily& family,
                                                        const TaskSpec& spec,
                                                        const Demonstration& demo) {
    check_demo_kind(demo, spec);
    if (demo.gold.variant == Label::Variant::invalid)
        raise(Errc::demo_kind_mismatch, "scoring requires a gold label on '" + demo.demo_id + "'");

    const std::string continuation = serialize_label(demo.gold, spec);
    const std::string user = demo_user_content(spec, demo, /*first=*/true);

    std::string prompt;
    switch (family.kind) {
        case FamilyKind::mixtral_inst:
            prompt = "[INST]" + user + "[/INST]";
            break;
        case FamilyKind::llama2_chat:
            prompt = "<s>[INST] <<SYS>> " + require_system(family) + "<</SYS>>\n" + user +
                     "[/INST]";
            break;
        case FamilyKind::qwen_chatml:
            prompt = "<|im_start|>system " + require_system(family) + "<|im_end|>\n" +
                     "<|im_start|>user " + user + "<|im_end|>\n<|im_start|>assistant ";
            break;
        case FamilyKind::generic_messages:
            if (family.system_message) prompt = "system: " + *family.system_message + "\n";
            prompt += "user: " + user + "\nassistant: ";
            break;
    }
    return {prompt, continuation};
}

} // namespace iccl::promptkit
