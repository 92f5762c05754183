#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iccl/corpus.hpp"

namespace iccl::promptkit {

enum class FamilyKind { mixtral_inst, llama2_chat, qwen_chatml, generic_messages };

const char* family_kind_name(FamilyKind kind);
FamilyKind family_kind_from_name(const std::string& name);

// system_message is ignored by mixtral_inst and required by
// llama2_chat / qwen_chatml.
struct TemplateFamily {
    FamilyKind kind = FamilyKind::mixtral_inst;
    std::optional<std::string> system_message;
};

struct Message {
    std::string role; // system | user | assistant
    std::string content;

    bool operator==(const Message& other) const = default;
};

struct RenderedPrompt {
    std::string text;
    std::vector<Message> messages;
    std::optional<std::string> test_id_tag; // trailing "# test:<id>" line, mock backend only
};

// A test example as it enters the prompt: no gold label attached.
struct TestInput {
    std::string test_id;
    std::string primary_text;
    std::optional<std::string> secondary_text;
};

// Canonical label text: lowercase class name for classification kinds,
// bracketed [['span', 'type'], ...] list for extraction.
std::string serialize_label(const corpus::Label& label, const corpus::TaskSpec& spec);

// Renders the few-shot prompt for one model family. Demonstrations appear
// in the given order, all before the test input; the task description
// appears once, in the first user turn. When mock_tag is set the text gains
// a final "# test:<id>" line that the mock backend uses for routing.
RenderedPrompt render(const TemplateFamily& family, const corpus::TaskSpec& spec,
                      std::span<const corpus::Demonstration> demos, const TestInput& test_input,
                      bool mock_tag = false);

// (prompt, continuation) pair for label scoring: the prompt is the 1-shot
// render cut right after the label cue, the continuation is the serialized
// gold label. prompt + continuation is a byte prefix of the 1-shot render.
std::pair<std::string, std::string> render_scoring_pair(const TemplateFamily& family,
                                                        const corpus::TaskSpec& spec,
                                                        const corpus::Demonstration& demo);

} // namespace iccl::promptkit
