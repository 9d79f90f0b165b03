#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slimrag/gateway.hpp"

namespace slimrag {

enum class TemplateId {
    rag_short,
    rag_long,
    judgment,
    rewrite,
    vanilla,
    cot,
    self_eval,
    annotation_gpt4,
};

const char* template_name(TemplateId id);

struct TemplateSlots {
    std::optional<std::string> reference;
    std::optional<std::string> question;
    std::optional<std::string> heuristic_answer;
};

// Fills the template and returns the message list to send (a single user
// message). Deterministic: same template and slots give byte-identical
// output. Throws RenderError naming the first missing required slot.
std::vector<ChatMessage> render(TemplateId id, const TemplateSlots& slots);

// Convenience for tests and the mock script: the rendered user text.
std::string render_text(TemplateId id, const TemplateSlots& slots);

}  // namespace slimrag
