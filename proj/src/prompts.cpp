#include "slimrag/prompts.hpp"

#include "slimrag/errors.hpp"

namespace slimrag {

namespace {

constexpr const char* kParseSystem =
    "<SYS> You are a helpful assistant. Your task is to parse user input into "
    "structured formats and accomplish the task according to the heuristic answer. "
    "</SYS>";

constexpr const char* kRagShortSystem =
    "<<SYS>>\n"
    "Now, based on the following reference and your knowledge, please answer the "
    "question more succinctly and professionally. The reference is delimited by "
    "triple brackets [[[]]]. The question is delimited by triple parentheses "
    "((())). You should include as many possible answers as you can.\n"
    "<</SYS>>";

constexpr const char* kRagLongSystem =
    "<<SYS>>\n"
    "Now, based on the following reference and your knowledge, please answer the "
    "question more succinctly and professionally. The reference is delimited by "
    "triple brackets [[[]]]. The question is delimited by triple parentheses "
    "((())). You are not allowed to add fabrications or hallucinations.\n"
    "<</SYS>>";

constexpr const char* kAnnotationSystem =
    "<<SYS>>You are asked to first separate a given text by claims and then "
    "provide a search query to verify each claim if needed.\n"
    "Here are some requirements:\n"
    "1. The separation is conducted according to the meaning and each claim "
    "should be be brief and contain as one key claim.\n"
    "2. Do not add any hallucinated information or miss any information.\n"
    "3. The claims should be independent and self-contained, and the claims "
    "should be fully described without using pronouns such as “he”, "
    "“this”, or “that”.\n"
    "4. The query is derived from it's corresponding claim and the original user "
    "question, and should be useful to check the factuality of the claim.\n"
    "5. If the claim does not contain any fact relevant with the original user "
    "question, or only contains simple commen senses, then search is not "
    "required.\n"
    "6. The final return should strictly follow the given format.\n"
    "Like this: <Claims> <Claim(claim1)> <Search(True/False)> <Query(query1)> "
    "<Claim(claim2)> <Search(True/False)> <Query(query2)> "
    "<Claim(claim3)><Search(True/False)><Query(query3)>......</Claims> <</SYS>>";

constexpr const char* kSelfEvalPrompt =
    "Can you answer the following question correctly from your own knowledge, "
    "without consulting any reference documents? Reply with \"Yes\" or \"No\" "
    "only.\n"
    "Question: What is the capital of Italy?\n"
    "Answer: Yes\n"
    "Question: What was the closing price of Acme stock last Tuesday?\n"
    "Answer: No\n";

const std::string& require(const std::optional<std::string>& slot, const char* name) {
    if (!slot.has_value())
        throw RenderError(std::string("template slot missing: ") + name);
    return *slot;
}

}  // namespace

const char* template_name(TemplateId id) {
    switch (id) {
        case TemplateId::rag_short: return "rag_short";
        case TemplateId::rag_long: return "rag_long";
        case TemplateId::judgment: return "judgment";
        case TemplateId::rewrite: return "rewrite";
        case TemplateId::vanilla: return "vanilla";
        case TemplateId::cot: return "cot";
        case TemplateId::self_eval: return "self_eval";
        case TemplateId::annotation_gpt4: return "annotation_gpt4";
    }
    return "unknown";
}

std::string render_text(TemplateId id, const TemplateSlots& slots) {
    switch (id) {
        case TemplateId::rag_short:
        case TemplateId::rag_long: {
            const std::string& reference = require(slots.reference, "reference");
            const std::string& question = require(slots.question, "question");
            std::string out = id == TemplateId::rag_short ? kRagShortSystem : kRagLongSystem;
            out += "\nReference: [[[" + reference + "]]],\n";
            out += "question: (((" + question + ")))";
            return out;
        }
        case TemplateId::judgment:
        case TemplateId::rewrite: {
            const std::string& answer = require(slots.heuristic_answer, "heuristic_answer");
            const std::string& question = require(slots.question, "question");
            std::string out = kParseSystem;
            out += "\nHeuristic answer: " + answer;
            out += "\nQuestion: " + question;
            out += id == TemplateId::judgment ? "\nRetrieval Necessity Judgment Output:"
                                              : "\nQuery Rewrite Output:";
            return out;
        }
        case TemplateId::vanilla:
            return require(slots.question, "question");
        case TemplateId::cot:
            return require(slots.question, "question") +
                   "\nPlease think step-by-step to derive the final answer.";
        case TemplateId::self_eval:
            return std::string(kSelfEvalPrompt) + "Question: " +
                   require(slots.question, "question") + "\nAnswer:";
        case TemplateId::annotation_gpt4: {
            const std::string& question = require(slots.question, "question");
            const std::string& answer = require(slots.heuristic_answer, "heuristic_answer");
            std::string out = kAnnotationSystem;
            out += "\nQuestion: " + question;
            out += "\nText: " + answer;
            return out;
        }
    }
    throw RenderError("unknown template id");
}

std::vector<ChatMessage> render(TemplateId id, const TemplateSlots& slots) {
    return {ChatMessage{ChatMessage::Kind::user, render_text(id, slots)}};
}

}  // namespace slimrag
