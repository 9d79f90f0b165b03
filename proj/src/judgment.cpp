#include "slimrag/judgment.hpp"

#include <algorithm>
#include <cctype>

#include "slimrag/errors.hpp"
#include "slimrag/prompts.hpp"
#include "slimrag/rng.hpp"
#include "slimrag/text.hpp"

namespace slimrag {

namespace {

bool ieq(char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) ==
           std::tolower(static_cast<unsigned char>(b));
}

bool match_word_at(const std::string& s, std::size_t pos, const char* word) {
    for (std::size_t i = 0; word[i]; ++i) {
        if (pos + i >= s.size() || !ieq(s[pos + i], word[i])) return false;
    }
    return true;
}

std::size_t skip_ws(const std::string& s, std::size_t pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos;
}

// Tries to read "(true)" or "(false)" with optional whitespace at pos.
// Returns 1 for true, 0 for false, -1 when the text does not match.
int read_parenthesized_bool(const std::string& s, std::size_t pos) {
    pos = skip_ws(s, pos);
    if (pos >= s.size() || s[pos] != '(') return -1;
    pos = skip_ws(s, pos + 1);
    int value;
    if (match_word_at(s, pos, "true")) {
        value = 1;
        pos += 4;
    } else if (match_word_at(s, pos, "false")) {
        value = 0;
        pos += 5;
    } else {
        return -1;
    }
    pos = skip_ws(s, pos);
    if (pos >= s.size() || s[pos] != ')') return -1;
    return value;
}

}  // namespace

Verdict parse_verdict(const std::string& raw) noexcept {
    Verdict v;
    v.raw_output = raw;
    for (std::size_t i = 0; i + 5 <= raw.size(); ++i) {
        if (!match_word_at(raw, i, "known")) continue;
        int value = read_parenthesized_bool(raw, i + 5);
        if (value >= 0) {
            v.known = value == 1;
            return v;
        }
    }
    v.known = false;
    v.fallback_applied = true;
    return v;
}

JudgeOutcome judge(Gateway& gateway, const ModelEndpoint& judge_endpoint,
                   const std::string& question, const std::string& heuristic_answer) {
    if (question.empty()) throw InvalidInput("judge: question is empty");
    if (heuristic_answer.empty()) throw InvalidInput("judge: heuristic answer is empty");

    TemplateSlots slots;
    slots.question = question;
    slots.heuristic_answer = heuristic_answer;
    auto messages = render(TemplateId::judgment, slots);

    ChatParams params;
    params.temperature = 0.0;
    params.max_tokens = 64;
    JudgeOutcome out;
    out.exchange = gateway.chat(judge_endpoint, messages, params);
    out.verdict = parse_verdict(out.exchange.response_text);
    return out;
}

const char* label_name(Label label) {
    return label == Label::known_true ? "known_true" : "known_false";
}

Label label_from_ratio(double r, double theta) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("matching ratio out of [0,1]");
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidInput("threshold out of [0,1]");
    return r > theta ? Label::known_true : Label::known_false;
}

LabelCollection collect_labels(const std::vector<std::pair<Question, HeuristicAnswer>>& samples,
                               const LabelConfig& config) {
    LabelCollection out;
    for (const auto& [question, answer] : samples) {
        if (question.gold_short_answers.empty()) {
            out.errors.push_back("question " + question.id + ": no short answers");
            continue;
        }
        LabeledSample sample;
        sample.question = question;
        sample.heuristic_answer = answer;
        try {
            sample.ratio = matching_ratio(answer.text, question.gold_short_answers);
        } catch (const InvalidInput& e) {
            out.errors.push_back("question " + question.id + ": " + e.what());
            continue;
        }
        sample.label = label_from_ratio(sample.ratio, config.threshold);
        out.samples.push_back(std::move(sample));
    }

    if (!config.balance) return out;

    std::vector<std::size_t> true_idx, false_idx;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        (out.samples[i].label == Label::known_true ? true_idx : false_idx).push_back(i);
    }
    auto& majority = true_idx.size() >= false_idx.size() ? true_idx : false_idx;
    std::size_t target = std::min(true_idx.size(), false_idx.size());
    if (majority.size() <= target) return out;

    // Seeded Fisher-Yates so the selection is identical on every platform.
    uint64_t state = config.seed;
    std::vector<std::size_t> shuffled = majority;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng::splitmix64(state) % (i + 1));
        std::swap(shuffled[i], shuffled[j]);
    }
    for (std::size_t i = target; i < shuffled.size(); ++i)
        out.samples[shuffled[i]].kept = false;
    return out;
}

}  // namespace slimrag
