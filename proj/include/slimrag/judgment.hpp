#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slimrag/gateway.hpp"
#include "slimrag/types.hpp"

namespace slimrag {

// Parsed retrieval-necessity verdict. known=true means the model believes
// the question is answerable without retrieval.
struct Verdict {
    bool known = false;
    std::string raw_output;
    bool fallback_applied = false;
};

// Scans raw for the first case-insensitive "known (true)" or "known (false)",
// tolerating whitespace around the parenthesized word. Anything unparseable
// falls back to known=false (retrieve) with fallback_applied set.
Verdict parse_verdict(const std::string& raw) noexcept;

struct JudgeOutcome {
    Verdict verdict;
    ChatExchange exchange;
};

// Renders the judgment prompt for (question, heuristic answer) and asks the
// judge endpoint at temperature 0.
JudgeOutcome judge(Gateway& gateway, const ModelEndpoint& judge_endpoint,
                   const std::string& question, const std::string& heuristic_answer);

enum class Label { known_true, known_false };

const char* label_name(Label label);

// known_true iff r > theta, strictly. Both arguments must lie in [0,1].
Label label_from_ratio(double r, double theta);

struct LabelConfig {
    double threshold = 0.5;
    uint64_t seed = 0;
    bool balance = true;
};

struct LabeledSample {
    Question question;
    HeuristicAnswer heuristic_answer;
    double ratio = 0.0;
    Label label = Label::known_false;
    bool kept = true;
};

struct LabelCollection {
    std::vector<LabeledSample> samples;  // input order; dropped ones have kept=false
    std::vector<std::string> errors;     // rejected samples, one message each
};

// Labels every sample by matching ratio against config.threshold. With
// balance on, the majority class is downsampled (seeded, uniform) to the
// minority count, so kept-class sizes never differ by more than one.
// Samples without usable short answers are rejected into errors.
LabelCollection collect_labels(const std::vector<std::pair<Question, HeuristicAnswer>>& samples,
                               const LabelConfig& config);

}  // namespace slimrag
