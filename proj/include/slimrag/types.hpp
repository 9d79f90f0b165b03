#pragma once

#include <optional>
#include <string>
#include <vector>

namespace slimrag {

// A user question with its gold annotations. Short answers may be empty
// (long-form datasets); the long answer is optional (short-form datasets).
struct Question {
    std::string id;
    std::string text;
    std::vector<std::string> gold_short_answers;
    std::optional<std::string> gold_long_answer;
};

// One corpus entry.
struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
};

// Preliminary answer produced by the proxy model for one question.
struct HeuristicAnswer {
    std::string question_id;
    std::string text;
    long completion_tokens = 0;
};

// Token spend of one answered question, split by pipeline component.
// weighted_extra_cost prices every non-reader token at its endpoint's
// cost weight; extra_cost_ratio divides that by the reader's tokens.
struct CostLedger {
    long reader_tokens = 0;
    long proxy_tokens = 0;
    long rewriter_tokens = 0;
    long judge_tokens = 0;
    double weighted_extra_cost = 0.0;
    double extra_cost_ratio = 0.0;
};

// One line of a run's results file. Failed questions carry only id+error.
struct RunResult {
    std::string id;
    std::string answer;
    std::string plan_kind;
    std::vector<std::string> queries;
    CostLedger cost;
    bool failed = false;
    std::string error;
};

// Dataset JSONL: {"id", "question", "short_answers", "long_answer"} per line.
// Enforces non-empty question text and unique ids.
std::vector<Question> load_dataset(const std::string& path);

// Corpus JSONL: {"doc_id", "title", "text"} per line.
// Enforces non-empty text and unique doc_ids.
std::vector<Document> load_corpus(const std::string& path);

// Heuristic answers JSONL: {"question_id", "answer", "completion_tokens"} per line.
std::vector<HeuristicAnswer> load_answers(const std::string& path);

// Results JSONL: {"id", "answer", "plan_kind", "queries", "cost"} per line,
// or {"id", "error"} for failed questions.
std::vector<RunResult> load_results(const std::string& path);

}  // namespace slimrag
