#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slimrag/gateway.hpp"
#include "slimrag/index.hpp"
#include "slimrag/judgment.hpp"
#include "slimrag/prompts.hpp"
#include "slimrag/rewrite.hpp"
#include "slimrag/types.hpp"

namespace slimrag {

enum class Mode { slimplm, vanilla, cot, direct_rag, self_eval };

Mode mode_from_name(const std::string& name);
const char* mode_name(Mode mode);

enum class PromptStyle { short_form, long_form };

PromptStyle prompt_style_from_name(const std::string& name);
const char* prompt_style_name(PromptStyle style);

struct PipelineConfig {
    Mode mode = Mode::slimplm;
    std::map<Role, ModelEndpoint> endpoints;
    int reference_budget = 5;
    int bm25_top_k = 100;
    int rerank_top_k = 5;
    int concurrency = 4;
    PromptStyle prompt_style = PromptStyle::short_form;
    int reader_max_tokens = 1024;
    int proxy_max_tokens = 256;
};

// JSON config: {"mode", "prompt_style", "reference_budget", "bm25_top_k",
// "rerank_top_k", "concurrency", "endpoints": {role: {"base_url", "model",
// "api_key_env", "cost_weight"}}}. Unknown keys rejected.
PipelineConfig load_pipeline_config(const std::string& path);

struct GenerationPlan {
    enum class Kind { direct, augmented };
    Kind kind = Kind::direct;
    ReferenceSet references;  // empty when kind=direct
    std::vector<std::string> queries_used;
};

const char* plan_kind_name(GenerationPlan::Kind kind);

// One model exchange with the component it is billed to. Self-eval's
// decision call runs on the reader endpoint but is billed as judge work so
// reader exchanges mean final-answer generations only.
struct TaggedExchange {
    Role role = Role::reader;
    double cost_weight = 1.0;
    ChatExchange exchange;
};

struct PipelineTrace {
    std::string question_id;
    std::string heuristic_answer;
    std::optional<Verdict> verdict;
    std::optional<RewriteResult> rewrite_result;
    std::vector<std::string> surviving_queries;  // claim queries that passed the filter
    GenerationPlan plan;
    std::string final_answer;
    std::vector<TaggedExchange> exchanges;
    std::vector<std::string> warnings;
};

// Known verdicts answer directly; unknown ones retrieve with the question
// queries first, then the surviving claim queries. When both lists are
// empty the raw question becomes the sole query.
GenerationPlan route(const Verdict& verdict,
                     const std::vector<std::string>& surviving_queries,
                     const std::vector<std::string>& question_queries,
                     const std::string& question);

// "[1] {title}: {text}" per entry, newline-joined; newlines inside an entry
// become spaces.
std::string assemble_context(const ReferenceSet& refs);

// Token totals per component plus the weighted extra cost relative to the
// reader. Requires at least one reader exchange in the trace.
CostLedger account_cost(const PipelineTrace& trace);

struct RunSummary {
    std::size_t total = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    bool run_failed = false;  // more than half the questions failed
};

class Pipeline {
public:
    // The index may be null for modes that never retrieve (vanilla, cot).
    Pipeline(PipelineConfig config, Gateway& gateway,
             std::shared_ptr<const InvertedIndex> index = nullptr);

    PipelineTrace run_question(const Question& question);

    // Processes questions with bounded concurrency and writes one JSONL
    // result line per question, in input order, flushed line by line.
    // Failed questions produce {"id", "error"} lines and the run continues.
    RunSummary run_dataset(const std::vector<Question>& dataset,
                           const std::string& out_path,
                           std::vector<PipelineTrace>* traces_out = nullptr);

    const PipelineConfig& config() const { return config_; }

private:
    const ModelEndpoint& endpoint(Role role) const;
    void require_endpoint(Role role) const;

    TaggedExchange tagged_chat(Role bill_to, const ModelEndpoint& ep,
                               const std::vector<ChatMessage>& messages,
                               const ChatParams& params);
    void retrieve_for_plan(GenerationPlan& plan, PipelineTrace& trace);
    void generate_final(PipelineTrace& trace, const Question& question);

    PipelineTrace run_slimplm(const Question& question);
    PipelineTrace run_reader_only(const Question& question, TemplateId template_id);
    PipelineTrace run_direct_rag(const Question& question);
    PipelineTrace run_self_eval(const Question& question);

    PipelineConfig config_;
    Gateway& gateway_;
    std::shared_ptr<const InvertedIndex> index_;
};

}  // namespace slimrag
