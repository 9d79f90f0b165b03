#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slimrag/types.hpp"

namespace slimrag {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Fraction of distinct gold short answers contained in the prediction.
double em_coverage(const std::string& pred, const std::vector<std::string>& golds);

// True iff at least one gold short answer is contained.
bool hit_at_1(const std::string& pred, const std::vector<std::string>& golds);

// Multiset n-gram overlap over normalized tokens, F1-style.
RougeScore rouge_n(const std::string& pred, const std::string& ref, int n);

// Token-level longest common subsequence, F1-style.
RougeScore rouge_l(const std::string& pred, const std::string& ref);

struct QuestionScore {
    std::string id;
    double em = 0.0;
    double strict_em = 0.0;
    double hit = 0.0;
    RougeScore rouge1;
    RougeScore rouge2;
    RougeScore rougeL;
};

enum class EvalMode { short_form, long_form };

EvalMode eval_mode_from_name(const std::string& name);
const char* eval_mode_name(EvalMode mode);

// Per-component mean token spend over the scored questions, plus the raw
// (unweighted) sum of the non-reader means.
struct CostTable {
    double reader = 0.0;
    double proxy = 0.0;
    double rewriter = 0.0;
    double judge = 0.0;
    double total_extra = 0.0;
    double weighted_extra = 0.0;
    double ratio = 0.0;
};

struct EvalReport {
    EvalMode mode = EvalMode::short_form;
    std::size_t sample_count = 0;   // questions scored
    std::size_t failed_count = 0;   // result lines skipped because the run failed them
    std::vector<QuestionScore> per_question;
    double em = 0.0;
    double strict_em = 0.0;
    double hit = 0.0;
    RougeScore rouge1;
    RougeScore rouge2;
    RougeScore rougeL;
    CostTable cost;
};

CostTable make_cost_table(const std::vector<CostLedger>& ledgers);

// Scores results against the dataset golds: short_form computes EM coverage,
// strict EM and Hit@1; long_form computes ROUGE-1/2/L against the gold long
// answer. Every result id must appear in the dataset.
EvalReport evaluate_run(const std::vector<RunResult>& results,
                        const std::vector<Question>& dataset, EvalMode mode);

EvalReport evaluate_run_files(const std::string& results_path,
                              const std::string& dataset_path, EvalMode mode);

std::string report_to_json(const EvalReport& report);

struct GapRow {
    double threshold = 0.0;
    double frac_a = 0.0;    // share of A samples with EM > threshold
    double frac_b = 0.0;    // same for B
    double overlap = 0.0;   // |A∩B| / |B| over the above-threshold id sets
};

// Knowledge-overlap analysis between two models' per-question EM lists.
// Both lists must cover the same question ids. An empty B set counts as
// fully overlapped (1.0).
std::vector<GapRow> knowledge_gap_report(
    const std::vector<std::pair<std::string, double>>& scores_a,
    const std::vector<std::pair<std::string, double>>& scores_b,
    const std::vector<double>& thresholds);

}  // namespace slimrag
