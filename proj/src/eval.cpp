#include "slimrag/eval.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slimrag/errors.hpp"
#include "slimrag/text.hpp"

namespace slimrag {

using nlohmann::json;

double em_coverage(const std::string& pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw InvalidInput("em_coverage: no gold answers");
    return matching_ratio(pred, golds);
}

bool hit_at_1(const std::string& pred, const std::vector<std::string>& golds) {
    return em_coverage(pred, golds) > 0.0;
}

namespace {

double safe_f1(double p, double r) {
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

RougeScore rouge_n(const std::string& pred, const std::string& ref, int n) {
    if (n < 1) throw InvalidInput("rouge_n: n must be positive");
    auto pred_tokens = tokenize(pred);
    auto ref_tokens = tokenize(ref);

    auto ngrams = [n](const std::vector<std::string>& tokens) {
        std::map<std::string, long> counts;
        long total = 0;
        if (tokens.size() + 1 > static_cast<std::size_t>(n)) {
            for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                std::string key = tokens[i];
                for (int j = 1; j < n; ++j) key += '\x1f' + tokens[i + j];
                ++counts[key];
                ++total;
            }
        }
        return std::pair{counts, total};
    };

    auto [pred_counts, pred_total] = ngrams(pred_tokens);
    auto [ref_counts, ref_total] = ngrams(ref_tokens);

    long overlap = 0;
    for (const auto& [key, count] : pred_counts) {
        auto it = ref_counts.find(key);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }

    RougeScore score;
    score.precision = pred_total > 0 ? static_cast<double>(overlap) / pred_total : 0.0;
    score.recall = ref_total > 0 ? static_cast<double>(overlap) / ref_total : 0.0;
    score.f1 = safe_f1(score.precision, score.recall);
    return score;
}

RougeScore rouge_l(const std::string& pred, const std::string& ref) {
    auto a = tokenize(pred);
    auto b = tokenize(ref);
    RougeScore score;
    if (a.empty() || b.empty()) return score;

    std::vector<long> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    long lcs = prev[b.size()];
    score.precision = static_cast<double>(lcs) / static_cast<double>(a.size());
    score.recall = static_cast<double>(lcs) / static_cast<double>(b.size());
    score.f1 = safe_f1(score.precision, score.recall);
    return score;
}

EvalMode eval_mode_from_name(const std::string& name) {
    if (name == "short_form") return EvalMode::short_form;
    if (name == "long_form") return EvalMode::long_form;
    throw InvalidInput("unknown eval mode: " + name);
}

const char* eval_mode_name(EvalMode mode) {
    return mode == EvalMode::short_form ? "short_form" : "long_form";
}

CostTable make_cost_table(const std::vector<CostLedger>& ledgers) {
    CostTable table;
    if (ledgers.empty()) return table;
    double n = static_cast<double>(ledgers.size());
    for (const auto& ledger : ledgers) {
        table.reader += static_cast<double>(ledger.reader_tokens);
        table.proxy += static_cast<double>(ledger.proxy_tokens);
        table.rewriter += static_cast<double>(ledger.rewriter_tokens);
        table.judge += static_cast<double>(ledger.judge_tokens);
        table.weighted_extra += ledger.weighted_extra_cost;
        table.ratio += ledger.extra_cost_ratio;
    }
    table.reader /= n;
    table.proxy /= n;
    table.rewriter /= n;
    table.judge /= n;
    table.weighted_extra /= n;
    table.ratio /= n;
    table.total_extra = table.proxy + table.rewriter + table.judge;
    return table;
}

EvalReport evaluate_run(const std::vector<RunResult>& results,
                        const std::vector<Question>& dataset, EvalMode mode) {
    if (results.empty()) throw InvalidInput("no results to evaluate");

    std::map<std::string, const Question*> by_id;
    for (const auto& q : dataset) by_id[q.id] = &q;

    std::vector<std::string> unmatched;
    for (const auto& r : results)
        if (!by_id.count(r.id)) unmatched.push_back(r.id);
    if (!unmatched.empty()) {
        std::string msg = "result ids not in dataset:";
        for (const auto& id : unmatched) msg += " " + id;
        throw InvalidInput(msg);
    }

    if (mode == EvalMode::long_form) {
        std::vector<std::string> missing;
        for (const auto& r : results) {
            if (r.failed) continue;
            if (!by_id.at(r.id)->gold_long_answer.has_value()) missing.push_back(r.id);
        }
        if (!missing.empty()) {
            std::string msg = "questions lack a gold long answer:";
            for (const auto& id : missing) msg += " " + id;
            throw InvalidInput(msg);
        }
    }

    EvalReport report;
    report.mode = mode;
    std::vector<CostLedger> ledgers;
    for (const auto& r : results) {
        if (r.failed) {
            ++report.failed_count;
            continue;
        }
        const Question& q = *by_id.at(r.id);
        QuestionScore score;
        score.id = r.id;
        if (mode == EvalMode::short_form) {
            score.em = em_coverage(r.answer, q.gold_short_answers);
            score.hit = score.em > 0.0 ? 1.0 : 0.0;
            score.strict_em = strict_exact_match(r.answer, q.gold_short_answers) ? 1.0 : 0.0;
        } else {
            const std::string& gold = *q.gold_long_answer;
            score.rouge1 = rouge_n(r.answer, gold, 1);
            score.rouge2 = rouge_n(r.answer, gold, 2);
            score.rougeL = rouge_l(r.answer, gold);
        }
        report.em += score.em;
        report.strict_em += score.strict_em;
        report.hit += score.hit;
        report.rouge1.precision += score.rouge1.precision;
        report.rouge1.recall += score.rouge1.recall;
        report.rouge1.f1 += score.rouge1.f1;
        report.rouge2.precision += score.rouge2.precision;
        report.rouge2.recall += score.rouge2.recall;
        report.rouge2.f1 += score.rouge2.f1;
        report.rougeL.precision += score.rougeL.precision;
        report.rougeL.recall += score.rougeL.recall;
        report.rougeL.f1 += score.rougeL.f1;
        report.per_question.push_back(std::move(score));
        ledgers.push_back(r.cost);
    }
    report.sample_count = report.per_question.size();
    if (report.sample_count == 0) throw InvalidInput("every result line is a failure");

    double n = static_cast<double>(report.sample_count);
    report.em /= n;
    report.strict_em /= n;
    report.hit /= n;
    for (RougeScore* rs : {&report.rouge1, &report.rouge2, &report.rougeL}) {
        rs->precision /= n;
        rs->recall /= n;
        rs->f1 /= n;
    }
    report.cost = make_cost_table(ledgers);
    return report;
}

EvalReport evaluate_run_files(const std::string& results_path,
                              const std::string& dataset_path, EvalMode mode) {
    return evaluate_run(load_results(results_path), load_dataset(dataset_path), mode);
}

std::string report_to_json(const EvalReport& report) {
    json doc;
    doc["mode"] = eval_mode_name(report.mode);
    doc["sample_count"] = report.sample_count;
    doc["failed_count"] = report.failed_count;
    json metrics;
    if (report.mode == EvalMode::short_form) {
        metrics["em"] = report.em;
        metrics["strict_em"] = report.strict_em;
        metrics["hit_at_1"] = report.hit;
    } else {
        auto rouge_json = [](const RougeScore& rs) {
            return json{{"precision", rs.precision}, {"recall", rs.recall}, {"f1", rs.f1}};
        };
        metrics["rouge1"] = rouge_json(report.rouge1);
        metrics["rouge2"] = rouge_json(report.rouge2);
        metrics["rougeL"] = rouge_json(report.rougeL);
    }
    doc["metrics"] = metrics;
    doc["cost"] = json{{"reader", report.cost.reader},
                       {"proxy", report.cost.proxy},
                       {"rewriter", report.cost.rewriter},
                       {"judge", report.cost.judge},
                       {"total_extra", report.cost.total_extra},
                       {"weighted_extra", report.cost.weighted_extra},
                       {"extra_cost_ratio", report.cost.ratio}};
    json per_q = json::array();
    for (const auto& s : report.per_question) {
        json row;
        row["id"] = s.id;
        if (report.mode == EvalMode::short_form) {
            row["em"] = s.em;
            row["strict_em"] = s.strict_em;
            row["hit_at_1"] = s.hit;
        } else {
            row["rouge1_f1"] = s.rouge1.f1;
            row["rouge2_f1"] = s.rouge2.f1;
            row["rougeL_f1"] = s.rougeL.f1;
        }
        per_q.push_back(std::move(row));
    }
    doc["per_question"] = std::move(per_q);
    return doc.dump(2);
}

std::vector<GapRow> knowledge_gap_report(
    const std::vector<std::pair<std::string, double>>& scores_a,
    const std::vector<std::pair<std::string, double>>& scores_b,
    const std::vector<double>& thresholds) {
    std::map<std::string, double> a_by_id, b_by_id;
    for (const auto& [id, em] : scores_a) a_by_id[id] = em;
    for (const auto& [id, em] : scores_b) b_by_id[id] = em;
    if (a_by_id.size() != scores_a.size() || b_by_id.size() != scores_b.size())
        throw InvalidInput("knowledge gap: duplicate question ids");

    std::vector<std::string> mismatched;
    for (const auto& [id, em] : a_by_id)
        if (!b_by_id.count(id)) mismatched.push_back(id);
    for (const auto& [id, em] : b_by_id)
        if (!a_by_id.count(id)) mismatched.push_back(id);
    if (!mismatched.empty()) {
        std::string msg = "knowledge gap: ids not shared by both score lists:";
        for (const auto& id : mismatched) msg += " " + id;
        throw InvalidInput(msg);
    }
    if (a_by_id.empty()) throw InvalidInput("knowledge gap: empty score lists");

    std::vector<GapRow> rows;
    double n = static_cast<double>(a_by_id.size());
    for (double t : thresholds) {
        GapRow row;
        row.threshold = t;
        long count_a = 0, count_b = 0, both = 0;
        for (const auto& [id, em_a] : a_by_id) {
            bool in_a = em_a > t;
            bool in_b = b_by_id.at(id) > t;
            if (in_a) ++count_a;
            if (in_b) ++count_b;
            if (in_a && in_b) ++both;
        }
        row.frac_a = static_cast<double>(count_a) / n;
        row.frac_b = static_cast<double>(count_b) / n;
        row.overlap = count_b > 0 ? static_cast<double>(both) / count_b : 1.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace slimrag
