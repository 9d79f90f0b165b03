#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slimrag/errors.hpp"
#include "slimrag/eval.hpp"
#include "slimrag/index.hpp"
#include "slimrag/judgment.hpp"
#include "slimrag/mock_llm.hpp"
#include "slimrag/pipeline.hpp"
#include "slimrag/rewrite.hpp"
#include "slimrag/types.hpp"

using nlohmann::json;

namespace {

using namespace slimrag;

int cmd_index(const std::string& corpus_path, const std::string& out_path, double k1,
              double b) {
    auto corpus = load_corpus(corpus_path);
    BM25Params params;
    params.k1 = k1;
    params.b = b;
    auto index = InvertedIndex::build(corpus, params);
    index.save(out_path);
    std::cout << "indexed " << index.doc_count() << " documents (avg length "
              << index.avg_doc_length() << ") -> " << out_path << "\n";
    return 0;
}

int cmd_run(const std::string& dataset_path, const std::string& index_path,
            const std::string& config_path, const std::string& mode_name_arg,
            const std::string& out_path) {
    PipelineConfig config = load_pipeline_config(config_path);
    if (!mode_name_arg.empty()) config.mode = mode_from_name(mode_name_arg);

    std::shared_ptr<const InvertedIndex> index;
    if (!index_path.empty())
        index = std::make_shared<const InvertedIndex>(InvertedIndex::load(index_path));

    auto dataset = load_dataset(dataset_path);
    Gateway gateway;
    Pipeline pipeline(config, gateway, index);
    RunSummary summary = pipeline.run_dataset(dataset, out_path);

    std::cout << "mode " << mode_name(config.mode) << ": " << summary.succeeded << "/"
              << summary.total << " questions answered, " << summary.failed
              << " failed -> " << out_path << "\n";
    if (summary.run_failed) {
        std::cerr << "error: more than half of the questions failed\n";
        return 1;
    }
    return 0;
}

int cmd_labels_collect(const std::string& dataset_path, const std::string& answers_path,
                       double theta, uint64_t seed, bool no_balance,
                       const std::string& out_path) {
    auto dataset = load_dataset(dataset_path);
    auto answers = load_answers(answers_path);

    std::map<std::string, const HeuristicAnswer*> by_id;
    for (const auto& a : answers) by_id[a.question_id] = &a;

    std::vector<std::pair<Question, HeuristicAnswer>> samples;
    for (const auto& q : dataset) {
        auto it = by_id.find(q.id);
        if (it == by_id.end()) {
            std::cerr << "warning: no heuristic answer for question " << q.id << ", skipped\n";
            continue;
        }
        samples.emplace_back(q, *it->second);
    }

    LabelConfig config;
    config.threshold = theta;
    config.seed = seed;
    config.balance = !no_balance;
    LabelCollection collection = collect_labels(samples, config);
    for (const auto& err : collection.errors) std::cerr << "warning: " << err << "\n";

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + out_path);
    std::size_t kept_true = 0, kept_false = 0;
    for (const auto& s : collection.samples) {
        json line;
        line["question_id"] = s.question.id;
        line["ratio"] = s.ratio;
        line["label"] = label_name(s.label);
        line["kept"] = s.kept;
        out << line.dump() << "\n";
        if (s.kept) (s.label == Label::known_true ? kept_true : kept_false)++;
    }
    std::cout << "labeled " << collection.samples.size() << " samples (kept " << kept_true
              << " known_true / " << kept_false << " known_false) -> " << out_path << "\n";
    return 0;
}

int cmd_annotate_prep(const std::string& dataset_path, const std::string& answers_path,
                      const std::string& out_path) {
    auto dataset = load_dataset(dataset_path);
    auto answers = load_answers(answers_path);
    std::map<std::string, const HeuristicAnswer*> by_id;
    for (const auto& a : answers) by_id[a.question_id] = &a;

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + out_path);
    std::size_t written = 0;
    for (const auto& q : dataset) {
        auto it = by_id.find(q.id);
        if (it == by_id.end() || it->second->text.empty()) {
            std::cerr << "warning: no heuristic answer for question " << q.id << ", skipped\n";
            continue;
        }
        json line;
        line["question_id"] = q.id;
        line["request"] = build_annotation_request(q.text, it->second->text);
        out << line.dump() << "\n";
        ++written;
    }
    std::cout << "wrote " << written << " annotation requests -> " << out_path << "\n";
    return 0;
}

int cmd_annotate_parse(const std::string& raw_path, const std::string& out_path) {
    std::ifstream in(raw_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + raw_path);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + out_path);

    std::string raw_line;
    std::size_t line_no = 0, parsed_count = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        if (raw_line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(raw_line);
        } catch (const json::exception& e) {
            throw IoError(raw_path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        json line;
        line["question_id"] = obj.value("question_id", std::string());
        try {
            AnnotationParse parsed = parse_annotation_output(obj.at("output").get<std::string>());
            json claims = json::array();
            for (const auto& cq : parsed.entries)
                claims.push_back(json{{"claim", cq.claim},
                                      {"query", cq.query},
                                      {"needs_search", *cq.needs_search}});
            line["claims"] = std::move(claims);
            if (!parsed.warnings.empty()) line["warnings"] = parsed.warnings;
            ++parsed_count;
        } catch (const std::exception& e) {
            line["error"] = e.what();
        }
        out << line.dump() << "\n";
    }
    std::cout << "parsed " << parsed_count << " annotation outputs -> " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& results_path, const std::string& dataset_path,
             const std::string& mode_arg, const std::string& report_path,
             const std::string& scores_path) {
    EvalMode mode = eval_mode_from_name(mode_arg);
    EvalReport report = evaluate_run_files(results_path, dataset_path, mode);

    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + report_path);
    out << report_to_json(report) << "\n";

    if (!scores_path.empty()) {
        std::ofstream scores(scores_path, std::ios::binary | std::ios::trunc);
        if (!scores) throw IoError("cannot open output file: " + scores_path);
        for (const auto& s : report.per_question) {
            double em = mode == EvalMode::short_form ? s.em : s.rougeL.f1;
            scores << json{{"id", s.id}, {"em", em}}.dump() << "\n";
        }
    }

    std::cout << "evaluated " << report.sample_count << " questions";
    if (report.failed_count > 0) std::cout << " (" << report.failed_count << " failed lines skipped)";
    std::cout << " -> " << report_path << "\n";
    return 0;
}

std::vector<std::pair<std::string, double>> load_scores(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::pair<std::string, double>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json obj = json::parse(line);
            out.emplace_back(obj.at("id").get<std::string>(), obj.at("em").get<double>());
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

int cmd_gap(const std::string& a_path, const std::string& b_path,
            const std::string& thresholds_arg) {
    std::vector<double> thresholds;
    std::stringstream ss(thresholds_arg);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        if (piece.empty()) continue;
        try {
            thresholds.push_back(std::stod(piece));
        } catch (const std::exception&) {
            throw InvalidInput("bad threshold: " + piece);
        }
    }
    if (thresholds.empty()) throw InvalidInput("no thresholds given");

    auto rows = knowledge_gap_report(load_scores(a_path), load_scores(b_path), thresholds);
    std::printf("%-10s %-10s %-10s %-10s\n", "threshold", "frac_a", "frac_b", "overlap");
    for (const auto& row : rows)
        std::printf("%-10.4g %-10.6f %-10.6f %-10.6f\n", row.threshold, row.frac_a,
                    row.frac_b, row.overlap);
    return 0;
}

int cmd_report(const std::string& report_path) {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + report_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidInput("report is not valid JSON: " + std::string(e.what()));
    }
    std::cout << "mode: " << doc.value("mode", std::string("?")) << "\n";
    std::cout << "questions scored: " << doc.value("sample_count", 0) << "\n";
    if (doc.contains("metrics")) {
        std::cout << "metrics:\n";
        for (const auto& [key, value] : doc["metrics"].items()) {
            if (value.is_number()) {
                std::printf("  %-12s %.4f\n", key.c_str(), value.get<double>());
            } else if (value.is_object()) {
                std::printf("  %-12s p=%.4f r=%.4f f1=%.4f\n", key.c_str(),
                            value.value("precision", 0.0), value.value("recall", 0.0),
                            value.value("f1", 0.0));
            }
        }
    }
    if (doc.contains("cost")) {
        const json& cost = doc["cost"];
        std::cout << "mean tokens per question:\n";
        for (const char* key : {"reader", "proxy", "rewriter", "judge", "total_extra"})
            std::printf("  %-12s %.2f\n", key, cost.value(key, 0.0));
        std::printf("  %-12s %.4f\n", "extra_ratio", cost.value("extra_cost_ratio", 0.0));
    }
    return 0;
}

int cmd_mock_llm(const std::string& script_path, int port) {
    MockScript script = MockScript::load(script_path);
    MockLlmServer server(std::move(script));
    std::cout << "mock llm listening on port " << port << "\n";
    if (!server.serve_forever(port)) {
        std::cerr << "error: cannot bind port " << port << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"retrieval-routing engine for retrieval-augmented question answering"};
    app.require_subcommand(1);

    std::string corpus, out, dataset, index_path, config_path, mode, results, report_path;
    std::string answers, scores_out, raw_path, a_path, b_path, thresholds, script_path;
    double k1 = 1.2, b = 0.75, theta = 0.5;
    uint64_t seed = 0;
    bool no_balance = false;
    int port = 8900;

    auto* index_cmd = app.add_subcommand("index", "build a BM25 index from a corpus");
    index_cmd->add_option("--corpus", corpus, "corpus JSONL")->required();
    index_cmd->add_option("--out", out, "index file to write")->required();
    index_cmd->add_option("--k1", k1, "BM25 k1");
    index_cmd->add_option("--b", b, "BM25 b");

    auto* run_cmd = app.add_subcommand("run", "answer a dataset of questions");
    run_cmd->add_option("--dataset", dataset, "dataset JSONL")->required();
    run_cmd->add_option("--corpus-index", index_path, "index file (needed by retrieving modes)");
    run_cmd->add_option("--config", config_path, "pipeline config JSON")->required();
    run_cmd->add_option("--mode", mode, "slimplm|vanilla|cot|direct_rag|self_eval");
    run_cmd->add_option("--out", out, "results JSONL to write")->required();

    auto* labels_cmd = app.add_subcommand("labels", "judgment training labels");
    labels_cmd->require_subcommand(1);
    auto* collect_cmd = labels_cmd->add_subcommand("collect", "label samples by matching ratio");
    collect_cmd->add_option("--dataset", dataset, "dataset JSONL")->required();
    collect_cmd->add_option("--answers", answers, "heuristic answers JSONL")->required();
    collect_cmd->add_option("--theta", theta, "matching-ratio threshold");
    collect_cmd->add_option("--seed", seed, "downsampling seed");
    collect_cmd->add_flag("--no-balance", no_balance, "keep the class skew");
    collect_cmd->add_option("--out", out, "labels JSONL to write")->required();

    auto* annotate_cmd = app.add_subcommand("annotate", "rewrite-annotation workflows");
    annotate_cmd->require_subcommand(1);
    auto* prep_cmd = annotate_cmd->add_subcommand("prep", "build annotation requests");
    prep_cmd->add_option("--dataset", dataset, "dataset JSONL")->required();
    prep_cmd->add_option("--answers", answers, "heuristic answers JSONL")->required();
    prep_cmd->add_option("--out", out, "requests JSONL to write")->required();
    auto* parse_cmd = annotate_cmd->add_subcommand("parse", "parse annotator outputs");
    parse_cmd->add_option("--raw", raw_path, "annotator outputs JSONL")->required();
    parse_cmd->add_option("--out", out, "parsed claims JSONL to write")->required();

    auto* eval_cmd = app.add_subcommand("eval", "score a results file");
    eval_cmd->add_option("--results", results, "results JSONL")->required();
    eval_cmd->add_option("--dataset", dataset, "dataset JSONL")->required();
    eval_cmd->add_option("--mode", mode, "short_form|long_form")->required();
    eval_cmd->add_option("--report", report_path, "report JSON to write")->required();
    eval_cmd->add_option("--scores-out", scores_out, "per-question EM JSONL for gap analysis");

    auto* gap_cmd = app.add_subcommand("gap", "knowledge-overlap analysis of two runs");
    gap_cmd->add_option("--a", a_path, "per-question scores JSONL, larger model")->required();
    gap_cmd->add_option("--b", b_path, "per-question scores JSONL, smaller model")->required();
    gap_cmd->add_option("--thresholds", thresholds, "comma-separated EM thresholds")->required();

    auto* report_cmd = app.add_subcommand("report", "print a saved eval report");
    report_cmd->add_option("--report", report_path, "report JSON")->required();

    auto* mock_cmd = app.add_subcommand("mock-llm", "serve a scripted model for testing");
    mock_cmd->add_option("--script", script_path, "mock script JSON")->required();
    mock_cmd->add_option("--port", port, "port to listen on");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (index_cmd->parsed()) return cmd_index(corpus, out, k1, b);
        if (run_cmd->parsed()) return cmd_run(dataset, index_path, config_path, mode, out);
        if (labels_cmd->parsed())
            return cmd_labels_collect(dataset, answers, theta, seed, no_balance, out);
        if (annotate_cmd->parsed()) {
            if (prep_cmd->parsed()) return cmd_annotate_prep(dataset, answers, out);
            return cmd_annotate_parse(raw_path, out);
        }
        if (eval_cmd->parsed())
            return cmd_eval(results, dataset, mode, report_path, scores_out);
        if (gap_cmd->parsed()) return cmd_gap(a_path, b_path, thresholds);
        if (report_cmd->parsed()) return cmd_report(report_path);
        if (mock_cmd->parsed()) return cmd_mock_llm(script_path, port);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
