#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "slimrag/errors.hpp"
#include "slimrag/types.hpp"

namespace slimrag {

namespace {

using nlohmann::json;

// Calls fn(line_no, parsed) for every non-blank line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        fn(line_no, obj);
    }
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& msg) {
    throw IoError(path + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::vector<Question> load_dataset(const std::string& path) {
    std::vector<Question> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
        Question q;
        try {
            q.id = obj.at("id").get<std::string>();
            q.text = obj.at("question").get<std::string>();
            if (obj.contains("short_answers") && !obj["short_answers"].is_null()) {
                q.gold_short_answers = obj["short_answers"].get<std::vector<std::string>>();
            }
            if (obj.contains("long_answer") && !obj["long_answer"].is_null()) {
                q.gold_long_answer = obj["long_answer"].get<std::string>();
            }
        } catch (const json::exception& e) {
            fail_line(path, line_no, e.what());
        }
        if (q.text.empty()) fail_line(path, line_no, "empty question text");
        if (!seen.insert(q.id).second) fail_line(path, line_no, "duplicate question id " + q.id);
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<Document> load_corpus(const std::string& path) {
    std::vector<Document> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
        Document d;
        try {
            d.doc_id = obj.at("doc_id").get<std::string>();
            d.title = obj.value("title", std::string{});
            d.text = obj.at("text").get<std::string>();
        } catch (const json::exception& e) {
            fail_line(path, line_no, e.what());
        }
        if (d.text.empty()) fail_line(path, line_no, "empty document text");
        if (!seen.insert(d.doc_id).second) fail_line(path, line_no, "duplicate doc_id " + d.doc_id);
        out.push_back(std::move(d));
    });
    return out;
}

std::vector<RunResult> load_results(const std::string& path) {
    std::vector<RunResult> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
        RunResult r;
        try {
            r.id = obj.at("id").get<std::string>();
            if (obj.contains("error")) {
                r.failed = true;
                r.error = obj["error"].get<std::string>();
            } else {
                r.answer = obj.at("answer").get<std::string>();
                r.plan_kind = obj.at("plan_kind").get<std::string>();
                if (obj.contains("queries"))
                    r.queries = obj["queries"].get<std::vector<std::string>>();
                if (obj.contains("cost")) {
                    const json& cost = obj["cost"];
                    r.cost.reader_tokens = cost.value("reader_tokens", 0L);
                    r.cost.proxy_tokens = cost.value("proxy_tokens", 0L);
                    r.cost.rewriter_tokens = cost.value("rewriter_tokens", 0L);
                    r.cost.judge_tokens = cost.value("judge_tokens", 0L);
                    r.cost.weighted_extra_cost = cost.value("weighted_extra_cost", 0.0);
                    r.cost.extra_cost_ratio = cost.value("extra_cost_ratio", 0.0);
                }
            }
        } catch (const json::exception& e) {
            fail_line(path, line_no, e.what());
        }
        if (!r.failed && r.plan_kind != "direct" && r.plan_kind != "augmented")
            fail_line(path, line_no, "bad plan_kind " + r.plan_kind);
        if (!seen.insert(r.id).second) fail_line(path, line_no, "duplicate result id " + r.id);
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<HeuristicAnswer> load_answers(const std::string& path) {
    std::vector<HeuristicAnswer> out;
    for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
        HeuristicAnswer a;
        try {
            a.question_id = obj.at("question_id").get<std::string>();
            a.text = obj.at("answer").get<std::string>();
            a.completion_tokens = obj.value("completion_tokens", 0L);
        } catch (const json::exception& e) {
            fail_line(path, line_no, e.what());
        }
        if (a.completion_tokens < 0) fail_line(path, line_no, "negative completion_tokens");
        out.push_back(std::move(a));
    });
    return out;
}

}  // namespace slimrag
