#include "slimrag/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "slimrag/errors.hpp"
#include "slimrag/mock_llm.hpp"

using namespace slimrag;

namespace {

const char* kFixtures = FIXTURES_DIR;

Verdict verdict_of(bool known) {
    Verdict v;
    v.known = known;
    return v;
}

TaggedExchange exchange(Role role, long prompt, long completion, double weight) {
    TaggedExchange t;
    t.role = role;
    t.cost_weight = weight;
    t.exchange.prompt_tokens = prompt;
    t.exchange.completion_tokens = completion;
    return t;
}

ReferenceSet two_references() {
    ReferenceSet refs;
    refs.entries.push_back({{"d1", "First", "alpha text"}, 1.0, "q", {}});
    refs.entries.push_back({{"d2", "Second", "line one\nline two"}, 0.5, "q", {}});
    return refs;
}

PipelineConfig mock_config(Mode mode, const std::string& base_url) {
    PipelineConfig config;
    config.mode = mode;
    for (Role role : {Role::proxy, Role::judge, Role::rewriter, Role::reader, Role::embedder}) {
        ModelEndpoint ep;
        ep.role = role;
        ep.base_url = base_url;
        ep.model_name = std::string("mock-") + role_name(role);
        ep.cost_weight = role == Role::reader ? 1.0 : 0.1;
        config.endpoints[role] = ep;
    }
    return config;
}

std::shared_ptr<const InvertedIndex> fixture_index() {
    auto corpus = load_corpus(std::string(kFixtures) + "/corpus12.jsonl");
    return std::make_shared<InvertedIndex>(InvertedIndex::build(corpus));
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

Question fixture_question(const std::vector<Question>& dataset, const std::string& id) {
    for (const auto& q : dataset)
        if (q.id == id) return q;
    FAIL("missing fixture question " << id);
    return {};
}

}  // namespace

TEST_CASE("route answers known questions directly") {
    auto plan = route(verdict_of(true), {"s1"}, {"x1"}, "the question");
    CHECK(plan.kind == GenerationPlan::Kind::direct);
    CHECK(plan.queries_used.empty());
    CHECK(plan.references.entries.empty());
    CHECK(std::string(plan_kind_name(plan.kind)) == "direct");
}

TEST_CASE("route gathers queries for unknown questions") {
    auto plan = route(verdict_of(false), {"s1"}, {"x1"}, "the question");
    CHECK(plan.kind == GenerationPlan::Kind::augmented);
    CHECK(plan.queries_used == std::vector<std::string>{"x1", "s1"});

    plan = route(verdict_of(false), {}, {}, "the question");
    CHECK(plan.queries_used == std::vector<std::string>{"the question"});
}

TEST_CASE("assemble_context numbers entries and flattens newlines") {
    std::string context = assemble_context(two_references());
    CHECK(context == "[1] First: alpha text\n[2] Second: line one line two");
    CHECK_THROWS_AS(assemble_context(ReferenceSet{}), InvalidInput);
}

TEST_CASE("account_cost splits token spend by component") {
    PipelineTrace trace;
    trace.exchanges.push_back(exchange(Role::reader, 150, 50, 1.0));
    trace.exchanges.push_back(exchange(Role::proxy, 20, 4, 0.1));
    trace.exchanges.push_back(exchange(Role::rewriter, 30, 5, 0.1));
    trace.exchanges.push_back(exchange(Role::judge, 2, 1, 0.1));

    auto ledger = account_cost(trace);
    CHECK(ledger.reader_tokens == 200);
    CHECK(ledger.proxy_tokens == 24);
    CHECK(ledger.rewriter_tokens == 35);
    CHECK(ledger.judge_tokens == 3);
    CHECK(ledger.weighted_extra_cost == doctest::Approx(6.2).epsilon(1e-9));
    CHECK(ledger.extra_cost_ratio == doctest::Approx(0.031).epsilon(1e-9));
}

TEST_CASE("account_cost edge cases") {
    PipelineTrace reader_only;
    reader_only.exchanges.push_back(exchange(Role::reader, 10, 10, 1.0));
    auto ledger = account_cost(reader_only);
    CHECK(ledger.weighted_extra_cost == 0.0);
    CHECK(ledger.extra_cost_ratio == 0.0);

    PipelineTrace unweighted;
    unweighted.exchanges.push_back(exchange(Role::reader, 100, 0, 1.0));
    unweighted.exchanges.push_back(exchange(Role::proxy, 10, 0, 1.0));
    unweighted.exchanges.push_back(exchange(Role::embedder, 999, 999, 1.0));
    ledger = account_cost(unweighted);
    CHECK(ledger.weighted_extra_cost == doctest::Approx(10.0));
    CHECK(ledger.proxy_tokens == 10);

    PipelineTrace no_reader;
    no_reader.exchanges.push_back(exchange(Role::proxy, 10, 0, 1.0));
    CHECK_THROWS_AS(account_cost(no_reader), InvalidInput);
}

TEST_CASE("load_pipeline_config reads every field") {
    auto path = temp_file("slimrag_config_ok.json");
    {
        std::ofstream out(path);
        out << R"({
            "mode": "slimplm",
            "prompt_style": "long_form",
            "reference_budget": 7,
            "bm25_top_k": 50,
            "rerank_top_k": 3,
            "concurrency": 2,
            "reader_max_tokens": 512,
            "proxy_max_tokens": 128,
            "endpoints": {
                "reader": {"base_url": "http://localhost:9", "model": "big"},
                "proxy": {"base_url": "http://localhost:9", "model": "small",
                          "api_key_env": "PROXY_KEY", "cost_weight": 0.1}
            }
        })";
    }
    auto config = load_pipeline_config(path.string());
    CHECK(config.mode == Mode::slimplm);
    CHECK(config.prompt_style == PromptStyle::long_form);
    CHECK(config.reference_budget == 7);
    CHECK(config.bm25_top_k == 50);
    CHECK(config.rerank_top_k == 3);
    CHECK(config.concurrency == 2);
    CHECK(config.reader_max_tokens == 512);
    CHECK(config.proxy_max_tokens == 128);
    CHECK(config.endpoints.at(Role::proxy).api_key_env == "PROXY_KEY");
    CHECK(config.endpoints.at(Role::proxy).cost_weight == doctest::Approx(0.1));
    CHECK(config.endpoints.at(Role::reader).cost_weight == doctest::Approx(1.0));
    std::filesystem::remove(path);
}

TEST_CASE("load_pipeline_config rejects malformed files") {
    auto path = temp_file("slimrag_config_bad.json");
    auto write_and_expect = [&](const std::string& body) {
        std::ofstream out(path, std::ios::trunc);
        out << body;
        out.close();
        CHECK_THROWS_AS(load_pipeline_config(path.string()), InvalidInput);
    };
    write_and_expect("not json");
    write_and_expect(R"({"modes": "slimplm"})");
    write_and_expect(R"({"mode": "psychic"})");
    write_and_expect(R"({"endpoints": {"oracle": {"base_url": "x", "model": "y"}}})");
    write_and_expect(R"({"endpoints": {"reader": {"base_url": "x"}}})");
    write_and_expect(R"({"endpoints": {"reader": {"base_url": "x", "model": "y", "cost_weight": -1}}})");
    write_and_expect(R"({"reference_budget": 0})");
    CHECK_THROWS_AS(load_pipeline_config("/nonexistent/config.json"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("pipeline construction checks endpoints and index") {
    Gateway gateway;
    auto url = std::string("http://127.0.0.1:9");

    auto incomplete = mock_config(Mode::slimplm, url);
    incomplete.endpoints.erase(Role::proxy);
    CHECK_THROWS_AS(Pipeline(incomplete, gateway, fixture_index()), InvalidInput);

    CHECK_THROWS_AS(Pipeline(mock_config(Mode::slimplm, url), gateway, nullptr), InvalidInput);
    CHECK_THROWS_AS(Pipeline(mock_config(Mode::direct_rag, url), gateway, nullptr), InvalidInput);

    auto reader_only = mock_config(Mode::vanilla, url);
    reader_only.endpoints.erase(Role::proxy);
    reader_only.endpoints.erase(Role::judge);
    reader_only.endpoints.erase(Role::rewriter);
    reader_only.endpoints.erase(Role::embedder);
    Pipeline ok(reader_only, gateway, nullptr);
    CHECK(ok.config().mode == Mode::vanilla);

    reader_only.endpoints.erase(Role::reader);
    CHECK_THROWS_AS(Pipeline(reader_only, gateway, nullptr), InvalidInput);
}

TEST_CASE("vanilla and cot modes make exactly one reader call") {
    MockScript script;
    script.rules.push_back({"step-by-step", "chain of thought answer"});
    script.default_response = "plain answer";
    MockLlmServer server(std::move(script));
    server.start_any();
    Gateway gateway;

    Question q;
    q.id = "v1";
    q.text = "Any question at all?";

    Pipeline vanilla(mock_config(Mode::vanilla, server.base_url()), gateway);
    auto trace = vanilla.run_question(q);
    REQUIRE(trace.exchanges.size() == 1);
    CHECK(trace.exchanges[0].role == Role::reader);
    CHECK(trace.exchanges[0].exchange.messages[0].content == q.text);
    CHECK(trace.final_answer == "plain answer");
    CHECK(trace.plan.kind == GenerationPlan::Kind::direct);

    Pipeline cot(mock_config(Mode::cot, server.base_url()), gateway);
    trace = cot.run_question(q);
    REQUIRE(trace.exchanges.size() == 1);
    CHECK(trace.final_answer == "chain of thought answer");

    Question empty;
    empty.id = "v2";
    CHECK_THROWS_AS(vanilla.run_question(empty), InvalidInput);
}

TEST_CASE("direct_rag always retrieves with the raw question") {
    MockScript script;
    script.rules.push_back({"question: (((", "answer from references"});
    script.default_response = "no references answer";
    MockLlmServer server(std::move(script));
    server.start_any();
    Gateway gateway;

    Pipeline pipeline(mock_config(Mode::direct_rag, server.base_url()), gateway,
                      fixture_index());
    Question q;
    q.id = "r1";
    q.text = "Which river is the longest in the world?";
    auto trace = pipeline.run_question(q);

    CHECK(trace.plan.kind == GenerationPlan::Kind::augmented);
    CHECK(trace.plan.queries_used == std::vector<std::string>{q.text});
    CHECK_FALSE(trace.plan.references.entries.empty());
    REQUIRE(trace.exchanges.size() == 1);
    CHECK(trace.exchanges[0].role == Role::reader);
    CHECK(trace.final_answer == "answer from references");
    CHECK(trace.exchanges[0].exchange.messages[0].content.find("[[[") != std::string::npos);
}

TEST_CASE("self_eval gates retrieval on the reader's own confidence") {
    MockScript script;
    script.rules.push_back(
        {"Question: What is the capital of France?\nAnswer:", "Yes"});
    script.rules.push_back(
        {"Question: Which river is the longest in the world?\nAnswer:", "No"});
    script.rules.push_back({"question: (((", "retrieved answer"});
    script.default_response = "direct answer";
    MockLlmServer server(std::move(script));
    server.start_any();
    Gateway gateway;

    Pipeline pipeline(mock_config(Mode::self_eval, server.base_url()), gateway,
                      fixture_index());

    Question known;
    known.id = "s1";
    known.text = "What is the capital of France?";
    auto trace = pipeline.run_question(known);
    REQUIRE(trace.exchanges.size() == 2);
    CHECK(trace.exchanges[0].role == Role::judge);
    CHECK(trace.exchanges[1].role == Role::reader);
    CHECK(trace.plan.kind == GenerationPlan::Kind::direct);
    CHECK(trace.final_answer == "direct answer");
    REQUIRE(trace.verdict.has_value());
    CHECK(trace.verdict->known);

    Question unknown;
    unknown.id = "s2";
    unknown.text = "Which river is the longest in the world?";
    trace = pipeline.run_question(unknown);
    CHECK(trace.plan.kind == GenerationPlan::Kind::augmented);
    CHECK(trace.final_answer == "retrieved answer");
    CHECK_FALSE(trace.plan.references.entries.empty());

    std::size_t reader_calls = 0;
    for (const auto& e : trace.exchanges)
        if (e.role == Role::reader) ++reader_calls;
    CHECK(reader_calls == 1);
}

TEST_CASE("slimplm run follows the scripted fixture") {
    MockLlmServer server(MockScript::load(std::string(kFixtures) + "/mockscript.json"));
    server.start_any();
    Gateway gateway;

    auto dataset = load_dataset(std::string(kFixtures) + "/dataset10.jsonl");
    Pipeline pipeline(mock_config(Mode::slimplm, server.base_url()), gateway, fixture_index());

    auto known = pipeline.run_question(fixture_question(dataset, "q01"));
    REQUIRE(known.verdict.has_value());
    CHECK(known.verdict->known);
    CHECK(known.plan.kind == GenerationPlan::Kind::direct);
    CHECK(known.plan.queries_used.empty());
    CHECK(known.heuristic_answer == "The capital of France is Paris.");
    CHECK(known.final_answer == "The capital of France is Paris.");
    REQUIRE(known.exchanges.size() == 4);
    CHECK(known.exchanges[0].role == Role::proxy);
    CHECK(known.exchanges[3].role == Role::reader);

    auto unknown = pipeline.run_question(fixture_question(dataset, "q06"));
    REQUIRE(unknown.verdict.has_value());
    CHECK_FALSE(unknown.verdict->known);
    CHECK(unknown.plan.kind == GenerationPlan::Kind::augmented);
    CHECK(unknown.plan.queries_used ==
          std::vector<std::string>{"who painted the Mona Lisa"});
    CHECK(unknown.surviving_queries.empty());
    CHECK_FALSE(unknown.plan.references.entries.empty());
    CHECK(unknown.final_answer == "The Mona Lisa was painted by Leonardo da Vinci.");
}

TEST_CASE("run_dataset writes ordered result lines and tolerates failures") {
    MockLlmServer server(MockScript::load(std::string(kFixtures) + "/mockscript.json"));
    server.start_any();
    Gateway gateway;

    auto dataset = load_dataset(std::string(kFixtures) + "/dataset10.jsonl");
    Question broken;
    broken.id = "qxx";
    std::vector<Question> subset = {fixture_question(dataset, "q01"), broken,
                                    fixture_question(dataset, "q06")};

    Pipeline pipeline(mock_config(Mode::slimplm, server.base_url()), gateway, fixture_index());
    auto out_path = temp_file("slimrag_run_results.jsonl");
    std::vector<PipelineTrace> traces;
    auto summary = pipeline.run_dataset(subset, out_path.string(), &traces);

    CHECK(summary.total == 3);
    CHECK(summary.succeeded == 2);
    CHECK(summary.failed == 1);
    CHECK_FALSE(summary.run_failed);
    REQUIRE(traces.size() == 3);

    auto results = load_results(out_path.string());
    REQUIRE(results.size() == 3);
    CHECK(results[0].id == "q01");
    CHECK(results[0].answer == "The capital of France is Paris.");
    CHECK(results[0].plan_kind == "direct");
    CHECK(results[0].cost.reader_tokens > 0);
    CHECK(results[1].id == "qxx");
    CHECK(results[1].failed);
    CHECK(results[2].id == "q06");
    CHECK(results[2].plan_kind == "augmented");
    CHECK(results[2].queries == std::vector<std::string>{"who painted the Mona Lisa"});
    std::filesystem::remove(out_path);

    CHECK_THROWS_AS(pipeline.run_dataset({}, out_path.string()), InvalidInput);
}

TEST_CASE("run_dataset flags a mostly-failed run") {
    MockLlmServer server(MockScript::load(std::string(kFixtures) + "/mockscript.json"));
    server.start_any();
    Gateway gateway;

    auto dataset = load_dataset(std::string(kFixtures) + "/dataset10.jsonl");
    Question bad1, bad2;
    bad1.id = "b1";
    bad2.id = "b2";
    std::vector<Question> subset = {bad1, bad2, fixture_question(dataset, "q01")};

    Pipeline pipeline(mock_config(Mode::slimplm, server.base_url()), gateway, fixture_index());
    auto out_path = temp_file("slimrag_run_failures.jsonl");
    auto summary = pipeline.run_dataset(subset, out_path.string());
    CHECK(summary.failed == 2);
    CHECK(summary.run_failed);
    std::filesystem::remove(out_path);
}

TEST_CASE("mode and style names round-trip") {
    CHECK(mode_from_name("slimplm") == Mode::slimplm);
    CHECK(mode_from_name("direct_rag") == Mode::direct_rag);
    CHECK_THROWS_AS(mode_from_name("zen"), InvalidInput);
    CHECK(std::string(mode_name(Mode::cot)) == "cot");
    CHECK(prompt_style_from_name("short_form") == PromptStyle::short_form);
    CHECK_THROWS_AS(prompt_style_from_name("sonnet"), InvalidInput);
}
