#include "slimrag/judgment.hpp"

#include <doctest.h>

#include <string>
#include <utility>
#include <vector>

#include "slimrag/errors.hpp"
#include "slimrag/mock_llm.hpp"

using namespace slimrag;

namespace {

std::pair<Question, HeuristicAnswer> sample(const std::string& id, const std::string& gold,
                                            const std::string& answer) {
    Question q;
    q.id = id;
    q.text = "question " + id;
    q.gold_short_answers = {gold};
    HeuristicAnswer a;
    a.question_id = id;
    a.text = answer;
    return {q, a};
}

}  // namespace

TEST_CASE("parse_verdict extracts the first judgment") {
    auto v = parse_verdict("Known (True)");
    CHECK(v.known);
    CHECK_FALSE(v.fallback_applied);

    v = parse_verdict("  known( false )");
    CHECK_FALSE(v.known);
    CHECK_FALSE(v.fallback_applied);

    v = parse_verdict("I believe this is Known (TRUE), mostly.");
    CHECK(v.known);

    v = parse_verdict("Known (False) Known (True)");
    CHECK_FALSE(v.known);
}

TEST_CASE("parse_verdict falls back to retrieval") {
    auto v = parse_verdict("no structured output here");
    CHECK_FALSE(v.known);
    CHECK(v.fallback_applied);
    CHECK(v.raw_output == "no structured output here");

    CHECK(parse_verdict("unknown").fallback_applied);
    CHECK(parse_verdict("Known (maybe)").fallback_applied);
    CHECK(parse_verdict("Known True").fallback_applied);
    CHECK(parse_verdict("").fallback_applied);
}

TEST_CASE("label_from_ratio uses a strict threshold") {
    CHECK(label_from_ratio(0.6, 0.5) == Label::known_true);
    CHECK(label_from_ratio(0.5, 0.5) == Label::known_false);
    CHECK(label_from_ratio(0.0, 0.0) == Label::known_false);
    CHECK(label_from_ratio(0.1, 0.0) == Label::known_true);
    CHECK(label_from_ratio(1.0, 1.0) == Label::known_false);
    CHECK_THROWS_AS(label_from_ratio(1.5, 0.5), InvalidInput);
    CHECK_THROWS_AS(label_from_ratio(0.5, -0.1), InvalidInput);
    CHECK(std::string(label_name(Label::known_true)) == "known_true");
}

TEST_CASE("collect_labels labels and balances") {
    std::vector<std::pair<Question, HeuristicAnswer>> samples;
    for (int i = 0; i < 8; ++i)
        samples.push_back(sample("u" + std::to_string(i), "stockholm", "no idea"));
    samples.push_back(sample("k0", "stockholm", "it is stockholm"));
    samples.push_back(sample("k1", "stockholm", "stockholm of course"));

    LabelConfig config;
    config.seed = 17;
    auto out = collect_labels(samples, config);
    REQUIRE(out.samples.size() == 10);
    CHECK(out.errors.empty());

    std::size_t kept_true = 0, kept_false = 0;
    for (const auto& s : out.samples) {
        if (!s.kept) continue;
        (s.label == Label::known_true ? kept_true : kept_false)++;
    }
    CHECK(kept_true == 2);
    CHECK(kept_false == 2);
    for (const auto& s : out.samples)
        if (s.label == Label::known_true) CHECK(s.kept);

    auto again = collect_labels(samples, config);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        CHECK(out.samples[i].kept == again.samples[i].kept);
}

TEST_CASE("collect_labels keeps balanced input untouched") {
    std::vector<std::pair<Question, HeuristicAnswer>> samples = {
        sample("a", "paris", "paris"),
        sample("b", "paris", "paris yes"),
        sample("c", "paris", "london"),
        sample("d", "paris", "rome"),
    };
    auto out = collect_labels(samples, {});
    REQUIRE(out.samples.size() == 4);
    for (const auto& s : out.samples) CHECK(s.kept);
    CHECK(out.samples[0].label == Label::known_true);
    CHECK(out.samples[2].label == Label::known_false);
    CHECK(out.samples[0].ratio == 1.0);
    CHECK(out.samples[2].ratio == 0.0);
}

TEST_CASE("collect_labels rejects unusable samples") {
    auto good = sample("ok", "paris", "paris");
    auto no_golds = sample("bad1", "x", "y");
    no_golds.first.gold_short_answers.clear();
    auto empty_golds = sample("bad2", "!!!", "y");

    auto out = collect_labels({good, no_golds, empty_golds}, {});
    CHECK(out.samples.size() == 1);
    REQUIRE(out.errors.size() == 2);
    CHECK(out.errors[0].find("bad1") != std::string::npos);
    CHECK(out.errors[1].find("bad2") != std::string::npos);
}

TEST_CASE("collect_labels can skip balancing") {
    std::vector<std::pair<Question, HeuristicAnswer>> samples;
    for (int i = 0; i < 5; ++i)
        samples.push_back(sample("u" + std::to_string(i), "oslo", "no"));
    samples.push_back(sample("k", "oslo", "oslo"));

    LabelConfig config;
    config.balance = false;
    auto out = collect_labels(samples, config);
    for (const auto& s : out.samples) CHECK(s.kept);
}

TEST_CASE("judge renders the prompt and parses the verdict") {
    MockScript script;
    script.rules.push_back({"Retrieval Necessity Judgment Output:", "Known (True)"});
    MockLlmServer server(std::move(script));
    server.start_any();

    Gateway gateway;
    ModelEndpoint ep;
    ep.role = Role::judge;
    ep.base_url = server.base_url();
    ep.model_name = "mock-judge";

    auto outcome = judge(gateway, ep, "Is water wet?", "Water is wet.");
    CHECK(outcome.verdict.known);
    CHECK_FALSE(outcome.verdict.fallback_applied);
    CHECK(outcome.exchange.response_text == "Known (True)");
    CHECK(outcome.exchange.temperature == 0.0);
    REQUIRE(outcome.exchange.messages.size() == 1);
    CHECK(outcome.exchange.messages[0].content.find("Is water wet?") != std::string::npos);

    CHECK_THROWS_AS(judge(gateway, ep, "", "answer"), InvalidInput);
    CHECK_THROWS_AS(judge(gateway, ep, "question", ""), InvalidInput);
}
