#include "slimrag/index.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "slimrag/errors.hpp"
#include "slimrag/text.hpp"

using namespace slimrag;

namespace {

std::vector<Document> fruit_corpus() {
    return {{"d1", "", "apple banana"}, {"d2", "", "apple apple"}, {"d3", "", "cherry"}};
}

std::vector<std::string> ids(const std::vector<ScoredDocument>& docs) {
    std::vector<std::string> out;
    for (const auto& d : docs) out.push_back(d.document.doc_id);
    return out;
}

ScoredDocument make_scored(const std::string& id, double score) {
    return {{id, "", "text"}, score, "q", ScoredDocument::Stage::bm25};
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("build computes corpus statistics") {
    auto index = InvertedIndex::build(fruit_corpus());
    CHECK(index.doc_count() == 3);
    CHECK(index.avg_doc_length() == doctest::Approx(5.0 / 3.0));
    CHECK(index.params().k1 == doctest::Approx(1.2));
    CHECK(index.params().b == doctest::Approx(0.75));
    CHECK(index.postings().at("apple").size() == 2);
    CHECK(index.doc_lengths() == std::vector<std::uint32_t>{2, 2, 1});
}

TEST_CASE("build rejects bad input") {
    CHECK_THROWS_AS(InvertedIndex::build({}), BuildError);
    CHECK_THROWS_AS(InvertedIndex::build({{"d1", "", "a"}, {"d1", "", "b"}}), BuildError);
    CHECK_THROWS_AS(InvertedIndex::build(fruit_corpus(), {0.0, 0.75}), BuildError);
    CHECK_THROWS_AS(InvertedIndex::build(fruit_corpus(), {1.2, 1.5}), BuildError);
}

TEST_CASE("search ranks by the BM25 formula") {
    auto index = InvertedIndex::build(fruit_corpus());
    auto hits = index.search("apple", 10);
    REQUIRE(ids(hits) == std::vector<std::string>{"d2", "d1"});

    const double idf = std::log((3.0 - 2.0 + 0.5) / (2.0 + 0.5) + 1.0);
    const double avgdl = 5.0 / 3.0;
    const double norm2 = 1.0 - 0.75 + 0.75 * 2.0 / avgdl;
    const double expect_d2 = idf * 2.0 * 2.2 / (2.0 + 1.2 * norm2);
    const double expect_d1 = idf * 1.0 * 2.2 / (1.0 + 1.2 * norm2);
    CHECK(hits[0].score == doctest::Approx(expect_d2).epsilon(1e-12));
    CHECK(hits[1].score == doctest::Approx(expect_d1).epsilon(1e-12));
    CHECK(hits[0].source_query == "apple");
    CHECK(hits[0].stage == ScoredDocument::Stage::bm25);
}

TEST_CASE("query tokens contribute once per occurrence") {
    auto index = InvertedIndex::build(fruit_corpus());
    auto once = index.search("apple", 10);
    auto twice = index.search("apple apple", 10);
    REQUIRE(ids(once) == ids(twice));
    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(twice[i].score == doctest::Approx(2.0 * once[i].score).epsilon(1e-12));
}

TEST_CASE("zero-score documents never appear") {
    auto index = InvertedIndex::build(fruit_corpus());
    CHECK(ids(index.search("cherry", 10)) == std::vector<std::string>{"d3"});
    CHECK(index.search("durian", 10).empty());
    CHECK(index.search("", 10).empty());
    CHECK(index.search("?!", 10).empty());
}

TEST_CASE("k limits the result count") {
    auto index = InvertedIndex::build(fruit_corpus());
    CHECK(index.search("apple", 0).empty());
    CHECK(ids(index.search("apple", 1)) == std::vector<std::string>{"d2"});
    CHECK(index.search("apple banana cherry", 2).size() == 2);
}

TEST_CASE("exact ties break by document ordinal") {
    std::vector<Document> corpus = {{"t1", "", "kiwi"}, {"t2", "", "kiwi"}, {"t3", "", "kiwi"}};
    auto index = InvertedIndex::build(corpus);
    CHECK(ids(index.search("kiwi", 10)) == std::vector<std::string>{"t1", "t2", "t3"});
}

TEST_CASE("search is deterministic across rebuilds") {
    auto a = InvertedIndex::build(fruit_corpus()).search("apple banana", 10);
    auto b = InvertedIndex::build(fruit_corpus()).search("apple banana", 10);
    REQUIRE(ids(a) == ids(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].score == b[i].score);
}

TEST_CASE("search agrees with a brute-force scorer") {
    std::mt19937 gen(41);
    const std::vector<std::string> vocab = {"ant", "bee", "cat", "dog", "elk"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::uniform_int_distribution<int> len(1, 6);

    std::vector<Document> corpus;
    for (int i = 0; i < 8; ++i) {
        std::string text;
        int n = len(gen);
        for (int j = 0; j < n; ++j) text += (j ? " " : "") + vocab[pick(gen)];
        corpus.push_back({"doc" + std::to_string(i), "", text});
    }
    auto index = InvertedIndex::build(corpus);

    std::vector<std::vector<std::string>> doc_tokens;
    double avgdl = 0.0;
    for (const auto& d : corpus) {
        doc_tokens.push_back(tokenize(d.text));
        avgdl += static_cast<double>(doc_tokens.back().size());
    }
    avgdl /= static_cast<double>(corpus.size());

    for (int qi = 0; qi < 20; ++qi) {
        std::string query = vocab[pick(gen)] + " " + vocab[pick(gen)];
        auto tokens = tokenize(query);

        std::vector<std::pair<double, std::size_t>> expected;
        for (std::size_t d = 0; d < corpus.size(); ++d) {
            double score = 0.0;
            for (const auto& t : tokens) {
                double df = 0.0;
                for (const auto& dt : doc_tokens)
                    if (std::count(dt.begin(), dt.end(), t) > 0) df += 1.0;
                if (df == 0.0) continue;
                double tf = static_cast<double>(
                    std::count(doc_tokens[d].begin(), doc_tokens[d].end(), t));
                if (tf == 0.0) continue;
                double idf = std::log((corpus.size() - df + 0.5) / (df + 0.5) + 1.0);
                double norm = 1.0 - 0.75 + 0.75 * doc_tokens[d].size() / avgdl;
                score += idf * tf * 2.2 / (tf + 1.2 * norm);
            }
            if (score > 0.0) expected.emplace_back(score, d);
        }
        std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        auto hits = index.search(query, corpus.size());
        REQUIRE(hits.size() == expected.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].document.doc_id == corpus[expected[i].second].doc_id);
            CHECK(hits[i].score == doctest::Approx(expected[i].first).epsilon(1e-9));
        }
    }
}

TEST_CASE("save and load round-trip") {
    auto index = InvertedIndex::build(fruit_corpus());
    auto path = temp_path("slimrag_index_roundtrip.idx");
    index.save(path.string());
    auto loaded = InvertedIndex::load(path.string());

    CHECK(loaded.doc_count() == index.doc_count());
    CHECK(loaded.avg_doc_length() == doctest::Approx(index.avg_doc_length()));
    CHECK(loaded.params().k1 == index.params().k1);
    CHECK(loaded.postings() == index.postings());
    CHECK(loaded.doc_lengths() == index.doc_lengths());

    auto a = index.search("apple banana", 10);
    auto b = loaded.search("apple banana", 10);
    REQUIRE(ids(a) == ids(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].score == b[i].score);
    std::filesystem::remove(path);
}

TEST_CASE("load rejects foreign files") {
    auto path = temp_path("slimrag_index_bogus.idx");
    {
        std::ofstream out(path, std::ios::binary);
        out << "definitely not an index";
    }
    CHECK_THROWS_AS(InvertedIndex::load(path.string()), IoError);
    CHECK_THROWS_AS(InvertedIndex::load("/nonexistent/nowhere.idx"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("merge_references interleaves queries round-robin") {
    std::vector<std::pair<std::string, std::vector<ScoredDocument>>> per_query = {
        {"q1", {make_scored("a", 2.0), make_scored("b", 1.0)}},
        {"q2", {make_scored("c", 2.0), make_scored("d", 1.0)}},
    };
    auto merged = merge_references(per_query, 3);
    CHECK(ids(merged.entries) == std::vector<std::string>{"a", "c", "b"});
    REQUIRE(merged.per_query_provenance.size() == 2);
    CHECK(merged.per_query_provenance[0].first == "q1");
    CHECK(merged.per_query_provenance[0].second == std::vector<std::string>{"a", "b"});
    CHECK(merged.per_query_provenance[1].second == std::vector<std::string>{"c"});
}

TEST_CASE("merge_references skips duplicates and respects the budget") {
    std::vector<std::pair<std::string, std::vector<ScoredDocument>>> per_query = {
        {"q1", {make_scored("a", 2.0), make_scored("b", 1.0)}},
        {"q2", {make_scored("a", 2.0), make_scored("c", 1.0)}},
    };
    auto merged = merge_references(per_query, 10);
    CHECK(ids(merged.entries) == std::vector<std::string>{"a", "c", "b"});
    CHECK(merged.per_query_provenance[1].second == std::vector<std::string>{"c"});

    auto capped = merge_references(per_query, 1);
    CHECK(ids(capped.entries) == std::vector<std::string>{"a"});

    auto empty = merge_references({}, 5);
    CHECK(empty.entries.empty());
    CHECK(empty.per_query_provenance.empty());

    std::vector<std::pair<std::string, std::vector<ScoredDocument>>> with_empty = {
        {"q1", {}},
        {"q2", {make_scored("x", 1.0)}},
    };
    auto partial = merge_references(with_empty, 5);
    CHECK(ids(partial.entries) == std::vector<std::string>{"x"});
    CHECK(partial.per_query_provenance[0].second.empty());
}
