#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slimrag/types.hpp"

namespace slimrag {

struct BM25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredDocument {
    enum class Stage { bm25, reranked };
    Document document;
    double score = 0.0;
    std::string source_query;
    Stage stage = Stage::bm25;
};

// Merged multi-query retrieval output handed to the reader.
struct ReferenceSet {
    std::vector<ScoredDocument> entries;
    // For each input query (in input order), the doc_ids it contributed.
    std::vector<std::pair<std::string, std::vector<std::string>>> per_query_provenance;
};

// Immutable BM25 inverted index over a document corpus.
//
// Tokenization is normalize_text + split on spaces. Scoring:
//   score(q,d) = sum over query tokens t of
//       IDF(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//   IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1)
// Query tokens contribute once per occurrence. Zero-score documents are
// excluded; ties break by ascending document ordinal.
class InvertedIndex {
public:
    using Posting = std::pair<std::uint32_t, std::uint32_t>;  // (ordinal, term frequency)

    static InvertedIndex build(const std::vector<Document>& corpus, BM25Params params = {});

    std::vector<ScoredDocument> search(std::string_view query, std::size_t k) const;
    std::vector<ScoredDocument> search(std::string_view query, std::size_t k,
                                       const BM25Params& params) const;

    // Single-file binary form with a versioned "SLIMIDX1" header.
    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

    std::size_t doc_count() const { return docs_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const BM25Params& params() const { return params_; }
    const Document& doc(std::size_t ordinal) const { return docs_.at(ordinal); }
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }

private:
    InvertedIndex() = default;

    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<Document> docs_;
    double avg_doc_length_ = 0.0;
    BM25Params params_;
};

// Round-robin interleave of per-query result lists (input order), skipping
// doc_ids already taken, until the budget is reached.
ReferenceSet merge_references(
    const std::vector<std::pair<std::string, std::vector<ScoredDocument>>>& per_query,
    std::size_t budget);

}  // namespace slimrag
