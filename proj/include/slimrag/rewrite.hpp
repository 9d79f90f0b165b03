#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slimrag/gateway.hpp"
#include "slimrag/judgment.hpp"

namespace slimrag {

// One decomposed claim and the search query verifying it. needs_search is
// only present when parsed from the annotation grammar.
struct ClaimQuery {
    std::string claim;
    std::string query;
    std::optional<bool> needs_search;
};

bool operator==(const ClaimQuery& a, const ClaimQuery& b);

struct RewriteResult {
    std::vector<std::string> question_queries;
    std::vector<ClaimQuery> claim_queries;
    std::string raw_output;
};

struct ParsedRewrite {
    std::vector<std::string> question_queries;
    std::vector<ClaimQuery> claim_queries;
    std::vector<std::string> warnings;  // one entry per dropped or suspicious unit
};

// Parses the "<Claim> text <Query> text" token grammar. A "<Query>" with no
// pending claim is a question-level query; units with an empty side are
// dropped with a warning. Throws ParseError when nothing can be extracted.
ParsedRewrite parse_rewrite_output(const std::string& raw);

// Inverse of parse_rewrite_output for well-formed inputs: question queries
// first as bare "<Query>" units, then claim pairs.
std::string format_rewrite_output(const std::vector<std::string>& question_queries,
                                  const std::vector<ClaimQuery>& claim_queries);

struct RewriteOutcome {
    RewriteResult result;
    ChatExchange exchange;
    std::vector<std::string> warnings;
};

// Renders the rewrite prompt, calls the rewriter at temperature 0, parses.
// The original question is appended when the model produced no
// question-level query. Unparseable output becomes a RewriteError carrying
// the raw response.
RewriteOutcome rewrite(Gateway& gateway, const ModelEndpoint& rewriter,
                       const std::string& question, const std::string& heuristic_answer);

using JudgeFn = std::function<Verdict(const std::string& question_like,
                                      const std::string& answer_like)>;

struct FilterOutcome {
    std::vector<std::string> kept_queries;  // subsequence of the input queries
    std::vector<std::string> warnings;
};

// Re-judges each (claim, query) pair with the query in the question slot and
// the claim in the heuristic-answer slot; a query is kept only when the
// judge answers Known(False). A failed judge call keeps the query
// (retrieve on uncertainty) and records a warning.
FilterOutcome filter_claim_queries(const std::vector<ClaimQuery>& pairs,
                                   const JudgeFn& judge_fn);

// Full annotation prompt for obtaining rewrite training data from an
// external annotator model. Pure string building; no model call.
std::string build_annotation_request(const std::string& question,
                                     const std::string& heuristic_answer);

struct AnnotationParse {
    std::vector<ClaimQuery> entries;  // needs_search always set
    std::vector<std::string> warnings;
};

// Parses "<Claim(...)> <Search(True/False)> <Query(...)>" triples. Claim and
// query texts may contain balanced parentheses. Search(False) entries may
// omit the query. Throws ParseError when no triple is found.
AnnotationParse parse_annotation_output(const std::string& raw);

}  // namespace slimrag
