#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slimrag/gateway.hpp"
#include "slimrag/index.hpp"

namespace slimrag {

// Reorders first-stage candidates by cosine similarity between the embedded
// query ("query: " prefix) and each passage ("passage: {title} {text}"),
// keeping the top_k best. Ties keep the incoming BM25 order. When the
// embedder fails the BM25 order is returned instead, truncated to top_k,
// and a note is appended to warnings.
std::vector<ScoredDocument> rerank(Gateway& gateway, const ModelEndpoint& embedder,
                                   const std::string& query,
                                   const std::vector<ScoredDocument>& candidates,
                                   std::size_t top_k,
                                   std::vector<std::string>* warnings = nullptr);

}  // namespace slimrag
