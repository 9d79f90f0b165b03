#include "slimrag/rerank.hpp"

#include <algorithm>
#include <numeric>

#include "slimrag/errors.hpp"
#include "slimrag/vecmath.hpp"

namespace slimrag {

std::vector<ScoredDocument> rerank(Gateway& gateway, const ModelEndpoint& embedder,
                                   const std::string& query,
                                   const std::vector<ScoredDocument>& candidates,
                                   std::size_t top_k,
                                   std::vector<std::string>* warnings) {
    if (candidates.empty()) throw InvalidInput("rerank called with no candidates");
    if (top_k == 0) throw InvalidInput("rerank top_k must be positive");

    std::vector<std::string> inputs;
    inputs.reserve(candidates.size() + 1);
    inputs.push_back("query: " + query);
    for (const auto& c : candidates)
        inputs.push_back("passage: " + c.document.title + " " + c.document.text);

    std::vector<std::vector<float>> vecs;
    try {
        vecs = gateway.embed(embedder, inputs);
    } catch (const std::exception& e) {
        if (warnings)
            warnings->push_back(std::string("rerank fell back to lexical order: ") + e.what());
        std::vector<ScoredDocument> out(candidates.begin(),
                                        candidates.begin() +
                                            std::min(top_k, candidates.size()));
        return out;
    }

    const auto& qvec = vecs[0];
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sims(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        sims[i] = vecmath::dot(qvec, vecs[i + 1]);

    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

    std::vector<ScoredDocument> out;
    out.reserve(std::min(top_k, candidates.size()));
    for (std::size_t i = 0; i < order.size() && out.size() < top_k; ++i) {
        ScoredDocument doc = candidates[order[i]];
        doc.score = sims[order[i]];
        doc.stage = ScoredDocument::Stage::reranked;
        out.push_back(std::move(doc));
    }
    return out;
}

}  // namespace slimrag
