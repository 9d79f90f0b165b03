#include "slimrag/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "slimrag/errors.hpp"
#include "slimrag/text.hpp"

namespace slimrag {

namespace {
constexpr char kMagic[8] = {'S', 'L', 'I', 'M', 'I', 'D', 'X', '1'};
}

InvertedIndex InvertedIndex::build(const std::vector<Document>& corpus, BM25Params params) {
    if (corpus.empty()) throw BuildError("cannot build an index from an empty corpus");
    if (params.k1 <= 0.0) throw BuildError("k1 must be positive");
    if (params.b < 0.0 || params.b > 1.0) throw BuildError("b must lie in [0,1]");

    InvertedIndex index;
    index.params_ = params;
    index.docs_ = corpus;
    index.doc_lengths_.reserve(corpus.size());

    std::unordered_set<std::string> seen_ids;
    std::uint64_t total_tokens = 0;
    for (std::size_t ordinal = 0; ordinal < corpus.size(); ++ordinal) {
        const Document& d = corpus[ordinal];
        if (!seen_ids.insert(d.doc_id).second) {
            throw BuildError("duplicate doc_id: " + d.doc_id);
        }
        std::vector<std::string> tokens = tokenize(d.text);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_tokens += tokens.size();

        std::unordered_map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) {
            index.postings_[term].emplace_back(static_cast<std::uint32_t>(ordinal), count);
        }
    }
    // Ordinals were appended in corpus order, so each posting list is sorted.
    index.avg_doc_length_ =
        static_cast<double>(total_tokens) / static_cast<double>(corpus.size());
    return index;
}

std::vector<ScoredDocument> InvertedIndex::search(std::string_view query, std::size_t k) const {
    return search(query, k, params_);
}

std::vector<ScoredDocument> InvertedIndex::search(std::string_view query, std::size_t k,
                                                  const BM25Params& params) const {
    std::vector<std::string> terms = tokenize(query);
    if (terms.empty()) return {};

    const double n_docs = static_cast<double>(docs_.size());
    std::vector<double> scores(docs_.size(), 0.0);
    std::vector<char> touched(docs_.size(), 0);

    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& [ordinal, tf_raw] : it->second) {
            const double tf = static_cast<double>(tf_raw);
            const double len_norm =
                1.0 - params.b + params.b * doc_lengths_[ordinal] / avg_doc_length_;
            scores[ordinal] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm);
            touched[ordinal] = 1;
        }
    }

    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (touched[i] && scores[i] > 0.0) hits.push_back(i);
    }
    std::sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    if (hits.size() > k) hits.resize(k);

    std::vector<ScoredDocument> out;
    out.reserve(hits.size());
    for (std::size_t ordinal : hits) {
        out.push_back(ScoredDocument{docs_[ordinal], scores[ordinal], std::string(query),
                                     ScoredDocument::Stage::bm25});
    }
    return out;
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 4);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

void write_str(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw IoError("truncated index file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw IoError("truncated index file");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string read_str(std::istream& is) {
    std::uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw IoError("truncated index file");
    return s;
}

}  // namespace

void InvertedIndex::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os.write(kMagic, sizeof(kMagic));
    write_f64(os, params_.k1);
    write_f64(os, params_.b);
    write_u64(os, docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        write_str(os, docs_[i].doc_id);
        write_str(os, docs_[i].title);
        write_str(os, docs_[i].text);
        write_u32(os, doc_lengths_[i]);
    }
    write_u64(os, postings_.size());
    for (const auto& [term, plist] : postings_) {  // std::map: sorted, deterministic
        write_str(os, term);
        write_u64(os, plist.size());
        for (const auto& [ordinal, tf] : plist) {
            write_u32(os, ordinal);
            write_u32(os, tf);
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError(path + " is not a SLIMIDX1 index file");
    }

    InvertedIndex index;
    index.params_.k1 = read_f64(is);
    index.params_.b = read_f64(is);
    std::uint64_t n_docs = read_u64(is);
    index.docs_.reserve(n_docs);
    index.doc_lengths_.reserve(n_docs);
    std::uint64_t total_tokens = 0;
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        Document d;
        d.doc_id = read_str(is);
        d.title = read_str(is);
        d.text = read_str(is);
        std::uint32_t len = read_u32(is);
        index.docs_.push_back(std::move(d));
        index.doc_lengths_.push_back(len);
        total_tokens += len;
    }
    if (n_docs == 0) throw IoError(path + " holds an empty index");
    index.avg_doc_length_ = static_cast<double>(total_tokens) / static_cast<double>(n_docs);

    std::uint64_t n_terms = read_u64(is);
    for (std::uint64_t i = 0; i < n_terms; ++i) {
        std::string term = read_str(is);
        std::uint64_t n_postings = read_u64(is);
        std::vector<Posting> plist;
        plist.reserve(n_postings);
        for (std::uint64_t j = 0; j < n_postings; ++j) {
            std::uint32_t ordinal = read_u32(is);
            std::uint32_t tf = read_u32(is);
            if (ordinal >= n_docs) throw IoError(path + ": posting ordinal out of range");
            plist.emplace_back(ordinal, tf);
        }
        index.postings_.emplace(std::move(term), std::move(plist));
    }
    return index;
}

ReferenceSet merge_references(
    const std::vector<std::pair<std::string, std::vector<ScoredDocument>>>& per_query,
    std::size_t budget) {
    ReferenceSet out;
    out.per_query_provenance.reserve(per_query.size());
    for (const auto& [query, _] : per_query) {
        out.per_query_provenance.emplace_back(query, std::vector<std::string>{});
    }

    std::unordered_set<std::string> taken;
    std::vector<std::size_t> cursor(per_query.size(), 0);
    bool progressed = true;
    while (out.entries.size() < budget && progressed) {
        progressed = false;
        for (std::size_t qi = 0; qi < per_query.size() && out.entries.size() < budget; ++qi) {
            const auto& list = per_query[qi].second;
            // Advance this query's cursor past docs already taken.
            while (cursor[qi] < list.size() &&
                   taken.count(list[cursor[qi]].document.doc_id) > 0) {
                ++cursor[qi];
            }
            if (cursor[qi] >= list.size()) continue;
            const ScoredDocument& pick = list[cursor[qi]++];
            taken.insert(pick.document.doc_id);
            out.entries.push_back(pick);
            out.per_query_provenance[qi].second.push_back(pick.document.doc_id);
            progressed = true;
        }
    }
    return out;
}

}  // namespace slimrag
