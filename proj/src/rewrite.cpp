#include "slimrag/rewrite.hpp"

#include <algorithm>
#include <cctype>

#include "slimrag/errors.hpp"
#include "slimrag/prompts.hpp"

namespace slimrag {

namespace {

constexpr const char* kClaimTok = "<Claim>";
constexpr const char* kQueryTok = "<Query>";

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

struct Marker {
    std::size_t pos;
    bool is_claim;
    std::size_t text_start;
};

std::vector<Marker> find_markers(const std::string& raw) {
    std::vector<Marker> out;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        std::size_t claim_at = raw.find(kClaimTok, pos);
        std::size_t query_at = raw.find(kQueryTok, pos);
        if (claim_at == std::string::npos && query_at == std::string::npos) break;
        if (claim_at < query_at) {
            out.push_back({claim_at, true, claim_at + 7});
            pos = claim_at + 7;
        } else {
            out.push_back({query_at, false, query_at + 7});
            pos = query_at + 7;
        }
    }
    return out;
}

bool starts_with_ci(const std::string& s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) !=
            std::tolower(static_cast<unsigned char>(word[i])))
            return false;
    }
    return true;
}

std::size_t skip_ws(const std::string& s, std::size_t pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos;
}

// Reads "<Name(" at pos, then text up to the parenthesis that balances the
// opener, then ">". Returns the inner text and advances pos past the token,
// or returns nullopt leaving pos untouched.
std::optional<std::string> read_paren_token(const std::string& s, std::size_t& pos,
                                            std::string_view name) {
    std::size_t p = skip_ws(s, pos);
    std::string opener = "<" + std::string(name) + "(";
    if (!starts_with_ci(s, p, opener)) return std::nullopt;
    p += opener.size();
    std::size_t start = p;
    int depth = 1;
    while (p < s.size() && depth > 0) {
        if (s[p] == '(') ++depth;
        else if (s[p] == ')') --depth;
        ++p;
    }
    if (depth != 0) return std::nullopt;
    std::size_t end = p - 1;
    std::size_t after = skip_ws(s, p);
    if (after >= s.size() || s[after] != '>') return std::nullopt;
    pos = after + 1;
    return std::string(s.substr(start, end - start));
}

}  // namespace

bool operator==(const ClaimQuery& a, const ClaimQuery& b) {
    return a.claim == b.claim && a.query == b.query && a.needs_search == b.needs_search;
}

ParsedRewrite parse_rewrite_output(const std::string& raw) {
    ParsedRewrite out;
    auto markers = find_markers(raw);

    std::optional<std::string> pending_claim;
    for (std::size_t i = 0; i < markers.size(); ++i) {
        std::size_t text_end = i + 1 < markers.size() ? markers[i + 1].pos : raw.size();
        std::string text = trim(std::string_view(raw).substr(
            markers[i].text_start, text_end - markers[i].text_start));

        if (markers[i].is_claim) {
            if (pending_claim)
                out.warnings.push_back("claim without query dropped: " + *pending_claim);
            if (text.empty()) {
                out.warnings.push_back("empty claim dropped");
                pending_claim.reset();
            } else {
                pending_claim = text;
            }
            continue;
        }

        if (pending_claim) {
            if (text.empty()) {
                out.warnings.push_back("claim with empty query dropped: " + *pending_claim);
            } else {
                out.claim_queries.push_back({*pending_claim, text, std::nullopt});
            }
            pending_claim.reset();
        } else {
            if (text.empty()) {
                out.warnings.push_back("empty question-level query dropped");
            } else {
                if (!out.claim_queries.empty())
                    out.warnings.push_back(
                        "question-level query after claim units (possible token "
                        "collision): " + text);
                out.question_queries.push_back(text);
            }
        }
    }
    if (pending_claim)
        out.warnings.push_back("claim without query dropped: " + *pending_claim);

    if (out.question_queries.empty() && out.claim_queries.empty())
        throw ParseError("no rewrite units found in output");
    return out;
}

std::string format_rewrite_output(const std::vector<std::string>& question_queries,
                                  const std::vector<ClaimQuery>& claim_queries) {
    std::string out;
    for (const auto& q : question_queries) {
        if (!out.empty()) out += " ";
        out += std::string(kQueryTok) + " " + q;
    }
    for (const auto& cq : claim_queries) {
        if (!out.empty()) out += " ";
        out += std::string(kClaimTok) + " " + cq.claim + " " + kQueryTok + " " + cq.query;
    }
    return out;
}

RewriteOutcome rewrite(Gateway& gateway, const ModelEndpoint& rewriter,
                       const std::string& question, const std::string& heuristic_answer) {
    if (question.empty()) throw InvalidInput("rewrite: question is empty");
    if (heuristic_answer.empty()) throw InvalidInput("rewrite: heuristic answer is empty");

    TemplateSlots slots;
    slots.question = question;
    slots.heuristic_answer = heuristic_answer;
    auto messages = render(TemplateId::rewrite, slots);

    ChatParams params;
    params.temperature = 0.0;
    params.max_tokens = 512;

    RewriteOutcome out;
    out.exchange = gateway.chat(rewriter, messages, params);

    ParsedRewrite parsed;
    try {
        parsed = parse_rewrite_output(out.exchange.response_text);
    } catch (const ParseError& e) {
        throw RewriteError(std::string("rewriter output unparseable: ") + e.what(),
                           out.exchange.response_text);
    }
    out.warnings = std::move(parsed.warnings);
    out.result.question_queries = std::move(parsed.question_queries);
    out.result.claim_queries = std::move(parsed.claim_queries);
    out.result.raw_output = out.exchange.response_text;
    if (out.result.question_queries.empty())
        out.result.question_queries.push_back(question);
    return out;
}

FilterOutcome filter_claim_queries(const std::vector<ClaimQuery>& pairs,
                                   const JudgeFn& judge_fn) {
    FilterOutcome out;
    for (const auto& pair : pairs) {
        bool keep;
        try {
            Verdict verdict = judge_fn(pair.query, pair.claim);
            keep = !verdict.known;
        } catch (const std::exception& e) {
            keep = true;
            out.warnings.push_back("claim filter judge failed, query kept: " +
                                   pair.query + " (" + e.what() + ")");
        }
        if (keep) out.kept_queries.push_back(pair.query);
    }
    return out;
}

std::string build_annotation_request(const std::string& question,
                                     const std::string& heuristic_answer) {
    if (question.empty()) throw InvalidInput("annotation request: question is empty");
    if (heuristic_answer.empty())
        throw InvalidInput("annotation request: heuristic answer is empty");
    TemplateSlots slots;
    slots.question = question;
    slots.heuristic_answer = heuristic_answer;
    return render_text(TemplateId::annotation_gpt4, slots);
}

AnnotationParse parse_annotation_output(const std::string& raw) {
    AnnotationParse out;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        std::size_t probe = pos;
        auto claim = read_paren_token(raw, probe, "Claim");
        if (!claim) {
            ++pos;
            continue;
        }
        pos = probe;
        auto search = read_paren_token(raw, pos, "Search");
        if (!search) {
            out.warnings.push_back("claim without search flag dropped: " + *claim);
            continue;
        }
        std::string flag = trim(*search);
        std::transform(flag.begin(), flag.end(), flag.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (flag != "true" && flag != "false") {
            out.warnings.push_back("unrecognized search flag dropped: " + *search);
            continue;
        }
        bool needs_search = flag == "true";
        auto query = read_paren_token(raw, pos, "Query");

        ClaimQuery entry;
        entry.claim = trim(*claim);
        entry.needs_search = needs_search;
        if (query) entry.query = trim(*query);
        if (entry.claim.empty()) {
            out.warnings.push_back("empty claim dropped");
            continue;
        }
        if (needs_search && entry.query.empty()) {
            out.warnings.push_back("search-required claim lacks a query, dropped: " +
                                   entry.claim);
            continue;
        }
        out.entries.push_back(std::move(entry));
    }
    if (out.entries.empty()) throw ParseError("no annotation triples found in output");
    return out;
}

}  // namespace slimrag
