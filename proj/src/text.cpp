#include "slimrag/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <set>

#include "slimrag/errors.hpp"

namespace slimrag {

namespace {

const icu::Normalizer2& nfkc() {
    UErrorCode ec = U_ZERO_ERROR;
    const icu::Normalizer2* inst = icu::Normalizer2::getNFKCInstance(ec);
    if (U_FAILURE(ec) || inst == nullptr) {
        throw Error("ICU NFKC normalizer unavailable");
    }
    return *inst;
}

void append_utf8(std::string& out, UChar32 cp) {
    icu::UnicodeString one(cp);
    one.toUTF8String(out);
}

}  // namespace

std::string normalize_text(std::string_view s) {
    if (s.empty()) return {};

    icu::UnicodeString us = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int>(s.size())));

    UErrorCode ec = U_ZERO_ERROR;
    icu::UnicodeString folded = nfkc().normalize(us, ec);
    if (U_FAILURE(ec)) throw Error("NFKC normalization failed");
    folded.toLower(icu::Locale::getRoot());

    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (int32_t i = 0; i < folded.length();) {
        UChar32 cp = folded.char32At(i);
        i += U16_LENGTH(cp);
        if (u_isalnum(cp)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            append_utf8(out, cp);
        } else {
            // Whitespace, punctuation, symbols, controls all act as separators.
            pending_space = true;
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::string norm = normalize_text(s);
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < norm.size()) {
        std::size_t end = norm.find(' ', start);
        if (end == std::string::npos) end = norm.size();
        if (end > start) tokens.emplace_back(norm.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

namespace {

// Whole-word phrase search over already normalized strings.
bool contains_normalized(const std::string& pred, const std::string& gold) {
    if (gold.empty()) return false;
    std::size_t pos = 0;
    while ((pos = pred.find(gold, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || pred[pos - 1] == ' ';
        std::size_t end = pos + gold.size();
        bool right_ok = end == pred.size() || pred[end] == ' ';
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

}  // namespace

bool contains_answer(std::string_view pred, std::string_view gold) {
    std::string gold_norm = normalize_text(gold);
    if (gold_norm.empty()) {
        throw InvalidInput("gold answer normalizes to empty string");
    }
    return contains_normalized(normalize_text(pred), gold_norm);
}

double matching_ratio(std::string_view pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw InvalidInput("matching_ratio requires a non-empty gold set");

    std::set<std::string> distinct;
    for (const auto& g : golds) {
        std::string norm = normalize_text(g);
        if (!norm.empty()) distinct.insert(std::move(norm));
    }
    if (distinct.empty()) {
        throw InvalidInput("every gold answer normalizes to empty string");
    }

    std::string pred_norm = normalize_text(pred);
    std::size_t matched = 0;
    for (const auto& g : distinct) {
        if (contains_normalized(pred_norm, g)) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(distinct.size());
}

bool strict_exact_match(std::string_view pred, const std::vector<std::string>& golds) {
    std::string pred_norm = normalize_text(pred);
    for (const auto& g : golds) {
        if (!pred_norm.empty() && pred_norm == normalize_text(g)) return true;
    }
    return false;
}

std::size_t whitespace_tokens(std::string_view s) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : s) {
        bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

}  // namespace slimrag
