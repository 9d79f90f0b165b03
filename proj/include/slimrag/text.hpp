#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace slimrag {

// Canonical form used everywhere answers and documents are compared:
// Unicode compatibility fold (NFKC), root-locale lowercase, every
// non-alphanumeric character treated as a separator, whitespace runs
// collapsed to single spaces, ends trimmed. Idempotent.
std::string normalize_text(std::string_view s);

// normalize_text followed by a split on spaces.
std::vector<std::string> tokenize(std::string_view s);

// True iff the normalized gold occurs in the normalized prediction as a
// whole-word phrase (both match ends fall on string ends or spaces).
// Throws InvalidInput when gold normalizes to the empty string.
bool contains_answer(std::string_view pred, std::string_view gold);

// Fraction of distinct normalized golds contained in pred. Golds that
// normalize to the empty string are unmatchable and excluded from the
// denominator. Throws InvalidInput when no usable gold remains.
double matching_ratio(std::string_view pred, const std::vector<std::string>& golds);

// True iff the whole normalized prediction equals any normalized gold.
bool strict_exact_match(std::string_view pred, const std::vector<std::string>& golds);

// Number of whitespace-separated chunks; the approximate token count used
// when an endpoint does not report usage, and the exact count the mock
// server reports.
std::size_t whitespace_tokens(std::string_view s);

}  // namespace slimrag
