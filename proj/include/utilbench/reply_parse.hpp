#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace utilbench {

// Every signed integer in the reply, in order. Values that overflow are
// returned as std::nullopt so callers can report them as out of range.
std::vector<std::optional<long long>> parse_id_list(std::string_view reply);

// First standalone, case-insensitive "yes" or "no" token.
std::optional<bool> parse_verdict(std::string_view reply);

struct ParsedSelection {
    std::vector<std::size_t> indices;  // 0-based, unique, in reply order
    std::vector<std::string> warnings;
};

// Maps 1-based identifiers onto n candidates; duplicates are removed and
// out-of-range identifiers dropped with a warning.
ParsedSelection parse_selection(std::string_view reply, std::size_t n);

struct ParsedRanking {
    std::vector<std::size_t> order;  // a permutation of 0..n-1
    std::vector<std::string> warnings;
};

// Dedupes (first occurrence wins), drops out-of-range identifiers and appends
// missing candidates in their original order.
ParsedRanking parse_ranking(std::string_view reply, std::size_t n);

}  // namespace utilbench
