#include "utilbench/reply_parse.hpp"

#include <cctype>
#include <charconv>

namespace utilbench {

std::vector<std::optional<long long>> parse_id_list(std::string_view reply) {
    std::vector<std::optional<long long>> out;
    std::size_t i = 0;
    while (i < reply.size()) {
        if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < reply.size() && std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
        const bool negative = start > 0 && reply[start - 1] == '-';
        long long value = 0;
        auto [ptr, ec] = std::from_chars(reply.data() + start, reply.data() + i, value);
        if (ec != std::errc{}) {
            out.emplace_back(std::nullopt);
        } else {
            out.emplace_back(negative ? -value : value);
        }
    }
    return out;
}

std::optional<bool> parse_verdict(std::string_view reply) {
    std::size_t i = 0;
    while (i < reply.size()) {
        while (i < reply.size() && !std::isalnum(static_cast<unsigned char>(reply[i]))) ++i;
        std::size_t start = i;
        while (i < reply.size() && std::isalnum(static_cast<unsigned char>(reply[i]))) ++i;
        std::string token;
        for (std::size_t k = start; k < i; ++k) token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(reply[k]))));
        if (token == "yes") return true;
        if (token == "no") return false;
    }
    return std::nullopt;
}

namespace {

std::string describe(const std::optional<long long>& v) {
    return v ? std::to_string(*v) : std::string("<overflow>");
}

}  // namespace

ParsedSelection parse_selection(std::string_view reply, std::size_t n) {
    ParsedSelection out;
    const auto ids = parse_id_list(reply);
    if (ids.empty()) {
        // "[]" is a deliberate empty selection, anything else is unparseable
        if (reply.find('[') == std::string_view::npos || reply.find(']') == std::string_view::npos) {
            out.warnings.push_back("unparseable selection reply; selecting nothing");
        }
        return out;
    }
    std::vector<bool> seen(n, false);
    for (const auto& v : ids) {
        if (!v || *v < 1 || static_cast<unsigned long long>(*v) > n) {
            out.warnings.push_back("dropped out-of-range passage id " + describe(v));
            continue;
        }
        const auto idx = static_cast<std::size_t>(*v - 1);
        if (!seen[idx]) {
            seen[idx] = true;
            out.indices.push_back(idx);
        }
    }
    return out;
}

ParsedRanking parse_ranking(std::string_view reply, std::size_t n) {
    ParsedRanking out;
    const auto ids = parse_id_list(reply);
    if (ids.empty() && n > 0) out.warnings.push_back("unparseable ranking reply; keeping retrieval order");
    std::vector<bool> seen(n, false);
    for (const auto& v : ids) {
        if (!v || *v < 1 || static_cast<unsigned long long>(*v) > n) {
            out.warnings.push_back("dropped out-of-range passage id " + describe(v));
            continue;
        }
        const auto idx = static_cast<std::size_t>(*v - 1);
        if (!seen[idx]) {
            seen[idx] = true;
            out.order.push_back(idx);
        }
    }
    std::size_t missing = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) {
            out.order.push_back(i);
            ++missing;
        }
    }
    if (missing > 0 && !ids.empty()) {
        out.warnings.push_back("appended " + std::to_string(missing) + " unranked passages in retrieval order");
    }
    return out;
}

}  // namespace utilbench
