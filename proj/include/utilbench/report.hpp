#pragma once

#include <string>
#include <vector>

namespace utilbench {

// Column-aligned plain-text table; the first column is left-aligned, the
// rest right-aligned.
struct TextTable {
    std::string title;
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;

    std::string render() const;
    // RFC 4180 quoting; the title is not written.
    std::string to_csv() const;
};

std::string format_real(double v, int decimals = 4);
std::string format_percent(double v);

}  // namespace utilbench
