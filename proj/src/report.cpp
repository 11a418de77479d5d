#include "utilbench/report.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "utilbench/errors.hpp"

namespace utilbench {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string TextTable::render() const {
    std::vector<std::size_t> width(headers.size(), 0);
    for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
    for (const auto& row : rows) {
        if (row.size() != headers.size()) throw ValidationError("table row width does not match its header");
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }

    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) os << "  ";
            if (c == 0) {
                os << fmt::format("{:<{}}", cells[c], width[c]);
            } else {
                os << fmt::format("{:>{}}", cells[c], width[c]);
            }
        }
        os << '\n';
    };
    if (!title.empty()) os << title << '\n';
    line(headers);
    std::size_t total = 0;
    for (auto w : width) total += w;
    total += headers.empty() ? 0 : 2 * (headers.size() - 1);
    os << std::string(total, '-') << '\n';
    for (const auto& row : rows) line(row);
    return os.str();
}

std::string TextTable::to_csv() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) os << (c ? "," : "") << csv_field(cells[c]);
        os << '\n';
    };
    line(headers);
    for (const auto& row : rows) line(row);
    return os.str();
}

std::string format_real(double v, int decimals) { return fmt::format("{:.{}f}", v, decimals); }

std::string format_percent(double v) { return fmt::format("{:.2f}", 100.0 * v); }

}  // namespace utilbench
