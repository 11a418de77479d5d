#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace utilbench::jsonl {

// Calls fn(record, line_number) for every non-blank line. Throws ParseError
// naming the line on invalid JSON; exceptions from fn are rethrown as
// ParseError with the same location.
void read(const std::filesystem::path& path,
          const std::function<void(const nlohmann::json&, std::size_t)>& fn);

// Writes one compact JSON object per line, atomically (temp file + rename).
void write(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

template <typename T>
std::vector<T> read_all(const std::filesystem::path& path) {
    std::vector<T> out;
    read(path, [&](const nlohmann::json& j, std::size_t) { out.push_back(j.get<T>()); });
    return out;
}

template <typename T>
void write_all(const std::filesystem::path& path, const std::vector<T>& items) {
    std::vector<nlohmann::json> records;
    records.reserve(items.size());
    for (const auto& item : items) records.emplace_back(item);
    write(path, records);
}

// Atomic whole-file write used for every artifact.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace utilbench::jsonl
