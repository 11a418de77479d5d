#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace utilbench {

// Content-addressed response store. Each entry lives in
// <dir>/<hash[0:2]>/<hash>.json as {"key": ..., "value": ...}. Without a
// directory the cache is in-memory only.
class ResponseCache {
public:
    explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

    // Hex SHA-256 of the key's canonical (sorted-key, compact) dump.
    static std::string hash_key(const nlohmann::json& key);

    std::optional<nlohmann::json> load(const nlohmann::json& key) const;
    void store(const nlohmann::json& key, const nlohmann::json& value);

    const std::optional<std::filesystem::path>& directory() const { return dir_; }

private:
    std::filesystem::path entry_path(const std::string& hash) const;

    std::optional<std::filesystem::path> dir_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, nlohmann::json> memory_;
};

}  // namespace utilbench
