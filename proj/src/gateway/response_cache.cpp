#include "utilbench/gateway/response_cache.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "utilbench/jsonl.hpp"

namespace utilbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

ResponseCache::ResponseCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {
    if (dir_) fs::create_directories(*dir_);
}

std::string ResponseCache::hash_key(const json& key) {
    const std::string data = key.dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

fs::path ResponseCache::entry_path(const std::string& hash) const {
    return *dir_ / hash.substr(0, 2) / (hash + ".json");
}

std::optional<json> ResponseCache::load(const json& key) const {
    const std::string hash = hash_key(key);
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(hash); it != memory_.end()) return it->second;
    if (!dir_) return std::nullopt;

    std::ifstream in(entry_path(hash));
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    json entry = json::parse(buf.str(), nullptr, false);
    // a torn or foreign file is treated as a miss and later overwritten
    if (entry.is_discarded() || !entry.contains("value") || entry.value("key", json{}) != key) {
        return std::nullopt;
    }
    memory_.emplace(hash, entry["value"]);
    return entry["value"];
}

void ResponseCache::store(const json& key, const json& value) {
    const std::string hash = hash_key(key);
    std::lock_guard lock(mutex_);
    memory_[hash] = value;
    if (dir_) {
        jsonl::write_file(entry_path(hash), json{{"key", key}, {"value", value}}.dump() + "\n");
    }
}

}  // namespace utilbench
