#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "utilbench/gateway/backend.hpp"
#include "utilbench/gateway/response_cache.hpp"

namespace utilbench {

// Retries transport failures, 5xx and 429 with exponential backoff:
// attempt n (1-based) that fails waits base_delay * 2^(n-1) before the next.
struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
};

struct GatewayOptions {
    std::optional<std::filesystem::path> cache_dir;
    int max_in_flight = 8;
    RetryPolicy retry;
    bool refresh = false;  // ignore cached values (still writes fresh ones)
};

struct GatewayStats {
    long backend_calls = 0;
    long cache_hits = 0;
    long retries = 0;
};

// Uniform front door to all backends: capability checks, caching, retries and
// a bound on in-flight requests. Safe for concurrent use.
class Gateway {
public:
    explicit Gateway(GatewayOptions options = {});

    // Throws ValidationError on duplicate ids or a non-zero temperature that
    // was not explicitly allowed.
    void add_backend(std::shared_ptr<Backend> backend);

    const BackendDescriptor& descriptor(const std::string& backend_id) const;
    std::vector<std::string> backend_ids() const;
    Backend& backend(const std::string& backend_id) const;

    GenerationResult complete(const std::string& backend_id, const GenerationRequest& request);
    TokenScores score_continuation(const std::string& backend_id, const ScoreRequest& request);
    AttentionProfile attention_profile(const std::string& backend_id, const AttentionRequest& request);

    // Runs fn(0..n-1) on up to max_in_flight workers. Returns one slot per
    // index; a slot holds the exception that index threw, if any.
    std::vector<std::exception_ptr> parallel_try(std::size_t n, const std::function<void(std::size_t)>& fn) const;
    // Same, but rethrows the lowest-index failure after all work finished.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const;

    GatewayStats stats() const;
    int max_in_flight() const { return options_.max_in_flight; }

private:
    nlohmann::json cache_key(const Backend& backend, std::string_view op, const nlohmann::json& payload) const;
    template <typename Call>
    auto dispatch(const std::string& backend_id, Call&& call);

    void acquire_slot() const;
    void release_slot() const;

    GatewayOptions options_;
    ResponseCache cache_;
    std::map<std::string, std::shared_ptr<Backend>> backends_;
    std::map<std::string, nlohmann::json> fingerprint_digests_;

    mutable std::mutex slot_mutex_;
    mutable std::condition_variable slot_cv_;
    mutable int in_flight_ = 0;

    mutable std::atomic<long> backend_calls_{0};
    mutable std::atomic<long> cache_hits_{0};
    mutable std::atomic<long> retries_{0};
};

}  // namespace utilbench
