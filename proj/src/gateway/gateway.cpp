#include "utilbench/gateway/gateway.hpp"

#include <thread>

#include <spdlog/spdlog.h>

#include "utilbench/errors.hpp"

namespace utilbench {

using json = nlohmann::json;

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)), cache_(options_.cache_dir) {
    if (options_.max_in_flight < 1) throw ValidationError("concurrency limit must be >= 1");
    if (options_.retry.max_attempts < 1) throw ValidationError("retry attempts must be >= 1");
}

void Gateway::add_backend(std::shared_ptr<Backend> backend) {
    const auto& d = backend->descriptor();
    if (d.backend_id.empty()) throw ValidationError("backend id must not be empty");
    if (d.temperature != 0.0 && !d.allow_nonzero_temperature) {
        throw ValidationError("backend '" + d.backend_id +
                              "': temperature must be 0 unless allow_nonzero_temperature is set");
    }
    const auto fp = backend->fingerprint();
    if (!backends_.emplace(d.backend_id, backend).second) {
        throw ValidationError("duplicate backend id '" + d.backend_id + "'");
    }
    fingerprint_digests_[d.backend_id] = fp.is_null() ? nlohmann::json(nullptr) : nlohmann::json(ResponseCache::hash_key(fp));
}

Backend& Gateway::backend(const std::string& backend_id) const {
    auto it = backends_.find(backend_id);
    if (it == backends_.end()) throw ValidationError("unknown backend '" + backend_id + "'");
    return *it->second;
}

const BackendDescriptor& Gateway::descriptor(const std::string& backend_id) const {
    return backend(backend_id).descriptor();
}

std::vector<std::string> Gateway::backend_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : backends_) ids.push_back(id);
    return ids;
}

json Gateway::cache_key(const Backend& backend, std::string_view op, const json& payload) const {
    const auto& d = backend.descriptor();
    return json{{"op", op},
                {"backend_id", d.backend_id},
                {"kind", to_string(d.kind)},
                {"model_name", d.model_name},
                {"params",
                 {{"temperature", d.temperature},
                  {"max_tokens", d.max_tokens},
                  {"thinking_enabled", d.thinking_enabled}}},
                {"fingerprint", fingerprint_digests_.at(d.backend_id)},
                {"payload", payload}};
}

namespace {

// The mock reads the structured context, so it must be part of its key.
json context_digest(const BackendDescriptor& d, const std::optional<PromptContext>& ctx) {
    if (d.kind != BackendKind::mock || !ctx) return nullptr;
    json ids = json::array();
    for (const auto& p : ctx->passages) ids.push_back(p.id);
    return json{{"task", static_cast<int>(ctx->task)},
                {"query_id", ctx->query.id},
                {"passage_ids", ids},
                {"pseudo_answer", ctx->pseudo_answer ? json(*ctx->pseudo_answer) : json(nullptr)},
                {"known_rejection", ctx->known_rejection}};
}

void require(const BackendDescriptor& d, Capability cap) {
    if (!d.has(cap)) {
        throw CapabilityError("backend '" + d.backend_id + "' lacks capability " + std::string(to_string(cap)));
    }
}

}  // namespace

void Gateway::acquire_slot() const {
    std::unique_lock lock(slot_mutex_);
    slot_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
}

void Gateway::release_slot() const {
    {
        std::lock_guard lock(slot_mutex_);
        --in_flight_;
    }
    slot_cv_.notify_one();
}

template <typename Call>
auto Gateway::dispatch(const std::string& backend_id, Call&& call) {
    for (int attempt = 1;; ++attempt) {
        acquire_slot();
        try {
            ++backend_calls_;
            auto result = call();
            release_slot();
            return result;
        } catch (const TransportError& e) {
            release_slot();
            if (!e.retryable() || attempt >= options_.retry.max_attempts) throw;
            const auto delay = options_.retry.base_delay * (1L << (attempt - 1));
            spdlog::warn("{}: attempt {} failed ({}), retrying in {} ms", backend_id, attempt, e.what(),
                         delay.count());
            ++retries_;
            std::this_thread::sleep_for(delay);
        } catch (...) {
            release_slot();
            throw;
        }
    }
}

GenerationResult Gateway::complete(const std::string& backend_id, const GenerationRequest& request) {
    Backend& b = backend(backend_id);
    require(b.descriptor(), Capability::generate);
    const json key = cache_key(b, "generate",
                               {{"template_version", request.template_version},
                                {"prompt", request.prompt},
                                {"context", context_digest(b.descriptor(), request.context)}});
    if (!options_.refresh) {
        if (auto hit = cache_.load(key)) {
            ++cache_hits_;
            return hit->get<GenerationResult>();
        }
    }
    GenerationResult result = dispatch(backend_id, [&] { return b.generate(request); });
    cache_.store(key, result);
    return result;
}

TokenScores Gateway::score_continuation(const std::string& backend_id, const ScoreRequest& request) {
    Backend& b = backend(backend_id);
    require(b.descriptor(), Capability::score_continuation);
    const json key = cache_key(
        b, "score",
        {{"template_version", request.template_version},
         {"prompt", request.prompt},
         {"continuation", request.continuation},
         {"continuation_passage", request.continuation_passage ? json(request.continuation_passage->id) : json(nullptr)},
         {"context", context_digest(b.descriptor(), request.context)}});
    if (!options_.refresh) {
        if (auto hit = cache_.load(key)) {
            ++cache_hits_;
            return hit->get<TokenScores>();
        }
    }
    TokenScores result = dispatch(backend_id, [&] { return b.score(request); });
    cache_.store(key, result);
    return result;
}

AttentionProfile Gateway::attention_profile(const std::string& backend_id, const AttentionRequest& request) {
    Backend& b = backend(backend_id);
    require(b.descriptor(), Capability::attention);
    json spans = json::array();
    for (const auto& s : request.spans) spans.push_back({s.passage_id, s.range.begin, s.range.end});
    const json key = cache_key(b, "attention",
                               {{"template_version", request.template_version},
                                {"prompt", request.prompt},
                                {"spans", spans},
                                {"context", context_digest(b.descriptor(), request.context)}});
    if (!options_.refresh) {
        if (auto hit = cache_.load(key)) {
            ++cache_hits_;
            return hit->get<AttentionProfile>();
        }
    }
    AttentionProfile result = dispatch(backend_id, [&] { return b.attention(request); });
    cache_.store(key, result);
    return result;
}

std::vector<std::exception_ptr> Gateway::parallel_try(std::size_t n,
                                                      const std::function<void(std::size_t)>& fn) const {
    std::vector<std::exception_ptr> errors(n);
    if (n == 0) return errors;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(options_.max_in_flight));
    if (workers <= 1) {
        worker();
        return errors;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();  // joins
    return errors;
}

void Gateway::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const {
    for (const auto& e : parallel_try(n, fn)) {
        if (e) std::rethrow_exception(e);
    }
}

GatewayStats Gateway::stats() const {
    return {backend_calls_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace utilbench
