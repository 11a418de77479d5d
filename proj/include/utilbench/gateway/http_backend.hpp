#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "utilbench/gateway/backend.hpp"

namespace utilbench {

// "https://host:port/prefix" split into the pieces httplib needs.
struct Endpoint {
    std::string scheme_host_port;
    std::string path_prefix;  // no trailing slash
};

Endpoint parse_endpoint(const std::string& url);

// POSTs a JSON body and returns the parsed JSON reply. Connection failures,
// 5xx and 429 raise retryable TransportErrors; other non-2xx are fatal.
nlohmann::json post_json(const Endpoint& endpoint, const std::string& path, const nlohmann::json& body,
                         const std::string& bearer_token, std::chrono::seconds timeout);

// OpenAI-compatible chat completions. score() uses the legacy completions
// endpoint with echo + logprobs and is only offered when the descriptor
// declares score_continuation.
class OpenAiCompatibleBackend final : public Backend {
public:
    explicit OpenAiCompatibleBackend(BackendDescriptor descriptor,
                                     std::chrono::seconds timeout = std::chrono::seconds(300));

    GenerationResult generate(const GenerationRequest& request) override;
    TokenScores score(const ScoreRequest& request) override;

    // Request bodies, exposed for contract tests.
    nlohmann::json chat_body(const std::string& prompt) const;
    nlohmann::json echo_body(const std::string& prompt, const std::string& continuation) const;

    static GenerationResult parse_chat_response(const nlohmann::json& reply);
    // Keeps only tokens whose text_offset lies at or past prompt_chars.
    static TokenScores parse_echo_response(const nlohmann::json& reply, std::size_t prompt_chars);

private:
    std::string api_key() const;

    Endpoint endpoint_;
    std::chrono::seconds timeout_;
};

}  // namespace utilbench
