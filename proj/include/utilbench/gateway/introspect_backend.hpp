#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utilbench/gateway/backend.hpp"
#include "utilbench/gateway/http_backend.hpp"

namespace utilbench {

// Client side of the introspection service: POST /v1/introspect with
//   {"op": "generate"|"score"|"attention"|"ppl", "prompt", "continuation",
//    "spans": [{"label", "start", "end"}], "max_tokens", "temperature"}
// Spans are character ranges into the prompt; the service owns tokenization.
namespace introspect {

nlohmann::json generate_request(const std::string& prompt, int max_tokens, double temperature);
nlohmann::json score_request(const std::string& prompt, const std::string& continuation);
nlohmann::json attention_request(const std::string& prompt, const std::vector<AttentionSpan>& spans,
                                 int max_tokens, double temperature);
nlohmann::json ppl_request(const std::string& condition, const std::string& text);

// Reply validators. Each throws ParseError when the payload does not match
// the published schema (schemas/introspect-v1.json).
GenerationResult parse_generate(const nlohmann::json& reply);
TokenScores parse_score(const nlohmann::json& reply);
AttentionProfile parse_attention(const nlohmann::json& reply, const std::vector<AttentionSpan>& spans);
double parse_ppl(const nlohmann::json& reply);

}  // namespace introspect

class IntrospectionBackend final : public Backend {
public:
    explicit IntrospectionBackend(BackendDescriptor descriptor,
                                  std::chrono::seconds timeout = std::chrono::seconds(600));

    GenerationResult generate(const GenerationRequest& request) override;
    TokenScores score(const ScoreRequest& request) override;
    AttentionProfile attention(const AttentionRequest& request) override;

    double perplexity(const std::string& condition, const std::string& text);

private:
    nlohmann::json call(const nlohmann::json& body);

    Endpoint endpoint_;
    std::chrono::seconds timeout_;
};

}  // namespace utilbench
