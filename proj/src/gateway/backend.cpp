#include "utilbench/gateway/backend.hpp"

#include <numeric>

#include "utilbench/errors.hpp"

namespace utilbench {

using json = nlohmann::json;

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http_openai_compatible: return "http_openai_compatible";
        case BackendKind::mock: return "mock";
        case BackendKind::introspection: return "introspection";
    }
    return "mock";
}

BackendKind backend_kind_from_string(std::string_view name) {
    if (name == "http_openai_compatible") return BackendKind::http_openai_compatible;
    if (name == "mock") return BackendKind::mock;
    if (name == "introspection") return BackendKind::introspection;
    throw ValidationError("unknown backend kind '" + std::string(name) + "'");
}

std::string_view to_string(Capability cap) {
    switch (cap) {
        case Capability::generate: return "generate";
        case Capability::score_continuation: return "score_continuation";
        case Capability::attention: return "attention";
    }
    return "generate";
}

Capability capability_from_string(std::string_view name) {
    if (name == "generate") return Capability::generate;
    if (name == "score_continuation") return Capability::score_continuation;
    if (name == "attention") return Capability::attention;
    throw ValidationError("unknown capability '" + std::string(name) + "'");
}

TokenScores make_token_scores(std::vector<std::string> tokens, std::vector<double> logprobs) {
    if (tokens.size() != logprobs.size()) {
        throw ParseError("token/logprob length mismatch");
    }
    TokenScores s;
    s.sum_logprob = std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
    s.tokens = std::move(tokens);
    s.logprobs = std::move(logprobs);
    return s;
}

TokenScores Backend::score(const ScoreRequest&) {
    throw CapabilityError("backend '" + descriptor_.backend_id + "' cannot score continuations");
}

AttentionProfile Backend::attention(const AttentionRequest&) {
    throw CapabilityError("backend '" + descriptor_.backend_id + "' exposes no attention");
}

void to_json(json& j, const TokenScores& s) {
    j = json{{"tokens", s.tokens}, {"logprobs", s.logprobs}, {"sum_logprob", s.sum_logprob}};
}

void from_json(const json& j, TokenScores& s) {
    j.at("tokens").get_to(s.tokens);
    j.at("logprobs").get_to(s.logprobs);
    j.at("sum_logprob").get_to(s.sum_logprob);
}

void to_json(json& j, const AttentionProfile& a) {
    json spans = json::array();
    for (const auto& s : a.spans) {
        spans.push_back({{"label", s.passage_id}, {"start", s.range.begin}, {"end", s.range.end}});
    }
    j = json{{"spans", spans},
             {"rows", a.per_step_mass},
             {"residual", a.residual},
             {"generated_len", a.generated_len}};
}

void from_json(const json& j, AttentionProfile& a) {
    a.spans.clear();
    for (const auto& s : j.at("spans")) {
        a.spans.push_back({s.at("label").get<std::string>(),
                           {s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()}});
    }
    j.at("rows").get_to(a.per_step_mass);
    a.residual = j.value("residual", std::vector<double>{});
    j.at("generated_len").get_to(a.generated_len);
}

void to_json(json& j, const BackendDescriptor& d) {
    json caps = json::array();
    for (auto c : d.capabilities) caps.push_back(to_string(c));
    j = json{{"backend_id", d.backend_id},
             {"kind", to_string(d.kind)},
             {"model_name", d.model_name},
             {"temperature", d.temperature},
             {"max_tokens", d.max_tokens},
             {"thinking_enabled", d.thinking_enabled},
             {"send_thinking_flag", d.send_thinking_flag},
             {"allow_nonzero_temperature", d.allow_nonzero_temperature},
             {"capabilities", caps},
             {"api_key_env", d.api_key_env}};
    if (d.endpoint) j["endpoint"] = *d.endpoint;
}

void from_json(const json& j, BackendDescriptor& d) {
    j.at("backend_id").get_to(d.backend_id);
    d.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("endpoint") && j["endpoint"].is_string()) d.endpoint = j["endpoint"].get<std::string>();
    d.model_name = j.value("model_name", d.backend_id);
    d.temperature = j.value("temperature", 0.0);
    d.max_tokens = j.value("max_tokens", 256);
    d.thinking_enabled = j.value("thinking_enabled", false);
    d.send_thinking_flag = j.value("send_thinking_flag", false);
    d.allow_nonzero_temperature = j.value("allow_nonzero_temperature", false);
    d.api_key_env = j.value("api_key_env", std::string{});
    d.capabilities.clear();
    if (j.contains("capabilities")) {
        for (const auto& c : j["capabilities"]) d.capabilities.insert(capability_from_string(c.get<std::string>()));
    } else {
        switch (d.kind) {
            case BackendKind::http_openai_compatible:
                d.capabilities = {Capability::generate};
                break;
            case BackendKind::mock:
            case BackendKind::introspection:
                d.capabilities = {Capability::generate, Capability::score_continuation, Capability::attention};
                break;
        }
    }
}

}  // namespace utilbench
