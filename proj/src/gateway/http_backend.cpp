#include "utilbench/gateway/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>

#include "utilbench/errors.hpp"

namespace utilbench {

using json = nlohmann::json;

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint '" + url + "' lacks a scheme");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ValidationError("endpoint '" + url + "' must be http or https");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    if (path_start == std::string::npos) {
        e.scheme_host_port = url;
    } else {
        e.scheme_host_port = url.substr(0, path_start);
        e.path_prefix = url.substr(path_start);
        while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
    }
    if (e.scheme_host_port.size() <= scheme_end + 3) throw ValidationError("endpoint '" + url + "' lacks a host");
    return e;
}

json post_json(const Endpoint& endpoint, const std::string& path, const json& body,
               const std::string& bearer_token, std::chrono::seconds timeout) {
    httplib::Client client(endpoint.scheme_host_port);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

    const std::string full_path = endpoint.path_prefix + path;
    auto res = client.Post(full_path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + full_path + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("POST " + full_path + ": HTTP " + std::to_string(res->status) + " " + res->body,
                             true, res->status);
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("POST " + full_path + ": HTTP " + std::to_string(res->status) + " " + res->body,
                             false, res->status);
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw ParseError("POST " + full_path + ": reply is not JSON");
    return reply;
}

OpenAiCompatibleBackend::OpenAiCompatibleBackend(BackendDescriptor descriptor, std::chrono::seconds timeout)
    : Backend(std::move(descriptor)), timeout_(timeout) {
    if (!this->descriptor().endpoint) {
        throw ValidationError("backend '" + this->descriptor().backend_id + "' needs an endpoint");
    }
    endpoint_ = parse_endpoint(*this->descriptor().endpoint);
}

std::string OpenAiCompatibleBackend::api_key() const {
    const auto& env = descriptor().api_key_env;
    if (env.empty()) return {};
    const char* value = std::getenv(env.c_str());
    return value ? std::string(value) : std::string{};
}

json OpenAiCompatibleBackend::chat_body(const std::string& prompt) const {
    const auto& d = descriptor();
    json body{{"model", d.model_name},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
              {"temperature", d.temperature},
              {"max_tokens", d.max_tokens}};
    if (d.send_thinking_flag) {
        body["chat_template_kwargs"] = {{"enable_thinking", d.thinking_enabled}};
    }
    return body;
}

json OpenAiCompatibleBackend::echo_body(const std::string& prompt, const std::string& continuation) const {
    return json{{"model", descriptor().model_name},
                {"prompt", prompt + continuation},
                {"max_tokens", 0},
                {"temperature", 0.0},
                {"echo", true},
                {"logprobs", 0}};
}

GenerationResult OpenAiCompatibleBackend::parse_chat_response(const json& reply) {
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        throw ParseError("chat completion reply has no choices");
    }
    const auto& choice = reply["choices"][0];
    GenerationResult r;
    const auto& message = choice.value("message", json::object());
    if (message.contains("content") && message["content"].is_string()) {
        r.text = message["content"].get<std::string>();
    }
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        r.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (reply.contains("usage") && reply["usage"].contains("completion_tokens")) {
        r.token_count = reply["usage"]["completion_tokens"].get<long>();
    }
    if (r.finish_reason == "stop" && !message.contains("content")) {
        throw ParseError("chat completion finished normally without content");
    }
    r.raw = reply;
    return r;
}

TokenScores OpenAiCompatibleBackend::parse_echo_response(const json& reply, std::size_t prompt_chars) {
    if (!reply.contains("choices") || reply["choices"].empty()) throw ParseError("completion reply has no choices");
    const auto& lp = reply["choices"][0].value("logprobs", json{});
    if (!lp.is_object() || !lp.contains("tokens") || !lp.contains("token_logprobs") || !lp.contains("text_offset")) {
        throw ParseError("completion reply lacks echoed logprobs");
    }
    const auto& tokens = lp["tokens"];
    const auto& logprobs = lp["token_logprobs"];
    const auto& offsets = lp["text_offset"];
    if (tokens.size() != logprobs.size() || tokens.size() != offsets.size()) {
        throw ParseError("echoed logprob arrays differ in length");
    }
    std::vector<std::string> out_tokens;
    std::vector<double> out_lp;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (offsets[i].get<std::size_t>() < prompt_chars) continue;
        if (!logprobs[i].is_number()) throw ParseError("null logprob inside continuation");
        out_tokens.push_back(tokens[i].get<std::string>());
        out_lp.push_back(logprobs[i].get<double>());
    }
    return make_token_scores(std::move(out_tokens), std::move(out_lp));
}

GenerationResult OpenAiCompatibleBackend::generate(const GenerationRequest& request) {
    return parse_chat_response(post_json(endpoint_, "/chat/completions", chat_body(request.prompt), api_key(), timeout_));
}

TokenScores OpenAiCompatibleBackend::score(const ScoreRequest& request) {
    if (!descriptor().has(Capability::score_continuation)) return Backend::score(request);
    const json reply = post_json(endpoint_, "/completions", echo_body(request.prompt, request.continuation),
                                 api_key(), timeout_);
    return parse_echo_response(reply, request.prompt.size());
}

}  // namespace utilbench
