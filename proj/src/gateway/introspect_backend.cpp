#include "utilbench/gateway/introspect_backend.hpp"

#include <cmath>

#include "utilbench/errors.hpp"

namespace utilbench {

using json = nlohmann::json;

namespace introspect {

namespace {

const json& field(const json& reply, const char* name) {
    if (!reply.is_object() || !reply.contains(name)) {
        throw ParseError(std::string("introspection reply lacks '") + name + "'");
    }
    return reply[name];
}

double finite_number(const json& v, const char* what) {
    if (!v.is_number()) throw ParseError(std::string("introspection ") + what + " is not a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(std::string("introspection ") + what + " is not finite");
    return d;
}

}  // namespace

json generate_request(const std::string& prompt, int max_tokens, double temperature) {
    return {{"op", "generate"}, {"prompt", prompt}, {"max_tokens", max_tokens}, {"temperature", temperature}};
}

json score_request(const std::string& prompt, const std::string& continuation) {
    return {{"op", "score"}, {"prompt", prompt}, {"continuation", continuation}};
}

json attention_request(const std::string& prompt, const std::vector<AttentionSpan>& spans, int max_tokens,
                       double temperature) {
    json js = json::array();
    for (const auto& s : spans) js.push_back({{"label", s.passage_id}, {"start", s.range.begin}, {"end", s.range.end}});
    return {{"op", "attention"},
            {"prompt", prompt},
            {"spans", js},
            {"max_tokens", max_tokens},
            {"temperature", temperature}};
}

json ppl_request(const std::string& condition, const std::string& text) {
    return {{"op", "ppl"}, {"prompt", condition}, {"continuation", text}};
}

GenerationResult parse_generate(const json& reply) {
    GenerationResult r;
    const auto& text = field(reply, "text");
    if (!text.is_string()) throw ParseError("introspection text is not a string");
    r.text = text.get<std::string>();
    r.finish_reason = reply.value("finish_reason", std::string("stop"));
    const auto& count = field(reply, "token_count");
    if (!count.is_number_integer()) throw ParseError("introspection token_count is not an integer");
    r.token_count = count.get<long>();
    r.raw = reply;
    return r;
}

TokenScores parse_score(const json& reply) {
    const auto& tokens = field(reply, "tokens");
    const auto& logprobs = field(reply, "logprobs");
    if (!tokens.is_array() || !logprobs.is_array() || tokens.size() != logprobs.size()) {
        throw ParseError("introspection tokens/logprobs must be arrays of equal length");
    }
    std::vector<std::string> toks;
    std::vector<double> lps;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!tokens[i].is_string()) throw ParseError("introspection token is not a string");
        const double lp = finite_number(logprobs[i], "logprob");
        if (lp > 0.0) throw ParseError("introspection logprob is positive");
        toks.push_back(tokens[i].get<std::string>());
        lps.push_back(lp);
    }
    TokenScores s = make_token_scores(std::move(toks), std::move(lps));
    const double reported = finite_number(field(reply, "sum_logprob"), "sum_logprob");
    if (std::abs(reported - s.sum_logprob) > 1e-6) {
        throw ParseError("introspection sum_logprob disagrees with its logprobs");
    }
    s.sum_logprob = reported;
    return s;
}

AttentionProfile parse_attention(const json& reply, const std::vector<AttentionSpan>& spans) {
    const auto& labels = field(reply, "labels");
    const auto& rows = field(reply, "rows");
    if (!labels.is_array() || labels.size() != spans.size()) {
        throw ParseError("introspection attention labels do not match the requested spans");
    }
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (labels[i] != spans[i].passage_id) throw ParseError("introspection attention label order differs");
    }
    if (!rows.is_array()) throw ParseError("introspection attention rows must be an array");
    AttentionProfile a;
    a.spans = spans;
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != spans.size()) throw ParseError("introspection attention row has wrong width");
        std::vector<double> r;
        for (const auto& v : row) {
            const double m = finite_number(v, "attention mass");
            if (m < 0.0) throw ParseError("introspection attention mass is negative");
            r.push_back(m);
        }
        a.per_step_mass.push_back(std::move(r));
    }
    if (reply.contains("residual")) {
        for (const auto& v : reply["residual"]) a.residual.push_back(finite_number(v, "residual"));
        if (a.residual.size() != a.per_step_mass.size()) throw ParseError("introspection residual length differs");
    }
    const auto& len = field(reply, "generated_len");
    if (!len.is_number_integer() || len.get<long>() != static_cast<long>(a.per_step_mass.size())) {
        throw ParseError("introspection generated_len must equal the number of rows");
    }
    a.generated_len = len.get<int>();
    return a;
}

double parse_ppl(const json& reply) {
    const double ppl = finite_number(field(reply, "ppl"), "ppl");
    if (ppl < 1.0) throw ParseError("introspection ppl below 1");
    return ppl;
}

}  // namespace introspect

IntrospectionBackend::IntrospectionBackend(BackendDescriptor descriptor, std::chrono::seconds timeout)
    : Backend(std::move(descriptor)), timeout_(timeout) {
    if (!this->descriptor().endpoint) {
        throw ValidationError("backend '" + this->descriptor().backend_id + "' needs an endpoint");
    }
    endpoint_ = parse_endpoint(*this->descriptor().endpoint);
}

json IntrospectionBackend::call(const json& body) {
    try {
        return post_json(endpoint_, "/v1/introspect", body, {}, timeout_);
    } catch (const TransportError& e) {
        if (e.status() == 422) throw ParseError(std::string("introspection rejected request: ") + e.what());
        throw;
    }
}

GenerationResult IntrospectionBackend::generate(const GenerationRequest& request) {
    const auto& d = descriptor();
    return introspect::parse_generate(call(introspect::generate_request(request.prompt, d.max_tokens, d.temperature)));
}

TokenScores IntrospectionBackend::score(const ScoreRequest& request) {
    return introspect::parse_score(call(introspect::score_request(request.prompt, request.continuation)));
}

AttentionProfile IntrospectionBackend::attention(const AttentionRequest& request) {
    const auto& d = descriptor();
    return introspect::parse_attention(
        call(introspect::attention_request(request.prompt, request.spans, d.max_tokens, d.temperature)),
        request.spans);
}

double IntrospectionBackend::perplexity(const std::string& condition, const std::string& text) {
    return introspect::parse_ppl(call(introspect::ppl_request(condition, text)));
}

}  // namespace utilbench
