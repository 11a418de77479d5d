#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "utilbench/types.hpp"

namespace utilbench {

enum class BackendKind { http_openai_compatible, mock, introspection };
enum class Capability { generate, score_continuation, attention };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view name);
std::string_view to_string(Capability cap);
Capability capability_from_string(std::string_view name);

struct BackendDescriptor {
    std::string backend_id;
    BackendKind kind = BackendKind::mock;
    std::optional<std::string> endpoint;
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 256;
    bool thinking_enabled = false;
    // Send the provider's chat-template "enable_thinking" switch. Off by
    // default because hosted APIs reject unknown request fields.
    bool send_thinking_flag = false;
    bool allow_nonzero_temperature = false;
    std::set<Capability> capabilities;
    std::string api_key_env;  // name of the environment variable holding the key

    bool has(Capability cap) const { return capabilities.count(cap) != 0; }
};

// What a prompt is asking for. Carried next to the rendered text so the mock
// backend can answer without parsing prompts; remote backends ignore it.
enum class PromptTask { answer, judge_pointwise, judge_listwise, judge_rank };

struct PromptContext {
    PromptTask task = PromptTask::answer;
    Query query;
    std::vector<Passage> passages;
    std::optional<std::string> pseudo_answer;
    bool known_rejection = false;
};

struct GenerationRequest {
    std::string prompt;
    std::string template_version;
    std::optional<PromptContext> context;
};

struct TokenScores {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
    double sum_logprob = 0.0;

    bool operator==(const TokenScores&) const = default;
};

// Builds TokenScores with sum_logprob accumulated from logprobs.
TokenScores make_token_scores(std::vector<std::string> tokens, std::vector<double> logprobs);

struct ScoreRequest {
    std::string prompt;
    std::string continuation;
    std::string template_version;
    std::optional<PromptContext> context;
    // Set when the continuation is a passage text (perplexity analysis).
    std::optional<Passage> continuation_passage;
};

// Half-open character range [begin, end) into the rendered prompt.
struct CharRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const CharRange&) const = default;
};

struct AttentionSpan {
    std::string passage_id;
    CharRange range;

    bool operator==(const AttentionSpan&) const = default;
};

struct AttentionProfile {
    std::vector<AttentionSpan> spans;
    // per_step_mass[t][s]: attention mass on span s at generated step t
    std::vector<std::vector<double>> per_step_mass;
    std::vector<double> residual;  // mass outside all spans, per step (may be empty)
    int generated_len = 0;

    bool operator==(const AttentionProfile&) const = default;
};

struct AttentionRequest {
    std::string prompt;
    std::vector<AttentionSpan> spans;
    std::string template_version;
    std::optional<PromptContext> context;
};

void to_json(nlohmann::json& j, const TokenScores& s);
void from_json(const nlohmann::json& j, TokenScores& s);
void to_json(nlohmann::json& j, const AttentionProfile& a);
void from_json(const nlohmann::json& j, AttentionProfile& a);
void to_json(nlohmann::json& j, const BackendDescriptor& d);
void from_json(const nlohmann::json& j, BackendDescriptor& d);

class Backend {
public:
    explicit Backend(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {}
    virtual ~Backend() = default;
    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    const BackendDescriptor& descriptor() const { return descriptor_; }

    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual TokenScores score(const ScoreRequest& request);
    virtual AttentionProfile attention(const AttentionRequest& request);

    // Extra cache-key material identifying backend behaviour beyond the
    // descriptor (e.g. the mock's knowledge table).
    virtual nlohmann::json fingerprint() const { return nullptr; }

private:
    BackendDescriptor descriptor_;
};

}  // namespace utilbench
