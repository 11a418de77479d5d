#pragma once

#include <map>
#include <span>
#include <string>

#include "utilbench/gateway/backend.hpp"

namespace utilbench {

// Deterministic stand-in for an LLM: a knowledge table plus per-passage
// readability. Answers follow four ordered rules (see mock_generate).
struct MockKnowledgeSpec {
    std::map<std::string, std::string> known_answers;  // query id -> reply
    std::map<std::string, bool> readable_passages;     // passage id -> readable
    bool over_reliance = false;
    std::string unknown_reply = "unknown";
    double per_token_logprob_match = -0.1;
    double per_token_logprob_mismatch = -2.0;

    bool readable(const std::string& passage_id) const;
    // Throws ValidationError unless both logprob constants are < 0.
    void validate() const;
};

void to_json(nlohmann::json& j, const MockKnowledgeSpec& s);
void from_json(const nlohmann::json& j, MockKnowledgeSpec& s);

// (a) first readable passage containing a gold answer -> that answer;
// (b) passages given and over_reliance -> unknown_reply;
// (c) known query -> known answer; (d) unknown_reply.
std::string mock_generate(const MockKnowledgeSpec& spec, const Query& query,
                          std::span<const Passage> passages);

// Whether the mock, acting as a judge, considers the passage useful. A
// pseudo-answer replaces the gold answers as the target when present.
bool mock_judges_useful(const MockKnowledgeSpec& spec, const Query& query, const Passage& passage,
                        const std::optional<std::string>& pseudo_answer);

// True when the mock answers the query correctly from its own table.
bool mock_knows(const MockKnowledgeSpec& spec, const Query& query);

class MockBackend final : public Backend {
public:
    MockBackend(BackendDescriptor descriptor, MockKnowledgeSpec spec);

    const MockKnowledgeSpec& spec() const { return spec_; }

    GenerationResult generate(const GenerationRequest& request) override;
    TokenScores score(const ScoreRequest& request) override;
    AttentionProfile attention(const AttentionRequest& request) override;
    nlohmann::json fingerprint() const override;

private:
    std::string judge_reply(const PromptContext& ctx) const;

    MockKnowledgeSpec spec_;
};

}  // namespace utilbench
