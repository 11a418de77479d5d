#include "utilbench/gateway/mock_backend.hpp"

#include <sstream>

#include "utilbench/errors.hpp"
#include "utilbench/text.hpp"

namespace utilbench {

using json = nlohmann::json;

bool MockKnowledgeSpec::readable(const std::string& passage_id) const {
    auto it = readable_passages.find(passage_id);
    return it != readable_passages.end() && it->second;
}

void MockKnowledgeSpec::validate() const {
    if (!(per_token_logprob_match < 0.0) || !(per_token_logprob_mismatch < 0.0)) {
        throw ValidationError("mock logprob constants must be strictly negative");
    }
}

void to_json(json& j, const MockKnowledgeSpec& s) {
    j = json{{"known_answers", s.known_answers},
             {"readable_passages", s.readable_passages},
             {"over_reliance", s.over_reliance},
             {"unknown_reply", s.unknown_reply},
             {"per_token_logprob_match", s.per_token_logprob_match},
             {"per_token_logprob_mismatch", s.per_token_logprob_mismatch}};
}

void from_json(const json& j, MockKnowledgeSpec& s) {
    s.known_answers = j.value("known_answers", std::map<std::string, std::string>{});
    s.readable_passages = j.value("readable_passages", std::map<std::string, bool>{});
    s.over_reliance = j.value("over_reliance", false);
    s.unknown_reply = j.value("unknown_reply", std::string("unknown"));
    s.per_token_logprob_match = j.value("per_token_logprob_match", -0.1);
    s.per_token_logprob_mismatch = j.value("per_token_logprob_mismatch", -2.0);
    s.validate();
}

std::string mock_generate(const MockKnowledgeSpec& spec, const Query& query,
                          std::span<const Passage> passages) {
    for (const auto& p : passages) {
        if (!spec.readable(p.id)) continue;
        const std::string text = normalize_text(p.text);
        for (const auto& answer : query.answers) {
            const std::string needle = normalize_text(answer);
            if (!needle.empty() && text.find(needle) != std::string::npos) return answer;
        }
    }
    if (!passages.empty() && spec.over_reliance) return spec.unknown_reply;
    if (auto it = spec.known_answers.find(query.id); it != spec.known_answers.end()) return it->second;
    return spec.unknown_reply;
}

bool mock_knows(const MockKnowledgeSpec& spec, const Query& query) {
    auto it = spec.known_answers.find(query.id);
    return it != spec.known_answers.end() && has_answer(it->second, query.answers) == 1;
}

bool mock_judges_useful(const MockKnowledgeSpec& spec, const Query& query, const Passage& passage,
                        const std::optional<std::string>& pseudo_answer) {
    if (!spec.readable(passage.id)) return false;
    if (pseudo_answer && !normalize_text(*pseudo_answer).empty()) {
        const std::string target[] = {*pseudo_answer};
        return has_answer(passage.text, target) == 1;
    }
    return has_answer(passage.text, query.answers) == 1;
}

MockBackend::MockBackend(BackendDescriptor descriptor, MockKnowledgeSpec spec)
    : Backend(std::move(descriptor)), spec_(std::move(spec)) {
    spec_.validate();
}

std::string MockBackend::judge_reply(const PromptContext& ctx) const {
    const bool reject_all = ctx.known_rejection && mock_knows(spec_, ctx.query);
    std::vector<std::size_t> useful;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < ctx.passages.size(); ++i) {
        if (!reject_all && mock_judges_useful(spec_, ctx.query, ctx.passages[i], ctx.pseudo_answer)) {
            useful.push_back(i + 1);
        } else {
            rest.push_back(i + 1);
        }
    }

    std::ostringstream os;
    switch (ctx.task) {
        case PromptTask::judge_pointwise:
            return useful.empty() ? "No, the passage has no utility." : "Yes, the passage has utility.";
        case PromptTask::judge_listwise:
            os << '[';
            for (std::size_t i = 0; i < useful.size(); ++i) os << (i ? ", " : "") << useful[i];
            os << ']';
            return os.str();
        case PromptTask::judge_rank: {
            useful.insert(useful.end(), rest.begin(), rest.end());
            for (std::size_t i = 0; i < useful.size(); ++i) os << (i ? " > " : "") << '[' << useful[i] << ']';
            return os.str();
        }
        case PromptTask::answer:
            break;
    }
    return mock_generate(spec_, ctx.query, ctx.passages);
}

GenerationResult MockBackend::generate(const GenerationRequest& request) {
    std::string text = spec_.unknown_reply;
    if (request.context) text = judge_reply(*request.context);
    GenerationResult r;
    r.token_count = static_cast<long>(whitespace_tokens(text).size());
    r.text = std::move(text);
    r.finish_reason = "stop";
    r.raw = json{{"mock", descriptor().backend_id}};
    return r;
}

TokenScores MockBackend::score(const ScoreRequest& request) {
    auto tokens = whitespace_tokens(request.continuation);
    bool match = false;
    if (request.continuation_passage) {
        match = spec_.readable(request.continuation_passage->id);
    } else if (request.context) {
        const std::string expected =
            mock_generate(spec_, request.context->query, request.context->passages);
        match = normalize_text(expected) == normalize_text(request.continuation);
    }
    const double lp = match ? spec_.per_token_logprob_match : spec_.per_token_logprob_mismatch;
    std::vector<double> logprobs(tokens.size(), lp);
    auto scores = make_token_scores(std::move(tokens), std::move(logprobs));
    scores.sum_logprob = lp * static_cast<double>(scores.tokens.size());  // exact, no accumulated rounding
    return scores;
}

AttentionProfile MockBackend::attention(const AttentionRequest& request) {
    AttentionProfile profile;
    profile.spans = request.spans;
    int steps = 1;
    if (request.context) {
        const auto answer = mock_generate(spec_, request.context->query, request.context->passages);
        steps = std::max<int>(1, static_cast<int>(whitespace_tokens(answer).size()));
    }

    std::size_t readable = 0;
    for (const auto& s : request.spans) readable += spec_.readable(s.passage_id) ? 1 : 0;

    std::vector<double> row(request.spans.size(), 0.0);
    for (std::size_t i = 0; i < request.spans.size(); ++i) {
        if (readable == 0) {
            row[i] = 1.0 / static_cast<double>(request.spans.size());
        } else if (spec_.readable(request.spans[i].passage_id)) {
            row[i] = 1.0 / static_cast<double>(readable);
        }
    }
    profile.per_step_mass.assign(static_cast<std::size_t>(steps), row);
    profile.residual.assign(static_cast<std::size_t>(steps), 0.0);
    profile.generated_len = steps;
    return profile;
}

json MockBackend::fingerprint() const {
    return spec_;
}

}  // namespace utilbench
