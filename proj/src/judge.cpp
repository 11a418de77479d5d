#include "utilbench/judge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "utilbench/errors.hpp"
#include "utilbench/reply_parse.hpp"

namespace utilbench {

namespace {

GenerationResult ask(const BackendHandle& llm, RenderedPrompt prompt, PromptContext context) {
    GenerationRequest request;
    request.prompt = std::move(prompt.text);
    request.template_version = std::move(prompt.template_version);
    request.context = std::move(context);
    return llm.gateway.complete(llm.backend_id, request);
}

JudgmentResult blank_result(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                            JudgmentMethod method) {
    JudgmentResult r;
    r.query_id = query.id;
    r.backend_id = llm.backend_id;
    r.method = method;
    r.candidate_source = candidates.source;
    return r;
}

void log_warnings(const JudgmentResult& r) {
    for (const auto& w : r.warnings) {
        spdlog::warn("{} {} {}: {}", r.backend_id, to_string(r.method), r.query_id, w);
    }
}

}  // namespace

std::vector<std::size_t> order_by_score(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

std::string generate_pseudo_answer(const BackendHandle& llm, const Query& query, const CandidateSet& candidates) {
    if (candidates.source != CandidateSource::retrieval_topk) {
        throw ValidationError("pseudo-answers are generated from retrieval_topk candidates only");
    }
    return answer_query(llm, query, candidates.passages).text;
}

bool judge_pointwise(const BackendHandle& llm, const Query& query, const Passage& passage,
                     const std::optional<std::string>& pseudo_answer, std::vector<std::string>* warnings) {
    PromptContext ctx{PromptTask::judge_pointwise, query, {passage}, pseudo_answer, llm.templates.known_rejection()};
    const auto reply = ask(llm, render_pointwise(llm.templates, query, passage, pseudo_answer), std::move(ctx));
    const auto verdict = parse_verdict(reply.text);
    if (!verdict) {
        const std::string w = "passage " + passage.id + ": no yes/no verdict in reply; treating as no";
        spdlog::warn("{} {}: {}", llm.backend_id, query.id, w);
        if (warnings) warnings->push_back(w);
        return false;
    }
    return *verdict;
}

JudgmentResult select_pointwise(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                                const std::optional<std::string>& pseudo_answer) {
    auto r = blank_result(llm, query, candidates,
                          pseudo_answer ? JudgmentMethod::pointwise_with_answer : JudgmentMethod::pointwise);
    const auto n = candidates.passages.size();
    std::vector<char> verdicts(n, 0);
    std::vector<std::vector<std::string>> warnings(n);
    llm.gateway.parallel_for(n, [&](std::size_t i) {
        verdicts[i] = judge_pointwise(llm, query, candidates.passages[i], pseudo_answer, &warnings[i]) ? 1 : 0;
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (verdicts[i]) r.selected_ids.insert(candidates.passages[i].id);
        r.warnings.insert(r.warnings.end(), warnings[i].begin(), warnings[i].end());
    }
    return r;
}

JudgmentResult select_listwise(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                               const std::optional<std::string>& pseudo_answer) {
    auto r = blank_result(llm, query, candidates,
                          pseudo_answer ? JudgmentMethod::listwise_with_answer : JudgmentMethod::listwise);
    PromptContext ctx{PromptTask::judge_listwise, query, candidates.passages, pseudo_answer,
                      llm.templates.known_rejection()};
    const auto reply = ask(llm, render_listwise(llm.templates, query, candidates.passages, pseudo_answer), std::move(ctx));
    auto parsed = parse_selection(reply.text, candidates.passages.size());
    for (auto idx : parsed.indices) r.selected_ids.insert(candidates.passages[idx].id);
    r.warnings = std::move(parsed.warnings);
    log_warnings(r);
    return r;
}

JudgmentResult rank_verbalized(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                               const std::optional<std::string>& pseudo_answer) {
    auto r = blank_result(llm, query, candidates,
                          pseudo_answer ? JudgmentMethod::rank_verbalized_with_answer : JudgmentMethod::rank_verbalized);
    PromptContext ctx{PromptTask::judge_rank, query, candidates.passages, pseudo_answer, llm.templates.known_rejection()};
    const auto reply = ask(llm, render_rank(llm.templates, query, candidates.passages, pseudo_answer), std::move(ctx));
    auto parsed = parse_ranking(reply.text, candidates.passages.size());
    for (auto idx : parsed.order) r.ranked_ids.push_back(candidates.passages[idx].id);
    r.warnings = std::move(parsed.warnings);
    log_warnings(r);
    return r;
}

JudgmentResult score_attention(const BackendHandle& llm, const Query& query, const CandidateSet& candidates) {
    auto r = blank_result(llm, query, candidates, JudgmentMethod::rank_attention);
    const auto n = candidates.passages.size();
    if (n == 0) {
        r.scores.emplace();
        return r;
    }
    RenderedPrompt prompt = render_answer(llm.templates, query, candidates.passages);
    AttentionRequest request;
    request.spans = prompt.passage_spans;
    request.prompt = std::move(prompt.text);
    request.template_version = std::move(prompt.template_version);
    request.context = PromptContext{PromptTask::answer, query, candidates.passages, std::nullopt, false};
    const AttentionProfile profile = llm.gateway.attention_profile(llm.backend_id, request);

    std::vector<double> raw(n, 0.0);
    for (const auto& row : profile.per_step_mass) {
        if (row.size() != n) throw ParseError("attention row width does not match the candidate count");
        for (std::size_t i = 0; i < n; ++i) raw[i] += row[i];
    }
    const auto steps = profile.per_step_mass.size();
    if (steps > 0) {
        for (auto& v : raw) v /= static_cast<double>(steps);
    }
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    std::vector<double> scores(n);
    if (steps == 0 || !(total > 0.0)) {
        r.warnings.push_back("zero attention mass on passages; using uniform scores");
        std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(n));
    } else {
        for (std::size_t i = 0; i < n; ++i) scores[i] = raw[i] / total;
    }

    r.scores.emplace();
    for (std::size_t i = 0; i < n; ++i) (*r.scores)[candidates.passages[i].id] = scores[i];
    for (auto idx : order_by_score(scores)) r.ranked_ids.push_back(candidates.passages[idx].id);
    log_warnings(r);
    return r;
}

JudgmentResult score_likelihood(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                                const std::string& pseudo_answer, const JudgeOptions& options) {
    if (pseudo_answer.empty()) throw ValidationError("likelihood scoring needs a non-empty pseudo-answer");
    auto r = blank_result(llm, query, candidates, JudgmentMethod::rank_likelihood);
    const auto n = candidates.passages.size();
    std::vector<double> scores(n, 0.0);
    llm.gateway.parallel_for(n, [&](std::size_t i) {
        const Passage single[] = {candidates.passages[i]};
        RenderedPrompt prompt = render_answer(llm.templates, query, single);
        ScoreRequest request;
        request.prompt = std::move(prompt.text);
        request.continuation = pseudo_answer;
        request.template_version = std::move(prompt.template_version);
        request.context = PromptContext{PromptTask::answer, query, {candidates.passages[i]}, std::nullopt, false};
        const TokenScores ts = llm.gateway.score_continuation(llm.backend_id, request);
        if (ts.tokens.empty()) throw ValidationError("pseudo-answer scored as zero tokens");
        scores[i] = options.length_normalized_likelihood ? ts.sum_logprob / static_cast<double>(ts.tokens.size())
                                                         : ts.sum_logprob;
    });
    r.scores.emplace();
    for (std::size_t i = 0; i < n; ++i) (*r.scores)[candidates.passages[i].id] = scores[i];
    for (auto idx : order_by_score(scores)) r.ranked_ids.push_back(candidates.passages[idx].id);
    return r;
}

JudgmentResult run_method(JudgmentMethod method, const BackendHandle& llm, const Query& query,
                          const CandidateSet& candidates, const std::optional<std::string>& pseudo_answer,
                          const JudgeOptions& options) {
    if (uses_pseudo_answer(method) && !pseudo_answer) {
        throw ValidationError(std::string(to_string(method)) + " needs a pseudo-answer");
    }
    switch (method) {
        case JudgmentMethod::pointwise: return select_pointwise(llm, query, candidates, std::nullopt);
        case JudgmentMethod::pointwise_with_answer: return select_pointwise(llm, query, candidates, pseudo_answer);
        case JudgmentMethod::listwise: return select_listwise(llm, query, candidates, std::nullopt);
        case JudgmentMethod::listwise_with_answer: return select_listwise(llm, query, candidates, pseudo_answer);
        case JudgmentMethod::rank_verbalized: return rank_verbalized(llm, query, candidates, std::nullopt);
        case JudgmentMethod::rank_verbalized_with_answer: return rank_verbalized(llm, query, candidates, pseudo_answer);
        case JudgmentMethod::rank_attention: return score_attention(llm, query, candidates);
        case JudgmentMethod::rank_likelihood: return score_likelihood(llm, query, candidates, *pseudo_answer, options);
    }
    throw ValidationError("unhandled judgment method");
}

}  // namespace utilbench
