#pragma once

#include <optional>
#include <string>

#include "utilbench/answer.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

struct JudgeOptions {
    // Rank likelihood by mean instead of summed token logprob (ablation).
    bool length_normalized_likelihood = false;
};

// Answer over the full retrieval candidate list. Callers reuse one
// pseudo-answer per (backend, query) for every method.
std::string generate_pseudo_answer(const BackendHandle& llm, const Query& query, const CandidateSet& candidates);

// True iff the reply's first yes/no token is "yes". Unparseable replies
// count as "no" and append a warning when `warnings` is given.
bool judge_pointwise(const BackendHandle& llm, const Query& query, const Passage& passage,
                     const std::optional<std::string>& pseudo_answer, std::vector<std::string>* warnings = nullptr);

JudgmentResult select_pointwise(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                                const std::optional<std::string>& pseudo_answer);
JudgmentResult select_listwise(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                               const std::optional<std::string>& pseudo_answer);
JudgmentResult rank_verbalized(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                               const std::optional<std::string>& pseudo_answer);

// Mean attention mass per passage over generated steps, normalized to sum 1.
JudgmentResult score_attention(const BackendHandle& llm, const Query& query, const CandidateSet& candidates);

// Log-likelihood of the pseudo-answer given each passage on its own; scores
// are reported in log space.
JudgmentResult score_likelihood(const BackendHandle& llm, const Query& query, const CandidateSet& candidates,
                                const std::string& pseudo_answer, const JudgeOptions& options = {});

// Dispatches one of the eight method variants. `pseudo_answer` is required
// by the *_with_answer variants and likelihood.
JudgmentResult run_method(JudgmentMethod method, const BackendHandle& llm, const Query& query,
                          const CandidateSet& candidates, const std::optional<std::string>& pseudo_answer,
                          const JudgeOptions& options = {});

// Candidate indices sorted by descending score; ties keep retrieval order.
std::vector<std::size_t> order_by_score(const std::vector<double>& scores);

}  // namespace utilbench
