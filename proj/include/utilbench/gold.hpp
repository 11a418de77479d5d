#pragma once

#include <map>
#include <span>
#include <string>

#include "utilbench/answer.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

struct BaselineAnswer {
    GenerationResult generation;
    int has_answer = 0;
};

// The LLM's answer with no passages, and whether it contains a gold answer.
BaselineAnswer answer_without_context(const BackendHandle& llm, const Query& query);

// 1 iff the answer given this single passage contains a gold answer while the
// no-passage answer does not.
int utility_indicator(const BackendHandle& llm, const Query& query, const Passage& passage);

// Passages of `candidates` whose indicator is 1, each judged in isolation.
// Any failed call aborts the whole query.
GoldUtilitySet build_gold_set(const BackendHandle& llm, const Query& query, const CandidateSet& candidates);

// known <=> the no-passage answer contains a gold answer.
std::map<std::string, KnownnessLabel> partition_known(const BackendHandle& llm, std::span<const Query> queries);

}  // namespace utilbench
