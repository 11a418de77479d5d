#pragma once

#include <span>
#include <string>

#include "utilbench/gateway/gateway.hpp"
#include "utilbench/prompts.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

// One LLM as seen by the pipeline: which backend, through which gateway,
// speaking which prompt wording.
struct BackendHandle {
    Gateway& gateway;
    std::string backend_id;
    const TemplateSet& templates;
};

// One answer generation: the no-passage template when `passages` is empty,
// otherwise the with-passage template over all of them.
GenerationResult answer_query(const BackendHandle& llm, const Query& query, std::span<const Passage> passages);

}  // namespace utilbench
