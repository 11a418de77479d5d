#include "utilbench/answer.hpp"

namespace utilbench {

GenerationResult answer_query(const BackendHandle& llm, const Query& query, std::span<const Passage> passages) {
    RenderedPrompt prompt = render_answer(llm.templates, query, passages);
    GenerationRequest request;
    request.prompt = std::move(prompt.text);
    request.template_version = std::move(prompt.template_version);
    request.context = PromptContext{PromptTask::answer, query, {passages.begin(), passages.end()}, std::nullopt, false};
    return llm.gateway.complete(llm.backend_id, request);
}

}  // namespace utilbench
