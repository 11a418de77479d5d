#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "utilbench/gateway/backend.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

inline constexpr std::string_view kKnownRejectionSentence =
    "If you can answer the question without the passages, all the passages do not have utility for you.";

enum class TemplateKind { answer_no_passage, answer_with_passages, pointwise, listwise, rank };

std::string_view to_string(TemplateKind kind);

// Placeholders: {query} {passages} {passage} {pseudo_answer} {count}.
// {known_rejection} is resolved when the template is built, so the stored
// body already contains (or omits) the rejection sentence.
struct PromptTemplate {
    std::string name;
    std::string version;
    std::string body;
    bool known_rejection = false;

    // Cache-key material; changes whenever the wording or flag changes.
    std::string version_tag() const;
};

// Throws ValidationError when a placeholder required by `kind` is missing,
// or when known_rejection is requested but the body has no marker for it.
PromptTemplate make_template(TemplateKind kind, std::string version, std::string raw_body, bool known_rejection);

class TemplateSet {
public:
    static TemplateSet defaults(bool known_rejection = false);
    // Reads <name>.<version>.txt files from dir; kinds without a file fall
    // back to the built-in wording.
    static TemplateSet load(const std::filesystem::path& dir, bool known_rejection = false);

    const PromptTemplate& get(TemplateKind kind) const { return templates_.at(kind); }
    bool known_rejection() const { return known_rejection_; }

private:
    std::map<TemplateKind, PromptTemplate> templates_;
    bool known_rejection_ = false;
};

// Raw built-in body (with the {known_rejection} marker unresolved).
std::string_view default_template_body(TemplateKind kind);

struct RenderedPrompt {
    std::string text;
    std::string template_version;
    // Character range of each passage (title + text) inside `text`.
    std::vector<AttentionSpan> passage_spans;
};

// Passages are numbered 1..n in the prompt as "[i] title: text".
RenderedPrompt render_answer(const TemplateSet& set, const Query& query, std::span<const Passage> passages);
RenderedPrompt render_pointwise(const TemplateSet& set, const Query& query, const Passage& passage,
                                const std::optional<std::string>& pseudo_answer);
RenderedPrompt render_listwise(const TemplateSet& set, const Query& query, std::span<const Passage> passages,
                               const std::optional<std::string>& pseudo_answer);
RenderedPrompt render_rank(const TemplateSet& set, const Query& query, std::span<const Passage> passages,
                           const std::optional<std::string>& pseudo_answer);

}  // namespace utilbench
